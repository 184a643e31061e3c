import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from wilsonsearch import identities as ids
from wilsonsearch.cyclotomic import CLASS_NUMBER_ONE, get_field
from wilsonsearch.identities import ESet
from wilsonsearch.primes import sieve_interval
from wilsonsearch.verify import naive_factorial_mod
from wilsonsearch.wilson import IntegrityError, quotient_from_residue

P, E, W0 = 3333331, 18, 1819843
THETA = [-4, 10, 3, 7, -10, -5]
F_FACT = 461190 + 275007 * P


def digits(p, r):
    return r % p, r // p % p


def orders(p):
    """Oracle: multiplicative order of every residue, by repeated multiplication."""
    out = {}
    for x in range(1, p):
        k, y = 1, x
        while y != 1:
            y, k = y * x % p, k + 1
        out[x] = k
    return out


@pytest.mark.parametrize("p, e", [(13, 12), (11, 10), (3333331, 90), (7, 6), (97, 48), (5, 4)])
def test_best_e(p, e):
    assert ids.best_e(p) == e
    assert (p - 1) % e == 0


def test_best_e_rejects_even():
    with pytest.raises(ValueError):
        ids.best_e(2)


def test_eset_parsing():
    assert ESet.parse("full") == ESet()
    assert ESet.parse("2,6,4").values == (2, 4, 6)
    assert ESet.parse("2").q == 2
    for bad in ("3,2", "4,6", ""):
        with pytest.raises(ValueError):
            ESet.parse(bad)


def test_eset_b():
    s = ESet((2, 4, 6))
    assert [s.b(k) for k in (1, 5, 7, 11)] == [6, 4, 6, 2]


@pytest.mark.parametrize(
    "values, q, r",
    [
        ((2,), 2, Fraction(1, 2)),
        ((2, 4, 6), 12, Fraction(13, 48)),
        (CLASS_NUMBER_ONE, 6983776800, Fraction(22695187978681, 201921527808000)),
    ],
)
def test_savings_values(values, q, r):
    assert ids.savings(ESet(values)) == (r, q)


@pytest.mark.parametrize("values", [(2,), (2, 4), (2, 4, 6), (2, 6, 8, 20), (2, 10, 12, 18), (2, 16, 30)])
def test_savings_against_bruteforce(values):
    s = ESet(values)
    assert ids.savings(s)[0] == ids.savings_bruteforce(s)


@given(st.sets(st.sampled_from(CLASS_NUMBER_ONE[1:]), max_size=8), st.sampled_from(CLASS_NUMBER_ONE[1:]))
def test_savings_bounded_and_monotone(extra, more):
    small = ESet((2, *extra))
    big = ESet((2, *extra, more))
    r_small, r_big = ids.savings(small)[0], ids.savings(big)[0]
    assert 0 < r_big <= r_small <= 1


@pytest.mark.parametrize("p, e, allowed", [(13, 4, {5, 8}), (5, 4, {2, 3})])
def test_find_root_of_unity_small(p, e, allowed):
    ordtab = orders(p)
    assert {x for x, k in ordtab.items() if k == e} == allowed
    assert {ids.find_root_of_unity(p, e, seed) for seed in range(20)} <= allowed


def test_find_root_of_unity_e2_and_determinism():
    assert ids.find_root_of_unity(101, 2) == 100
    assert ids.find_root_of_unity(P, E, 7) == ids.find_root_of_unity(P, E, 7)
    with pytest.raises(ValueError):
        ids.find_root_of_unity(13, 5)


def test_teichmuller_examples():
    assert ids.teichmuller_lift(5, 2) == 57
    assert 57 % 5 == 2 and pow(57, 4, 125) == 1
    assert ids.teichmuller_lift(13, 1) == 1
    w = ids.teichmuller_lift(P, W0)
    assert ids.lift_digits(P, w) == (1819843, 1422487, 90367)


def harmonic(p, f):
    return -sum(pow(r, -1, p) for r in range(1, f + 1)) % p


@pytest.mark.parametrize("p, e, c", [(3333331, 18, 418399), (5, 4, 4), (13, 4, 9)])
def test_correction_C_examples(p, e, c):
    w = ids.teichmuller_lift(p, ids.find_root_of_unity(p, e))
    assert ids.correction_C(p, e, w) == c
    assert harmonic(p, (p - 1) // e) == c


def test_correction_C_bad_lift():
    # 5 has order 4 mod 13 but is not its own lift, so C comes out wrong
    assert ids.teichmuller_lift(13, 5) != 5
    assert ids.correction_C(13, 4, 5) != harmonic(13, 3)
    ctx = ids.stage3_context(13, 4, omega0=5)
    broken = ids.Stage3Context(**{**ctx.__dict__, "omega": 5})
    with pytest.raises(IntegrityError):
        broken.validate()


def admissible_pairs(lo, hi):
    for p in sieve_interval(lo, hi):
        for e in CLASS_NUMBER_ONE:
            if (p - 1) % e == 0:
                yield p, e


def test_correction_C_harmonic_identity():
    for p, e in admissible_pairs(3, 3000):
        w = ids.teichmuller_lift(p, ids.find_root_of_unity(p, e))
        assert ids.correction_C(p, e, w) == harmonic(p, (p - 1) // e)
        assert ids._correction_C_fermat(p, e, w) == harmonic(p, (p - 1) // e)


def test_gamma_worked_example():
    fld = get_field(E)
    w = ids.teichmuller_lift(P, W0)
    g = ids.gamma_factor(P, E, w, fld.element(THETA))
    assert digits(P, g) == (1628187, 503367)


def test_gamma_rejects_wrong_theta():
    fld = get_field(E)
    w = ids.teichmuller_lift(P, W0)
    with pytest.raises(IntegrityError):
        ids.gamma_factor(P, E, w, fld.element([1, 1]))


def test_worked_example_recovery():
    ctx = ids.stage3_context(P, E, omega0=W0, theta=THETA)
    assert ctx.C == 418399
    tw = ids.twisted_factorial(P, E, F_FACT, ctx)
    assert digits(P, tw) == (1780730, 2171988)
    assert ctx.index_of(tw) == 3
    r = ids.recover_wilson(P, E, F_FACT, ctx)
    assert digits(P, r) == (3333330, 27003)
    assert quotient_from_residue(P, r) == 27004
    assert ids.stage3_root_check(P, E, F_FACT, ctx.gamma, ctx.C)
    assert not ids.stage3_root_check(P, E, F_FACT, ctx.gamma + 1, ctx.C)


@pytest.mark.parametrize("p, e, r", [(5, 4, 24), (13, 12, 168), (7, 2, 34)])
def test_recover_small(p, e, r):
    f = (p - 1) // e
    ff = naive_factorial_mod(f, p * p)
    assert naive_factorial_mod(p - 1, p * p) == r
    ctx = ids.stage3_context(p, e)
    ctx.validate()
    assert ids.stage3_root_check(p, e, ff, ctx.gamma, ctx.C)
    assert ids.recover_wilson(p, e, ff, ctx) == r


def test_recover_p5_index():
    ctx = ids.stage3_context(5, 4, omega0=2)
    assert ctx.index_of(ids.twisted_factorial(5, 4, 1, ctx)) in range(4)


def test_recover_context_mismatch():
    ctx = ids.stage3_context(13, 4)
    with pytest.raises(ValueError):
        ids.recover_wilson(13, 12, 1, ctx)


def test_validate_catches_corruption():
    ctx = ids.stage3_context(P, E, omega0=W0, theta=THETA)
    ctx.validate()
    for name, bad in [("C", ctx.C ^ 1), ("omega", ctx.omega ^ 2), ("omega0", ctx.omega0 ^ 1)]:
        broken = ids.Stage3Context(**{**ctx.__dict__, name: bad})
        with pytest.raises(IntegrityError):
            broken.validate()
    broken = ids.Stage3Context(**{**ctx.__dict__, "theta": get_field(E).element([-3, 10, 3, 7, -10, -5])})
    with pytest.raises(IntegrityError):
        broken.validate()


def test_recover_invariant_under_root_and_associate():
    fld = get_field(12)
    for p in [13, 37, 61, 73, 97, 109, 1009]:
        ff = naive_factorial_mod((p - 1) // 12, p * p)
        want = naive_factorial_mod(p - 1, p * p)
        roots = {x for x in range(1, p) if ids._order_is(x, 12, p)}
        assert len(roots) == 4
        for w0 in roots:
            base = ids.stage3_context(p, 12, omega0=w0)
            units = [fld.zeta_power(1), fld.rational(-1), *fld._unit_basis[0]]
            for u in units:
                th = list(fld.mul(base.theta, u))
                ctx = ids.stage3_context(p, 12, omega0=w0, theta=th)
                ctx.validate()
                assert ids.recover_wilson(p, 12, ff, ctx) == want


@given(st.sampled_from(list(admissible_pairs(3, 20000))), st.integers(0, 100))
def test_recovery_random_seeds(pair, seed):
    p, e = pair
    ff = naive_factorial_mod((p - 1) // e, p * p)
    ctx = ids.stage3_context(p, e, seed)
    ctx.validate()
    assert ids.recover_wilson(p, e, ff, ctx) == naive_factorial_mod(p - 1, p * p)


def test_recovery_every_admissible_e_small():
    for p, e in admissible_pairs(3, 2000):
        ff = naive_factorial_mod((p - 1) // e, p * p)
        ctx = ids.stage3_context(p, e)
        assert ids.recover_wilson(p, e, ff, ctx) == naive_factorial_mod(p - 1, p * p)
