import math
import random

import pytest
from hypothesis import given, strategies as st

from wilsonsearch.primes import is_prime_64, sieve_interval
from wilsonsearch.search import SearchConfig, run_search
from wilsonsearch.verify import (
    check_record,
    horner,
    multipoint_eval,
    naive_factorial_mod,
    naive_wilson_residues,
    poly_mul,
    poly_rem,
    recompute,
    sqrt_factorial_mod,
    sqrt_half_factorial,
)
from wilsonsearch.wilson import WilsonRecord


@pytest.mark.parametrize("n, m, r", [(6, 49, 34), (0, 10, 1), (12, 169, 168), (10, 1, 0), (300, 10**30 + 7, None)])
def test_naive_examples(n, m, r):
    want = math.factorial(n) % m
    assert r is None or want == r
    assert naive_factorial_mod(n, m) == want


def test_naive_lockstep_matches_math_factorial():
    ps = sieve_interval(0, 3000)
    got = naive_wilson_residues(ps)
    assert got == {p: math.factorial(p - 1) % (p * p) for p in ps}
    assert naive_wilson_residues([]) == {}


@pytest.mark.parametrize("p, r", [(13, 168), (7, 34), (5, 24), (3, 2)])
def test_sqrt_examples(p, r):
    assert sqrt_factorial_mod(p) == r


def test_sqrt_rejects_even():
    with pytest.raises(ValueError):
        sqrt_factorial_mod(2)


@pytest.mark.parametrize("p", [10**6 + 3, 10**7 + 19])
def test_sqrt_large_against_naive(p):
    assert is_prime_64(p)
    assert sqrt_factorial_mod(p) == naive_factorial_mod(p - 1, p * p)


def test_sqrt_matches_naive_below_20000():
    ps = sieve_interval(2, 20000)
    naive = naive_wilson_residues(ps)
    assert all(sqrt_factorial_mod(p) == naive[p] for p in ps)


def test_half_factorial_matches_naive():
    for p in sieve_interval(2, 3000):
        assert sqrt_half_factorial(p) == naive_factorial_mod((p - 1) // 2, p * p)


@pytest.mark.slow
def test_sqrt_random_primes_to_1e8():
    # reference: the e-reduced tree search, which shares no code with the
    # polynomial method; the naive product costs ~20 s per prime at this size
    rng = random.Random(2024)
    ps = set()
    while len(ps) < 100:
        p = rng.randrange(10**5, 10**8) | 1
        if is_prime_64(p):
            ps.add(p)
    for p in sorted(ps):
        rec = run_search(SearchConfig(p - 1, p)).records[0]
        assert sqrt_factorial_mod(p) == rec.residue, p


coeffs = st.lists(st.integers(0, 10**12), min_size=1, max_size=65)


@given(coeffs, coeffs, st.sampled_from([97, 169, 10**9 + 7, (10**6 + 3) ** 2]))
def test_poly_mul_schoolbook_oracle(a, b, m):
    want = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            want[i + j] += x * y
    got = poly_mul(a, b, m)
    want = [x % m for x in want]
    assert got + [0] * (len(want) - len(got)) == want


@given(coeffs, st.lists(st.integers(0, 10**6), min_size=1, max_size=30), st.sampled_from([169, 10**9 + 7]))
def test_poly_rem_against_evaluation(a, roots, m):
    b = [1]
    for r in roots:
        b = poly_mul(b, [(-r) % m, 1], m)
    rem = poly_rem(a, b, m)
    assert len(rem) < len(b) or all(c == 0 for c in rem[len(b) - 1 :])
    for r in roots:
        assert horner(rem, r, m) == horner(a, r, m)


@given(
    st.lists(st.integers(0, 10**14), min_size=1, max_size=65),
    st.lists(st.integers(0, 10**7), min_size=1, max_size=40),
    st.sampled_from([101 * 101, 99991**2, 2**61 - 1]),
)
def test_multipoint_matches_horner(poly, points, m):
    assert multipoint_eval(poly, points, m) == [horner(poly, x, m) for x in points]


def test_multipoint_empty():
    assert multipoint_eval([1, 2, 3], [], 97) == []


@pytest.mark.parametrize("method", ["naive", "sqrt", "reduce2"])
def test_check_record_agree(method):
    rep = check_record(WilsonRecord.from_residue(5, 24), method)
    assert rep.agree and rep.minus_one_mod_p
    assert rep.residues[method] == 24


def test_check_record_disagree():
    rec = WilsonRecord(7, 33 % 7, 33 // 7, 0)
    rep = check_record(rec, "naive")
    assert not rep.agree
    assert rep.residues == {"record": 33, "naive": 34}


def test_check_record_multiple_methods():
    rep = check_record(WilsonRecord.from_residue(13, 168), ("naive", "sqrt", "reduce2"))
    assert rep.agree and set(rep.residues) == {"record", "naive", "sqrt", "reduce2"}


def test_check_record_known_near_miss():
    p = 56151923
    rec = WilsonRecord.from_residue(p, sqrt_factorial_mod(p))
    assert rec.w == -1
    assert check_record(rec, "sqrt").agree


def test_recompute_unknown_method():
    with pytest.raises(ValueError):
        recompute(7, "magic")
