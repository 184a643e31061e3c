"""Reducing (p - 1)! mod p^2 to f! mod p^2 with f = (p - 1)/e.

For each e in a set of admissible moduli a prime p = 1 (mod e) only needs
f! mod p^2 from the tree stage; the rest comes from a root of unity mod p,
its Teichmuller lift, a correction term C, and a product gamma built from a
generator theta of a degree-one prime of Z[zeta_e] above p.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd, lcm, prod

import numpy as np

from . import cyclotomic
from .cyclotomic import CLASS_NUMBER_ONE, get_field
from .wilson import IntegrityError, reduce2_recover

DEFAULT_E_SET = CLASS_NUMBER_ONE


@lru_cache(maxsize=None)
def _factor(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    q = 2
    while q * q <= n:
        while n % q == 0:
            out[q] = out.get(q, 0) + 1
            n //= q
        q += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class ESet:
    """A set of admissible even e."""

    values: tuple[int, ...] = DEFAULT_E_SET

    def __post_init__(self):
        vals = tuple(sorted(set(int(e) for e in self.values)))
        if not vals:
            raise ValueError("empty e set")
        if any(e < 2 or e % 2 for e in vals):
            raise ValueError(f"e values must be even and >= 2: {vals}")
        if vals[0] != 2:
            raise ValueError("the e set must contain 2 so that every odd prime is covered")
        object.__setattr__(self, "values", vals)

    @classmethod
    def parse(cls, text: str) -> "ESet":
        """'full', or a comma-separated list such as '2,4,6'."""
        text = text.strip()
        if text == "full":
            return cls()
        return cls(tuple(int(t) for t in text.split(",") if t.strip()))

    @cached_property
    def q(self) -> int:
        return lcm(*self.values)

    def b(self, k: int) -> int:
        """Largest e in the set with k = 1 (mod e)."""
        return max(e for e in self.values if (k - 1) % e == 0)

    def __contains__(self, e: int) -> bool:
        return e in self.values


def best_e(p: int, s: ESet | None = None) -> int:
    """Largest e in s dividing p - 1."""
    if p < 3 or p % 2 == 0:
        raise ValueError(f"p must be an odd prime, got {p}")
    s = s or ESet()
    cands = [e for e in s.values if (p - 1) % e == 0]
    if not cands:
        raise ValueError(f"no e in {s.values} divides {p - 1}")
    return max(cands)


def savings(s: ESet) -> tuple[Fraction, int]:
    """(R_S, Q_S): the average of 1/b_S(k) over k in (Z/Q_S)^*.

    k is grouped by t = gcd(k - 1, Q_S), which determines b_S(k); the size of
    each class is multiplicative over the prime powers of Q_S.
    """
    q = s.q
    fac = sorted(_factor(q).items())
    phi = prod(r ** (a - 1) * (r - 1) for r, a in fac)
    # per prime: list of (exponent b, count of residues k with v_r(k-1) = b)
    local = []
    for r, a in fac:
        opts = [(0, r ** (a - 1) * (r - 2))]
        opts += [(b, r ** (a - b) - r ** (a - b - 1)) for b in range(1, a)]
        opts.append((a, 1))
        local.append([(r ** b, c) for b, c in opts if c])
    total = Fraction(0)
    classes = [(1, 1)]
    for opts in local:
        classes = [(t * tb, n * c) for t, n in classes for tb, c in opts]
    for t, n in classes:
        b = max(e for e in s.values if t % e == 0)
        total += Fraction(n, b)
    return total / phi, q


def savings_bruteforce(s: ESet) -> Fraction:
    """Direct enumeration over (Z/Q_S)^*; only for small Q_S."""
    q = s.q
    ks = [k for k in range(1, q + 1) if gcd(k, q) == 1]
    return sum(Fraction(1, s.b(k)) for k in ks) / len(ks)


# ---------------------------------------------------------------------------
# Stage 3


def _order_is(w: int, e: int, p: int) -> bool:
    if pow(w, e, p) != 1:
        return False
    return all(pow(w, e // q, p) != 1 for q in _factor(e))


def find_root_of_unity(p: int, e: int, seed: int = 0) -> int:
    """A residue of exact order e mod p, as x^((p - 1)/e) for random x."""
    if (p - 1) % e:
        raise ValueError(f"{e} does not divide {p} - 1")
    if e == 2:
        return p - 1
    f = (p - 1) // e
    rng = random.Random(f"{seed}:{p}:{e}")
    for _ in range(64 * e):
        w = pow(rng.randrange(1, p), f, p)
        if _order_is(w, e, p):
            return w
    raise IntegrityError(f"no element of order {e} found mod {p}")


def teichmuller_lift(p: int, w0: int) -> int:
    """The root of unity mod p^3 congruent to w0 mod p."""
    return pow(w0, p * p, p ** 3)


def lift_digits(p: int, w: int) -> tuple[int, ...]:
    """Base-p digits of a residue, least significant first."""
    out = []
    while w:
        w, r = divmod(w, p)
        out.append(r)
    return tuple(out) or (0,)


def correction_C(p: int, e: int, w: int) -> int:
    """C = (1/p) sum_{j=1}^{e-1} ((1 - w^j)^p - (1 - w^j)) mod p."""
    m = p * p
    total = 0
    wj = 1
    for _ in range(1, e):
        wj = wj * w % m
        a = (1 - wj) % m
        total += pow(a, p, m) - a
    total %= m
    if total % p:
        raise IntegrityError(f"correction sum not divisible by p={p}")
    return total // p % p


def _correction_C_fermat(p: int, e: int, w: int) -> int:
    """Same quantity as correction_C, accumulated as a Fermat quotient sum."""
    m = p * p
    total = 0
    wj = 1
    for _ in range(1, e):
        wj = wj * w % m
        a = (1 - wj) % m
        total += a * ((pow(a, p - 1, m) - 1) // p)
    return total % p


@lru_cache(maxsize=None)
def _gamma_indices(e: int, d: int) -> tuple[tuple[int, tuple[int, ...]], ...]:
    """(c, (c^-1 k mod e)_k) for every unit c mod e."""
    out = []
    for c in range(1, e):
        if gcd(c, e) == 1:
            ci = pow(c, -1, e)
            out.append((c, tuple(ci * k % e for k in range(d))))
    return tuple(out)


def gamma_factor(p: int, e: int, w: int, theta) -> int:
    """gamma = (1/p) prod_{(c, e) = 1} g(w^(c^-1))^c mod p^2, theta = g(zeta)."""
    if e == 2:
        return 1
    m3 = p ** 3
    g = [int(x) for x in theta]
    powers = [1] * e
    for k in range(1, e):
        powers[k] = powers[k - 1] * w % m3
    acc = 1
    for c, idx in _gamma_indices(e, len(g)):
        val = sum(gk * powers[i] for gk, i in zip(g, idx)) % m3
        acc = acc * pow(val, c, m3) % m3
    if acc % p:
        raise IntegrityError("Stickelberger product is not divisible by p")
    gamma = acc // p % (p * p)
    if gamma % p == 0:
        raise IntegrityError("Stickelberger product is divisible by p^2")
    return gamma


@dataclass
class Stage3Context:
    """Per-prime data for recovering (p - 1)! from f!."""

    p: int
    e: int
    f: int
    omega0: int
    omega: int
    C: int
    theta: np.ndarray | None
    gamma: int
    powers0: list[int] = field(default_factory=list, repr=False)

    def index_of(self, r: int) -> int:
        """The i with omega0^i = -r (mod p)."""
        target = (-r) % self.p
        for i, v in enumerate(self.powers0):
            if v == target:
                return i
        raise IntegrityError(
            f"p={self.p}, e={self.e}: {target} is not a power of omega0"
        )

    def validate(self) -> None:
        """Cheap consistency checks on the inputs of gamma and C.

        gamma itself is covered by stage3_root_check.
        """
        p, e = self.p, self.e
        if not _order_is(self.omega0, e, p):
            raise IntegrityError(f"omega0 has wrong order mod {p}")
        if self.omega % p != self.omega0 or pow(self.omega, e, p ** 3) != 1:
            raise IntegrityError(f"bad Teichmuller lift mod {p}^3")
        if e == 2:
            c2 = (pow(2, p, p * p) - 2) // p % p
            if self.C != c2 or self.gamma != 1:
                raise IntegrityError(f"bad e=2 constants for p={p}")
            return
        if self.C != _correction_C_fermat(p, e, self.omega):
            raise IntegrityError(f"correction term mismatch for p={p}")
        acc = 0
        for c in reversed([int(x) for x in self.theta]):
            acc = (acc * self.omega0 + c) % p
        if acc:
            raise IntegrityError(f"theta is not in (p, zeta - omega0) for p={p}")


def stage3_context(
    p: int, e: int, seed: int = 0, *, omega0: int | None = None, theta=None
) -> Stage3Context:
    if (p - 1) % e:
        raise ValueError(f"{e} does not divide {p} - 1")
    w0 = find_root_of_unity(p, e, seed) if omega0 is None else omega0 % p
    if not _order_is(w0, e, p):
        raise IntegrityError(f"omega0 = {w0} does not have order {e} mod {p}")
    w = teichmuller_lift(p, w0)
    if e == 2:
        c = (pow(2, p, p * p) - 2) // p % p
        th, gamma = None, 1
    else:
        c = correction_C(p, e, w)
        fld = get_field(e)
        if theta is None:
            th = cyclotomic.cyclo_gcd(
                fld, fld.rational(p), fld.zeta_power(1) - fld.rational(w0), seed=seed
            )
        else:
            th = fld.element(theta)
        gamma = gamma_factor(p, e, w, th)
    powers0 = [1] * e
    for k in range(1, e):
        powers0[k] = powers0[k - 1] * w0 % p
    return Stage3Context(p, e, (p - 1) // e, w0, w, c, th, gamma, powers0)


def twisted_factorial(p: int, e: int, f_fact: int, ctx: Stage3Context) -> int:
    """r' = (-f!)^e gamma (1 + pC) mod p^2, equal to a root of unity times (p - 1)!."""
    m = p * p
    return pow(-f_fact % m, e, m) * ctx.gamma % m * (1 + p * ctx.C) % m


def recover_wilson(p: int, e: int, f_fact: int, ctx: Stage3Context) -> int:
    """(p - 1)! mod p^2 from f! mod p^2, f = (p - 1)/e."""
    if ctx.p != p or ctx.e != e:
        raise ValueError("context does not match (p, e)")
    if e == 2:
        return reduce2_recover(p, f_fact)
    m = p * p
    r = twisted_factorial(p, e, f_fact, ctx)
    i = ctx.index_of(r)
    return pow(ctx.omega, (e - i) % e, m) * r % m


def stage3_root_check(p: int, e: int, f_fact: int, gamma: int, C: int | None = None) -> bool:
    """True iff (-f!)^e gamma is an e-th root of unity mod p.

    C does not enter: 1 + pC = 1 (mod p).
    """
    v = pow(-f_fact % p, e, p) * gamma % p
    return pow(v, e, p) == 1
