"""Independent checks of (p - 1)! mod p^2.

Nothing here touches the tree code or GMP: the naive product and the
baby-step/giant-step polynomial method use only built-in integers, so an
error in the fast path cannot be reproduced here by a shared kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import isqrt
from typing import Sequence

import numpy as np

from .wilson import WilsonRecord, reduce2_recover

NAIVE_BLOCK = 256
SCHOOLBOOK_DEGREE = 32


def naive_factorial_mod(n: int, m: int) -> int:
    """n! mod m, multiplying 2, 3, ..., n in order.

    Consecutive factors are taken in blocks of ``NAIVE_BLOCK`` and reduced
    modulo m after each block.
    """
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    r = 1 % m
    for a in range(2, n + 1, NAIVE_BLOCK):
        r = r * math.prod(range(a, min(a + NAIVE_BLOCK, n + 1))) % m
    return r


def naive_wilson_residues(primes: Sequence[int]) -> dict[int, int]:
    """{p: (p - 1)! mod p^2} for many small primes at once.

    One sequential product per prime, run in lockstep across all primes with
    int64 arrays; requires max(p)^3 < 2^63.
    """
    ps = np.asarray(sorted(primes), dtype=np.int64)
    if not ps.size:
        return {}
    top = int(ps[-1])
    if top ** 3 >= 1 << 63:
        raise ValueError("primes too large for the vectorised naive product")
    mods = ps * ps
    res = np.ones_like(ps) % mods
    first = 0
    for k in range(2, top):
        while ps[first] <= k:
            first += 1
        res[first:] = res[first:] * k % mods[first:]
    return dict(zip(ps.tolist(), res.tolist()))


# ---------------------------------------------------------------------------
# Polynomials over Z/MZ, coefficient lists low degree first.


def _trim(a: list[int]) -> list[int]:
    while len(a) > 1 and a[-1] == 0:
        a.pop()
    return a


def _pack(a: Sequence[int], width: int) -> int:
    return int.from_bytes(b"".join(x.to_bytes(width, "little") for x in a), "little")


def poly_mul(a: Sequence[int], b: Sequence[int], m: int) -> list[int]:
    """a * b over Z/mZ: schoolbook when small, Kronecker substitution otherwise."""
    if not a or not b:
        return [0]
    if min(len(a), len(b)) <= SCHOOLBOOK_DEGREE:
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return [x % m for x in out]
    a, b = [x % m for x in a], [x % m for x in b]
    bound = min(len(a), len(b)) * (m - 1) ** 2
    width = (bound.bit_length() + 8) // 8
    prod = _pack(a, width) * _pack(b, width)
    raw = prod.to_bytes(width * (len(a) + len(b)), "little")
    n = len(a) + len(b) - 1
    return [int.from_bytes(raw[k * width : (k + 1) * width], "little") % m for k in range(n)]


def _series_inverse(f: list[int], n: int, m: int) -> list[int]:
    """g with f g = 1 mod x^n, for f[0] = 1 (Newton iteration)."""
    g = [1]
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        fg = poly_mul(f[:prec], g, m)[:prec]
        corr = [(-c) % m for c in fg]
        corr[0] = (corr[0] + 2) % m
        g = poly_mul(g, corr, m)[:prec]
    return g


def poly_rem(a: list[int], b: list[int], m: int) -> list[int]:
    """a mod b over Z/mZ for monic b."""
    db = len(b) - 1
    if len(a) <= db:
        return list(a)
    if db < SCHOOLBOOK_DEGREE:
        r = list(a)
        for k in range(len(r) - 1, db - 1, -1):
            c = r[k] % m
            if c:
                off = k - db
                for t in range(db):
                    r[off + t] = (r[off + t] - c * b[t]) % m
            r[k] = 0
        return [x % m for x in r[:db]]
    nq = len(a) - db
    inv = _series_inverse(b[::-1], nq, m)
    q = poly_mul(a[::-1][:nq], inv, m)[:nq][::-1]
    qb = poly_mul(q, b, m)
    return [(x - y) % m for x, y in zip(a[:db], qb[:db])]


def subproduct_tree(points: Sequence[int], m: int) -> list[list[list[int]]]:
    level = [[(-x) % m, 1] for x in points]
    tree = [level]
    while len(level) > 1:
        nxt = [poly_mul(level[k], level[k + 1], m) for k in range(0, len(level) - 1, 2)]
        if len(level) & 1:
            nxt.append(level[-1])
        level = nxt
        tree.append(level)
    return tree


def multipoint_eval(poly: Sequence[int], points: Sequence[int], m: int) -> list[int]:
    """[poly(x) mod m for x in points] by a remainder tree of polynomials."""
    if not points:
        return []
    tree = subproduct_tree(points, m)
    rems = [poly_rem(list(poly), tree[-1][0], m)]
    for level in reversed(tree[:-1]):
        rems = [poly_rem(rems[k >> 1], node, m) for k, node in enumerate(level)]
    return [r[0] % m if r else 0 for r in rems]


def horner(poly: Sequence[int], x: int, m: int) -> int:
    acc = 0
    for c in reversed(poly):
        acc = (acc * x + c) % m
    return acc


def _rising_poly(s: int, m: int) -> list[int]:
    """prod_{j=1}^{s} (x + j) over Z/mZ."""
    level = [[j % m, 1] for j in range(1, s + 1)]
    while len(level) > 1:
        nxt = [poly_mul(level[k], level[k + 1], m) for k in range(0, len(level) - 1, 2)]
        if len(level) & 1:
            nxt.append(level[-1])
        level = nxt
    return level[0]


def sqrt_half_factorial(p: int) -> int:
    """((p - 1)/2)! mod p^2 in about sqrt(p) polynomial steps."""
    m = p * p
    half = (p - 1) // 2
    if half < 4:
        return math.factorial(half) % m
    s = isqrt(half - 1) + 1
    blocks = half // s
    fpoly = _rising_poly(s, m)
    vals = multipoint_eval(fpoly, [k * s for k in range(blocks)], m)
    r = 1
    for v in vals:
        r = r * v % m
    for j in range(blocks * s + 1, half + 1):
        r = r * j % m
    return r


def sqrt_factorial_mod(p: int) -> int:
    """(p - 1)! mod p^2 for an odd prime p via the half factorial."""
    if p < 3 or p % 2 == 0:
        raise ValueError("p must be an odd prime")
    return reduce2_recover(p, sqrt_half_factorial(p))


# ---------------------------------------------------------------------------

METHODS = ("naive", "sqrt", "reduce2")


@dataclass
class CheckReport:
    p: int
    methods: tuple[str, ...]
    residues: dict[str, int] = field(default_factory=dict)
    agree: bool = False
    minus_one_mod_p: bool = False


def recompute(p: int, method: str) -> int:
    if method == "naive":
        return naive_factorial_mod(p - 1, p * p)
    if method == "sqrt":
        if p == 2:
            return 1
        return sqrt_factorial_mod(p)
    if method == "reduce2":
        if p == 2:
            return 1
        return reduce2_recover(p, naive_factorial_mod((p - 1) // 2, p * p))
    raise ValueError(f"unknown method {method!r}")


def check_record(rec: WilsonRecord, method: str = "sqrt") -> CheckReport:
    """Recompute rec's residue independently and compare."""
    methods = (method,) if isinstance(method, str) else tuple(method)
    report = CheckReport(rec.p, methods)
    report.residues["record"] = rec.residue
    for name in methods:
        report.residues[name] = recompute(rec.p, name)
    report.minus_one_mod_p = rec.residue % rec.p == rec.p - 1
    report.agree = report.minus_one_mod_p and len(set(report.residues.values())) == 1
    return report
