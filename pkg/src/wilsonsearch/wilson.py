"""Wilson quotients for many primes at once.

Every prime p of interest is attached to a *key* k in an interval of
integers (lo, hi], and the engine computes (k - 1)! mod p^2 for all keys
simultaneously:

* Stage 1 computes lo! modulo S, the product of all the p^2, using the
  binary-digit decomposition of the exponents of the prime factorisation of
  lo! (``factorial_mod``).
* Stage 2 descends a binary tree over (lo, hi].  Node (i, j) covers the keys
  lo + floor(j L / 2^i) < k <= lo + floor((j + 1) L / 2^i) with L = hi - lo,
  and carries W = (left end)! mod S_ij.  A left child inherits W; a right
  child gets W times the product of its sibling's integers.  On the top
  ``recompute_level(L)`` levels the sibling products and S nodes are rebuilt
  on demand and the products are reduced as they are formed; below that, full
  product trees are built one subtree at a time.

For the plain quotient the key of p is p itself, which yields (p - 1)!.  For
an even e the key of p = 1 + e f is f + 1, which yields f! and leaves the rest
to the identities module.
"""

from __future__ import annotations

import math
import time
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
from gmpy2 import mpz

from . import primes as _primes
from . import treearith

DEFAULT_BYTE_BUDGET = 256 << 20

# Stage-1 buffer sizing: at least this many bits, and up to this multiple of |S|.
MIN_BUFFER_BITS = 1 << 18
BUFFER_FACTOR = 8

# Stage-1 working set in units of |S| bits: S, C, the A accumulator and the
# double-length product inside each modular multiplication.
STAGE1_S_MULTIPLE = 4


class IntegrityError(ArithmeticError):
    """A computed residue failed a consistency check."""


class BudgetError(MemoryError):
    """The byte budget cannot hold the working set of the computation."""


Boundary = Callable[[str, dict], None]


@dataclass(frozen=True, order=True)
class WilsonRecord:
    """(p - 1)! = a0 + a1 p (mod p^2), with centred quotient w."""

    p: int
    a0: int
    a1: int
    w: int

    @property
    def residue(self) -> int:
        return self.a0 + self.a1 * self.p

    @property
    def is_wilson_prime(self) -> bool:
        return self.w == 0

    @classmethod
    def from_residue(cls, p: int, r: int) -> "WilsonRecord":
        r %= p * p
        return cls(p, r % p, r // p, quotient_from_residue(p, r))


def quotient_from_residue(p: int, r: int) -> int:
    """Centred w_p in [-p/2, p/2) from r = (p - 1)! mod p^2."""
    r = int(r) % (p * p)
    if r % p != p - 1:
        raise IntegrityError(f"residue {r} for p={p} is not -1 mod p")
    w = ((r + 1) // p) % p
    if 2 * w >= p:
        w -= p
    return w


def reduce2_recover(p: int, h: int) -> int:
    """(p - 1)! mod p^2 from h = ((p - 1)/2)! mod p^2, for odd p."""
    m = p * p
    r = h * h % m * (pow(2, p, m) - 1) % m
    if (p - 1) // 2 % 2:
        r = -r % m
    return r


class SpaceMeter:
    """Tracks the peak number of bytes held in big-integer node storage."""

    def __init__(self) -> None:
        self.peak_bits = 0

    def observe(self, bits: int) -> None:
        if bits > self.peak_bits:
            self.peak_bits = bits

    @property
    def peak_bytes(self) -> int:
        return (self.peak_bits + 7) // 8


def _bits(values: Iterable) -> int:
    return sum(v.bit_length() for v in values)


# ---------------------------------------------------------------------------
# Stage 1


def stage1_min_bytes(s_bits: int) -> int:
    return ((STAGE1_S_MULTIPLE + 2) * s_bits + 7) // 8


def stage1_buffer_bits(s_bits: int, byte_budget: int) -> int:
    spare = 8 * byte_budget - STAGE1_S_MULTIPLE * s_bits
    if spare < 2 * s_bits:
        raise BudgetError(
            f"byte budget {byte_budget} is below the minimum "
            f"{stage1_min_bytes(s_bits)} for a {s_bits}-bit modulus"
        )
    return min(spare // 2, max(MIN_BUFFER_BITS, BUFFER_FACTOR * s_bits))


def _legendre_exponents(n: int, ps: np.ndarray) -> np.ndarray:
    """Exponent of each prime in n!, vectorised."""
    exps = np.zeros(ps.shape, dtype=np.int64)
    q = ps.copy()
    live = q <= n
    while live.any():
        exps[live] += n // q[live]
        grow = live & (q <= n // ps)
        q = np.where(grow, q * ps, n + 1)
        live = grow
    return exps


def _digit_product(
    n: int,
    i: int,
    acc: treearith.ModularAccumulator,
    segment_bytes: int,
) -> None:
    """Feed into ``acc`` every prime whose exponent in n! has bit i set."""
    bound = (n >> i) + 1
    for seg in _primes.iter_segments(1, bound, segment_bytes):
        sel = seg[(_legendre_exponents(n, seg) >> i) & 1 == 1]
        if not sel.size:
            continue
        bits = int(sel[-1]).bit_length()
        if bits <= 31 and sel.size > 1:
            if sel.size & 1:
                acc.add(int(sel[-1]))
                sel = sel[:-1]
            acc.add_many((sel[0::2] * sel[1::2]).tolist(), 2 * bits)
        else:
            acc.add_many(sel.tolist(), bits)


def factorial_mod(
    n: int,
    s: int,
    byte_budget: int = DEFAULT_BYTE_BUDGET,
    *,
    meter: SpaceMeter | None = None,
    resume: tuple[int, int] | None = None,
    on_digit: Callable[[int, int], None] | None = None,
    segment_bytes: int = _primes.DEFAULT_SEGMENT_BYTES,
) -> int:
    """n! mod s in space bounded by ``byte_budget``.

    n! = A_0 A_1^2 A_2^4 ..., where A_i is the product of the primes whose
    exponent in n! has binary digit i set.  Each A_i is accumulated modulo s
    through a bounded buffer and folded in with C_i = A_i C_{i+1}^2.

    ``resume=(i, C_i)`` restarts after digit i; ``on_digit(i, C_i)`` is called
    after every digit.
    """
    if n < 0 or s < 1:
        raise ValueError("need n >= 0 and s >= 1")
    s = mpz(s)
    s_bits = s.bit_length()
    buffer_bits = stage1_buffer_bits(s_bits, byte_budget)
    if n < 2 or s == 1:
        return int(1 % s)
    meter = meter or SpaceMeter()
    digits = n.bit_length()
    c = None
    start = digits - 1
    if resume is not None:
        start, c = resume[0] - 1, mpz(resume[1])
    for i in range(start, -1, -1):
        acc = treearith.ModularAccumulator(s, buffer_bits)
        _digit_product(n, i, acc, segment_bytes)
        a = acc.result()
        c = a if c is None else a * c * c % s
        meter.observe(STAGE1_S_MULTIPLE * s_bits + acc.peak_bits)
        if on_digit is not None:
            on_digit(i, int(c))
    return int(c)


# ---------------------------------------------------------------------------
# Stage 2


def tree_depth(length: int) -> int:
    """ceil(log2 length)."""
    return (length - 1).bit_length() if length > 1 else 0


def recompute_level(length: int) -> int:
    """Number of top tree levels that are recomputed rather than stored."""
    if length < 16:
        return 0
    ell = math.floor(2 * math.log2(math.log2(length)))
    return max(0, min(tree_depth(length), ell))


class KeyedFactorials:
    """(k - 1)! mod m_k for keys k in (lo, hi], via Stage 1 and Stage 2.

    ``keys`` must be sorted, distinct and inside (lo, hi]; ``moduli`` are
    the matching m_k.  ``full_tree`` skips Stage 1 recomputation entirely and
    stores whole trees from the root, which is the all-primes variant.
    """

    def __init__(
        self,
        lo: int,
        hi: int,
        keys: list[int],
        moduli: list[int],
        byte_budget: int = DEFAULT_BYTE_BUDGET,
        *,
        full_tree: bool = False,
        meter: SpaceMeter | None = None,
        on_boundary: Boundary | None = None,
        segment_bytes: int = _primes.DEFAULT_SEGMENT_BYTES,
    ):
        if hi <= lo:
            raise ValueError("empty key interval")
        if keys and (keys[0] <= lo or keys[-1] > hi):
            raise ValueError("keys outside the interval")
        self.lo, self.hi = lo, hi
        self.length = hi - lo
        self.depth = tree_depth(self.length)
        self.ell = 0 if full_tree else recompute_level(self.length)
        self.keys = keys
        self.moduli = [mpz(m) for m in moduli]
        self._key_mod = dict(zip(keys, self.moduli))
        self.byte_budget = byte_budget
        self.meter = meter or SpaceMeter()
        self.on_boundary = on_boundary
        self.segment_bytes = segment_bytes
        self.s_root = treearith.product(self.moduli)
        s_bits = self.s_root.bit_length()
        need = max(stage1_min_bytes(s_bits), (2 * s_bits + 7) // 8)
        if byte_budget < need:
            raise BudgetError(
                f"byte budget {byte_budget} is below the minimum {need} "
                f"for {len(keys)} moduli of {s_bits} bits in total"
            )
        self.buffer_bits = stage1_buffer_bits(s_bits, byte_budget)
        self.timings = {"stage1": 0.0, "stage2": 0.0}

    # -- layout --------------------------------------------------------------

    def bound(self, i: int, j: int) -> int:
        return self.lo + ((j * self.length) >> i)

    def _span(self, a: int, b: int) -> tuple[int, int]:
        return bisect_right(self.keys, a), bisect_right(self.keys, b)

    def _emit(self, marker: str, payload: dict) -> None:
        if self.on_boundary is not None:
            self.on_boundary(marker, payload)

    # -- stages --------------------------------------------------------------

    def run(self, resume: tuple[str, dict] | None = None) -> dict[int, int]:
        """Return {key: (key - 1)! mod m_key}."""
        if not self.keys:
            return {}
        marker, payload = resume if resume is not None else ("", {})
        if "res" in payload:
            return dict(zip(payload["keys"], payload["res"]))
        if marker.startswith("stage2-level-"):
            level = int(marker.rsplit("-", 1)[1])
            w_level = [mpz(x) for x in payload["W"]]
        else:
            digit = None
            if marker.startswith("stage1-digit-"):
                digit = (int(marker.rsplit("-", 1)[1]), payload["C"])
            t0 = time.perf_counter()
            w_level = [mpz(self.stage1(digit))]
            self.timings["stage1"] += time.perf_counter() - t0
            level = 0
        t0 = time.perf_counter()
        w_level = self.descend_top(level, w_level)
        out = self.descend_bottom(w_level)
        self.timings["stage2"] += time.perf_counter() - t0
        self._emit(
            f"stage2-level-{self.depth}",
            {"keys": list(out), "res": [int(v) for v in out.values()]},
        )
        return out

    def stage1(self, resume: tuple[int, int] | None = None) -> int:
        if resume is not None and resume[0] == 0:
            return int(resume[1])

        def boundary(i: int, c: int) -> None:
            self._emit(f"stage1-digit-{i}", {"C": c})

        return factorial_mod(
            self.lo,
            self.s_root,
            self.byte_budget,
            meter=self.meter,
            resume=resume,
            on_digit=boundary,
            segment_bytes=self.segment_bytes,
        )

    def descend_top(self, level: int, w_level: list) -> list:
        keys, mods = self.keys, self.moduli
        for i in range(level, self.ell):
            nxt = []
            held = _bits(w_level)
            for j, w in enumerate(w_level):
                a, m, b = self.bound(i, j), self.bound(i + 1, 2 * j + 1), self.bound(i, j + 1)
                ia, im = self._span(a, m)
                ib = bisect_right(keys, b)
                if ia == ib:
                    nxt += [mpz(0), mpz(0)]
                    continue
                s_left = treearith.product(mods[ia:im])
                s_right = treearith.product(mods[im:ib])
                nxt.append(w % s_left)
                if im < ib:
                    a_left = treearith.range_product_mod(a, m, s_right, self.buffer_bits)
                    nxt.append(w * a_left % s_right)
                    self.meter.observe(
                        held + 2 * s_right.bit_length() + s_left.bit_length()
                        + min(self.buffer_bits, (m - a) * m.bit_length())
                    )
                else:
                    nxt.append(mpz(0))
            w_level = nxt
            self.meter.observe(_bits(w_level))
            self._emit(f"stage2-level-{i + 1}", {"W": [int(x) for x in w_level]})
        return w_level

    def descend_bottom(self, w_level: list) -> dict[int, int]:
        out: dict[int, int] = {}
        held = _bits(w_level)
        width = 1 << (self.depth - self.ell)
        for j, w in enumerate(w_level):
            a, b = self.bound(self.ell, j), self.bound(self.ell, j + 1)
            ia, ib = self._span(a, b)
            if ia == ib:
                continue
            out.update(self._subtree(j * width, width, w, held))
        return out

    def _subtree(self, first_leaf: int, width: int, w: mpz, held: int) -> dict[int, int]:
        d = self.depth
        key_mod = self._key_mod
        a_level, s_level, leaf_keys = [], [], []
        for t in range(first_leaf, first_leaf + width):
            a, b = self.bound(d, t), self.bound(d, t + 1)
            if b > a:
                a_level.append(mpz(b))
                m = key_mod.get(b)
                s_level.append(m if m is not None else treearith.ONE)
                leaf_keys.append(b if m is not None else None)
            else:
                a_level.append(treearith.ONE)
                s_level.append(treearith.ONE)
                leaf_keys.append(None)
        a_tree, s_tree = [a_level], [s_level]
        while len(a_level) > 1:
            a_level = [a_level[k] * a_level[k + 1] for k in range(0, len(a_level), 2)]
            s_level = [s_level[k] * s_level[k + 1] for k in range(0, len(s_level), 2)]
            a_tree.append(a_level)
            s_tree.append(s_level)
        self.meter.observe(
            held + sum(_bits(x) for x in a_tree) + sum(_bits(x) for x in s_tree)
        )
        ws = [w]
        for lev in range(len(a_tree) - 2, -1, -1):
            a_nodes, s_nodes = a_tree[lev], s_tree[lev]
            nxt = []
            for t, wt in enumerate(ws):
                sl, sr = s_nodes[2 * t], s_nodes[2 * t + 1]
                nxt.append(wt % sl if sl != 1 else mpz(0))
                nxt.append(wt * a_nodes[2 * t] % sr if sr != 1 else mpz(0))
            ws = nxt
        return {k: int(r) for k, r in zip(leaf_keys, ws) if k is not None}


# ---------------------------------------------------------------------------
# Public entry points


def key_interval(lo: int, hi: int, e: int) -> tuple[int, int]:
    """Key interval for the primes p = 1 (mod e) in (lo, hi]."""
    return lo // e, (hi - 1) // e + 1


def class_primes(lo: int, hi: int, e: int) -> list[int]:
    if e == 1:
        return _primes.sieve_interval(lo, hi)
    return _primes.primes_in_class(lo, hi, e)


def reduced_factorials(
    lo: int,
    hi: int,
    e: int,
    byte_budget: int = DEFAULT_BYTE_BUDGET,
    *,
    primes: list[int] | None = None,
    meter: SpaceMeter | None = None,
    on_boundary: Boundary | None = None,
    resume: tuple[str, dict] | None = None,
    full_tree: bool = False,
    timings: dict[str, float] | None = None,
) -> dict[int, int]:
    """{p: ((p - 1)/e)! mod p^2} for the primes p = 1 (mod e) in (lo, hi].

    With e = 1 this is {p: (p - 1)! mod p^2} for every prime in the interval.
    ``primes`` overrides the sieve (it must be a sorted subset of that class).
    """
    if hi <= lo:
        return {}
    ps = class_primes(lo, hi, e) if primes is None else primes
    if not ps:
        return {}
    klo, khi = key_interval(lo, hi, e)
    keys = [(p - 1) // e + 1 for p in ps]
    engine = KeyedFactorials(
        klo,
        khi,
        keys,
        [p * p for p in ps],
        byte_budget,
        full_tree=full_tree,
        meter=meter,
        on_boundary=on_boundary,
    )
    by_key = engine.run(resume)
    if timings is not None:
        for k, v in engine.timings.items():
            timings[k] = timings.get(k, 0.0) + v
    return {p: by_key[k] for p, k in zip(ps, keys)}


def _records(residues: dict[int, int]) -> list[WilsonRecord]:
    return [WilsonRecord.from_residue(p, r) for p, r in sorted(residues.items())]


def wilson_all(n: int) -> list[WilsonRecord]:
    """Records for every prime p <= n from one full tree over (0, n]."""
    if n < 2:
        raise ValueError("n must be >= 2")
    return _records(reduced_factorials(0, n, 1, full_tree=True))


def wilson_range(
    lo: int,
    hi: int,
    byte_budget: int = DEFAULT_BYTE_BUDGET,
    *,
    meter: SpaceMeter | None = None,
) -> list[WilsonRecord]:
    """Records for the primes lo < p <= hi, using the two-stage method."""
    if lo < 0:
        raise ValueError("lo must be >= 0")
    return _records(reduced_factorials(lo, hi, 1, byte_budget, meter=meter))
