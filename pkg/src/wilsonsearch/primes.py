"""Prime enumeration on intervals (lo, hi] with a segmented sieve of Eratosthenes."""

from __future__ import annotations

from math import isqrt
from typing import Iterator

import numpy as np

DEFAULT_SEGMENT_BYTES = 1 << 20

# Deterministic Miller-Rabin witnesses; valid for n < 3.3e24.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def small_primes(n: int) -> np.ndarray:
    """All primes <= n as an int64 array (plain in-memory sieve)."""
    if n < 2:
        return np.zeros(0, dtype=np.int64)
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    sieve[4::2] = False
    for q in range(3, isqrt(n) + 1, 2):
        if sieve[q]:
            sieve[q * q :: 2 * q] = False
    return np.flatnonzero(sieve).astype(np.int64)


def iter_segments(
    lo: int, hi: int, segment_bytes: int = DEFAULT_SEGMENT_BYTES
) -> Iterator[np.ndarray]:
    """Yield the primes in (lo, hi] segment by segment, ascending.

    Each sieve segment is a byte-per-entry bitmap of ``segment_bytes``
    entries, so peak sieve memory is about ``segment_bytes`` plus the base
    primes up to sqrt(hi).
    """
    lo = max(lo, 0)
    if hi <= lo:
        return
    if segment_bytes < 1:
        raise ValueError("segment_bytes must be positive")
    base = small_primes(isqrt(hi))
    start = lo
    while start < hi:
        stop = min(hi, start + segment_bytes)
        # entry t stands for the integer start + 1 + t
        seg = np.ones(stop - start, dtype=bool)
        if start < 1:
            seg[: 1 - start] = False
        for q in base.tolist():
            qq = q * q
            if qq > stop:
                break
            first = max(qq, ((start + q) // q) * q)
            if first <= stop:
                seg[first - start - 1 :: q] = False
        found = np.flatnonzero(seg)
        if found.size:
            yield found.astype(np.int64) + (start + 1)
        start = stop


def sieve_interval(
    lo: int, hi: int, segment_bytes: int = DEFAULT_SEGMENT_BYTES
) -> list[int]:
    """Primes p with lo < p <= hi, ascending."""
    if lo < 0 or hi < 0:
        raise ValueError("interval bounds must be nonnegative")
    out: list[int] = []
    for seg in iter_segments(lo, hi, segment_bytes):
        out.extend(seg.tolist())
    return out


def primes_in_class(
    lo: int, hi: int, e: int, segment_bytes: int = DEFAULT_SEGMENT_BYTES
) -> list[int]:
    """Primes p in (lo, hi] with p = 1 (mod e)."""
    if e < 2 or e % 2:
        raise ValueError(f"e must be even and >= 2, got {e}")
    out: list[int] = []
    for seg in iter_segments(lo, hi, segment_bytes):
        out.extend(seg[seg % e == 1].tolist())
    return out


def is_prime_64(n: int) -> bool:
    """Deterministic primality test for 64-bit integers."""
    if n < 2:
        return False
    for q in _MR_BASES:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    for a in _MR_BASES:
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True
