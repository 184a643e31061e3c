"""Product trees, remainder trees and buffered products modulo a big integer.

Large multiplications go through GMP (gmpy2); the tree logic is plain Python.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from gmpy2 import mpz

ONE = mpz(1)


@dataclass
class ProductTree:
    """levels[0] holds the leaves, levels[-1] == [root]."""

    levels: list[list[mpz]]

    @property
    def root(self) -> mpz:
        return self.levels[-1][0]

    @property
    def leaves(self) -> list[mpz]:
        return self.levels[0]

    def bits(self) -> int:
        return sum(x.bit_length() for level in self.levels for x in level)


def _pair_up(level: Sequence[mpz]) -> list[mpz]:
    nxt = [level[k] * level[k + 1] for k in range(0, len(level) - 1, 2)]
    if len(level) & 1:
        nxt.append(level[-1])
    return nxt


def product_tree(leaves: Iterable[int]) -> ProductTree:
    """Binary product tree; odd nodes at the end of a level are copied up."""
    level = [mpz(x) for x in leaves]
    if not level:
        raise ValueError("product_tree needs at least one leaf")
    levels = [level]
    while len(level) > 1:
        level = _pair_up(level)
        levels.append(level)
    return ProductTree(levels)


def product(values: Iterable[int]) -> mpz:
    """Product of ``values`` by pairwise reduction, without keeping the tree."""
    level = [mpz(x) for x in values]
    if not level:
        return ONE
    while len(level) > 1:
        level = _pair_up(level)
    return level[0]


def remainder_tree(x: int, moduli: Sequence[int]) -> list[int]:
    """[x mod m for m in moduli], reducing x down a product tree of the moduli."""
    if not moduli:
        return []
    if any(m < 1 for m in moduli):
        raise ValueError("moduli must be >= 1")
    tree = product_tree(moduli)
    rems = [mpz(x) % tree.root]
    for level in reversed(tree.levels[:-1]):
        rems = [rems[k >> 1] % m for k, m in enumerate(level)]
    return [int(r) for r in rems]


class ModularAccumulator:
    """Running product modulo ``s`` fed through a bounded buffer.

    Factors are collected until their total bit length would exceed
    ``buffer_bits``; the buffer is then multiplied out with a product tree
    and folded into the residue with one modular multiplication.
    """

    def __init__(self, s: int, buffer_bits: int | None = None):
        if s < 1:
            raise ValueError("modulus must be >= 1")
        self.s = mpz(s)
        self.buffer_bits = buffer_bits if buffer_bits is not None else self.s.bit_length()
        self.value = ONE % self.s
        self._buf: list[mpz] = []
        self._buf_bits = 0
        self.peak_bits = 0
        self.flushes = 0

    def add(self, x: int) -> None:
        b = x.bit_length()
        if b > self.buffer_bits:
            raise ValueError(
                f"factor of {b} bits exceeds buffer of {self.buffer_bits} bits"
            )
        if self._buf_bits + b > self.buffer_bits:
            self.flush()
        self._buf.append(mpz(x))
        self._buf_bits += b

    def add_many(self, xs: Sequence[int], bits_each: int) -> None:
        """Add factors that are all at most ``bits_each`` bits long."""
        if bits_each > self.buffer_bits:
            raise ValueError(
                f"factors of {bits_each} bits exceed buffer of {self.buffer_bits} bits"
            )
        bits_each = max(bits_each, 1)
        pos = 0
        while pos < len(xs):
            free = (self.buffer_bits - self._buf_bits) // bits_each
            if free <= 0:
                self.flush()
                continue
            chunk = xs[pos : pos + free]
            self._buf.extend(map(mpz, chunk))
            self._buf_bits += bits_each * len(chunk)
            pos += len(chunk)

    def fold(self, block: int, block_bits: int) -> None:
        """Multiply in an already-formed block product of ``block_bits`` bits."""
        self.flush()
        self.peak_bits = max(self.peak_bits, block_bits + 2 * self.s.bit_length())
        self.value = self.value * block % self.s
        self.flushes += 1

    def flush(self) -> None:
        if not self._buf:
            return
        tree_bits = 2 * self._buf_bits
        self.peak_bits = max(self.peak_bits, tree_bits + 2 * self.s.bit_length())
        block = product(self._buf)
        self.value = self.value * block % self.s
        self._buf.clear()
        self._buf_bits = 0
        self.flushes += 1

    def result(self) -> mpz:
        self.flush()
        return self.value


def product_mod(
    factors: Iterable[int], s: int, buffer_bits: int | None = None
) -> int:
    """Product of ``factors`` modulo ``s`` using a buffer of ``buffer_bits`` bits.

    The default buffer matches the bit length of ``s``.  The result does not
    depend on the buffer size.
    """
    acc = ModularAccumulator(s, buffer_bits)
    for x in factors:
        acc.add(x)
    return int(acc.result())


def range_product_mod(a: int, b: int, s: int, buffer_bits: int | None = None) -> mpz:
    """Product of the integers a < k <= b modulo s."""
    acc = ModularAccumulator(s, buffer_bits)
    if b > a:
        bits = b.bit_length()
        room = max(1, acc.buffer_bits // bits)
        for k in range(a + 1, b + 1, room):
            stop = min(b, k + room - 1)
            acc.fold(product(range(k, stop + 1)), bits * (stop - k + 1))
    return acc.result()


__all__ = [
    "ProductTree",
    "ModularAccumulator",
    "product_tree",
    "product",
    "remainder_tree",
    "product_mod",
    "range_product_mod",
]
