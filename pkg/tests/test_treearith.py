import math
import random

import pytest
from hypothesis import given, strategies as st

from wilsonsearch.treearith import (
    ModularAccumulator,
    product,
    product_mod,
    product_tree,
    range_product_mod,
    remainder_tree,
)


def test_product_tree_examples():
    assert product_tree([2, 3, 5, 7]).root == 210
    assert product_tree([1]).root == 1
    squares = [p * p for p in (11, 13, 17, 19)]
    assert math.prod(squares) == 2133423721
    assert product_tree(squares).root == 2133423721


def test_product_tree_rejects_empty():
    with pytest.raises(ValueError):
        product_tree([])


def test_product_tree_shape_and_parents():
    t = product_tree(range(1, 12))
    assert t.leaves == list(range(1, 12))
    for lower, upper in zip(t.levels, t.levels[1:]):
        assert len(upper) == (len(lower) + 1) // 2
        for k, v in enumerate(upper):
            assert v == math.prod(lower[2 * k : 2 * k + 2])


@given(st.lists(st.integers(0, 2**256), min_size=1, max_size=1000))
def test_root_is_product(leaves):
    assert product_tree(leaves).root == math.prod(leaves)
    assert product(leaves) == math.prod(leaves)


def test_remainder_tree_examples():
    assert remainder_tree(100, [7, 9]) == [2, 1]
    f10 = math.factorial(10)
    want = [f10 % 121, f10 % 169]
    assert want == [10, 32]
    assert remainder_tree(f10, [121, 169]) == want
    assert remainder_tree(0, [3, 5, 1]) == [0, 0, 0]


def test_remainder_tree_modulus_one():
    assert remainder_tree(12345, [1, 10, 1]) == [0, 5, 0]


def test_remainder_tree_large_random():
    rng = random.Random(3)
    x = rng.getrandbits(10**6)
    mods = [rng.getrandbits(rng.randrange(1, 512)) | 1 for _ in range(1000)]
    assert remainder_tree(x, mods) == [x % m for m in mods]


@given(st.integers(0, 2**2000), st.lists(st.integers(1, 2**200), min_size=1, max_size=60))
def test_remainder_tree_matches_direct(x, mods):
    assert remainder_tree(x, mods) == [x % m for m in mods]


def test_product_mod_examples():
    want = math.prod(range(2, 11)) % 101
    assert want == 72
    assert product_mod(range(2, 11), 101) == want
    assert product_mod([], 7) == 1
    assert product_mod([5, 5], 25) == 0


def test_product_mod_modulus_one():
    assert product_mod([3, 4], 1, buffer_bits=8) == 0


def _left_to_right(xs, s):
    r = 1 % s
    for x in xs:
        r = r * x % s
    return r


@given(
    st.lists(st.integers(0, 2**64), max_size=200),
    st.integers(1, 2**300),
    st.integers(0, 2000),
)
def test_product_mod_buffer_independent(xs, s, extra):
    need = max([x.bit_length() for x in xs], default=1)
    b = max(need, 1) + extra
    assert product_mod(xs, s, b) == _left_to_right(xs, s)
    if need <= s.bit_length():
        # the default buffer is the bit length of s
        assert product_mod(xs, s) == _left_to_right(xs, s)


def test_buffer_too_small_for_a_factor():
    with pytest.raises(ValueError):
        product_mod([2**100], 7, buffer_bits=10)


def test_accumulator_flushes_and_tracks_peak():
    acc = ModularAccumulator(10**9 + 7, buffer_bits=64)
    for k in range(1, 200):
        acc.add(k)
    assert acc.result() == math.factorial(199) % (10**9 + 7)
    assert acc.flushes > 10
    assert acc.peak_bits > 0


@given(st.integers(0, 3000), st.integers(0, 3000), st.integers(1, 2**128), st.integers(8, 5000))
def test_range_product_mod(a, w, s, b):
    assert range_product_mod(a, a + w, s, b) == _left_to_right(range(a + 1, a + w + 1), s)
