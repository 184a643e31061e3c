import numpy as np
import pytest
from hypothesis import given, strategies as st

from wilsonsearch.primes import (
    is_prime_64,
    iter_segments,
    primes_in_class,
    sieve_interval,
    small_primes,
)

from conftest import trial_division_primes


def test_sieve_small_cases():
    assert sieve_interval(0, 30) == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert sieve_interval(10, 20) == [11, 13, 17, 19]


def test_sieve_single_prime_interval():
    want = trial_division_primes(113, 127)
    assert want == [127]
    assert sieve_interval(113, 127) == want


def test_sieve_empty_and_degenerate():
    assert sieve_interval(24, 28) == []
    assert sieve_interval(5, 5) == []
    assert sieve_interval(0, 1) == []
    assert sieve_interval(1, 2) == [2]


def test_prime_count_to_a_million():
    # an independent plain sieve as oracle
    n = 10**6
    flags = bytearray([1]) * (n + 1)
    flags[0] = flags[1] = 0
    for q in range(2, 1001):
        if flags[q]:
            flags[q * q :: q] = bytearray(len(flags[q * q :: q]))
    assert sum(flags) == 78498
    assert len(sieve_interval(0, n)) == 78498


@pytest.mark.parametrize("seg", [1, 7, 64, 1000])
def test_segment_bytes_do_not_change_output(seg):
    assert sieve_interval(900, 2100, seg) == trial_division_primes(900, 2100)


@given(st.integers(0, 5000), st.integers(0, 3000), st.integers(0, 3000))
def test_split_concatenation(a, x, y):
    m, b = a + x, a + x + y
    assert sieve_interval(a, b) == sieve_interval(a, m) + sieve_interval(m, b)


def test_segments_are_int64_and_ascending():
    segs = list(iter_segments(0, 10**5, 4096))
    flat = np.concatenate(segs)
    assert flat.dtype == np.int64
    assert np.all(np.diff(flat) > 0)
    assert flat.tolist() == small_primes(10**5).tolist()


def test_primes_in_class_examples():
    assert primes_in_class(0, 30, 4) == [5, 13, 17, 29]
    assert primes_in_class(0, 30, 6) == [7, 13, 19]
    want = [p for p in trial_division_primes(3333300, 3333340) if p % 18 == 1]
    assert want == [3333313, 3333331]
    assert primes_in_class(3333300, 3333340, 18) == want


@given(st.integers(0, 20000), st.integers(1, 2000), st.sampled_from([2, 4, 6, 10, 18, 90]))
def test_class_members_subset(lo, width, e):
    got = primes_in_class(lo, lo + width, e)
    all_ps = set(sieve_interval(lo, lo + width))
    assert all(p % e == 1 and p in all_ps for p in got)
    assert len(got) == sum(1 for p in all_ps if p % e == 1)


def test_primes_in_class_rejects_odd_e():
    with pytest.raises(ValueError):
        primes_in_class(0, 100, 3)


def test_is_prime_examples():
    assert is_prime_64(563)
    assert not is_prime_64(1)
    assert is_prime_64(3333331)


def test_is_prime_matches_sieve():
    ps = set(small_primes(20000).tolist())
    assert all(is_prime_64(n) == (n in ps) for n in range(20001))


@pytest.mark.parametrize(
    "n, expected",
    [
        (2**61 - 1, True),
        (2**64 - 59, True),
        (3215031751, False),  # strong pseudoprime to bases 2, 3, 5, 7
        (3825123056546413051, False),  # strong pseudoprime to the first nine primes
        ((2**32 - 5) * (2**31 - 1), False),
    ],
)
def test_is_prime_large(n, expected):
    assert is_prime_64(n) is expected
