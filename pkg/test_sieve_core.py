"""
Tests for the prime sieve, primality testing and factorization
"""

import math
import tracemalloc

import numpy as np
import pytest

from primelab_modules.errors import BudgetError, PreconditionError
from primelab_modules.sieve_core import (
    SEGMENT_WORK_BYTES, Factorization, build_sieve, estimate_sieve_bytes, factorize, is_prime,
    miller_rabin, pollard_brent, prime_count, primes_up_to,
)


def _trial_division_prime(n):
    if n < 2:
        return False
    return all(n % d for d in range(2, math.isqrt(n) + 1))


# ---------- build_sieve ----------

def test_sieve_small_limits():
    assert build_sieve(10).primes_up_to(10) == [2, 3, 5, 7]
    assert build_sieve(2).primes_up_to(2) == [2]


def test_sieve_counts_primes_to_a_million(sieve_1e6):
    assert len(sieve_1e6.primes) == 78498
    assert sieve_1e6.prime_count(10**6) == 78498


def test_sieve_table_matches_trial_division(sieve_1e6):
    sample = np.random.default_rng(11).integers(2, 10**6, size=500)
    for n in sample.tolist():
        assert bool(sieve_1e6.table[n]) == _trial_division_prime(n)


def test_smallest_factor_table(sieve_1e5):
    for n in range(2, 3000):
        p = sieve_1e5.smallest_factor(n)
        assert n % p == 0
        assert all(n % d for d in range(2, p))


def test_sieve_rejects_bad_limits():
    with pytest.raises(PreconditionError):
        build_sieve(1)
    with pytest.raises(PreconditionError):
        build_sieve(10.5)


def test_sieve_over_budget_is_rejected():
    with pytest.raises(BudgetError) as excinfo:
        build_sieve(10**6, memory_budget_mb=0.001)
    assert 'budget' in str(excinfo.value)
    assert excinfo.value.field == 'sieve_limit'


def test_sieve_peak_memory_stays_within_estimate():
    limit, segment = 2 * 10**6, 2**16
    tracemalloc.start()
    try:
        sieve = build_sieve(limit, segment_size=segment, with_spf=True)
        _, peak = tracemalloc.get_traced_memory()
    finally:
        tracemalloc.stop()
    assert sieve.prime_count(limit) == 148933
    tables = (limit + 1) * (1 + sieve.spf.itemsize)
    assert peak <= estimate_sieve_bytes(limit, True, segment)
    assert peak < 1.5 * tables


def test_estimate_counts_one_segment_of_working_memory():
    small = estimate_sieve_bytes(10**6, False, 2**10)
    large = estimate_sieve_bytes(10**6, False, 2**16)
    assert large - small == (2**16 - 2**10) * SEGMENT_WORK_BYTES
    assert estimate_sieve_bytes(10**6, True, 2**16) > large


def test_sieve_without_spf_table():
    sieve = build_sieve(1000, with_spf=False)
    assert not sieve.has_spf
    assert sieve.prime_count(1000) == 168
    with pytest.raises(PreconditionError):
        sieve.smallest_factor(10)
    assert factorize(360, sieve).factors == ((2, 3), (3, 2), (5, 1))


def test_sieve_is_independent_of_segmentation_and_workers():
    reference = build_sieve(10**5)
    for kwargs in ({'segment_size': 1000}, {'segment_size': 4099}, {'segment_size': 2**14, 'workers': 2}):
        other = build_sieve(10**5, **kwargs)
        assert np.array_equal(reference.table, other.table)
        assert np.array_equal(reference.primes, other.primes)
        assert np.array_equal(reference.spf, other.spf)


def test_sieve_arrays_are_read_only(sieve_1e5):
    with pytest.raises(ValueError):
        sieve_1e5.primes[0] = 4


# ---------- is_prime ----------

def test_is_prime_examples():
    assert is_prime(2)
    assert not is_prime(561)
    assert is_prime(10**9 + 7)
    assert not is_prime(0)
    assert not is_prime(1)


def test_is_prime_strong_pseudoprimes_and_large_values():
    assert not is_prime(2047)              # strong pseudoprime to base 2
    assert not is_prime(3215031751)        # strong pseudoprime to bases 2, 3, 5, 7
    assert is_prime(2**61 - 1)
    assert is_prime(18446744073709551557)  # largest prime below 2^64
    assert not is_prime(2**64 - 1)


def test_is_prime_domain():
    with pytest.raises(PreconditionError):
        is_prime(-1)
    with pytest.raises(PreconditionError):
        is_prime(2**64)


def test_sieve_and_miller_rabin_agree(sieve_1e5):
    for n in range(10**5 + 1):
        assert is_prime(n, sieve_1e5) == miller_rabin(n)


# ---------- primes_up_to / prime_count ----------

def test_primes_up_to(sieve_1e5):
    assert primes_up_to(10, sieve_1e5) == [2, 3, 5, 7]
    assert primes_up_to(2, sieve_1e5) == [2]
    hundred = primes_up_to(100, sieve_1e5)
    assert len(hundred) == 25 and hundred[-1] == 97


def test_primes_up_to_beyond_sieve(sieve_1e5):
    with pytest.raises(PreconditionError):
        primes_up_to(10**5 + 1, sieve_1e5)


def test_prime_count(sieve_1e5):
    assert prime_count(1, sieve_1e5) == 0
    assert prime_count(2, sieve_1e5) == 1
    assert prime_count(100, sieve_1e5) == 25
    with pytest.raises(PreconditionError):
        prime_count(10**6, sieve_1e5)


def test_prime_count_steps(sieve_1e5):
    counts = sieve_1e5.count_array(np.arange(0, 10**4 + 1))
    steps = np.diff(counts)
    assert set(steps.tolist()) <= {0, 1}
    for n in range(1, 10**4 + 1):
        assert (steps[n - 1] == 1) == is_prime(n)


def test_next_and_prev_prime(sieve_1e5):
    assert sieve_1e5.next_prime(1) == 2
    assert sieve_1e5.next_prime(13) == 17
    assert sieve_1e5.prev_prime(13) == 13
    assert sieve_1e5.prev_prime(1) is None


# ---------- factorize ----------

def test_factorize_examples():
    assert factorize(1).factors == ()
    assert factorize(1024).factors == ((2, 10),)
    assert factorize(1000003 * 1000033).factors == ((1000003, 1), (1000033, 1))


def test_factorize_rejects_zero():
    with pytest.raises(PreconditionError):
        factorize(0)


def test_factorize_large_semiprime():
    p, q = 2147483647, 4294967291
    result = factorize(p * q)
    assert result.factors == ((p, 1), (q, 1))
    assert str(result) == f"{p} * {q}"


def test_pollard_brent_finds_a_proper_factor():
    n = 1000003 * 1000033
    d = pollard_brent(n)
    assert 1 < d < n and n % d == 0


def test_factorize_round_trip_sample(sieve_1e5):
    sample = np.random.default_rng(7).integers(1, 10**9, size=300)
    for n in sample.tolist():
        result = factorize(n)
        assert result.multiply() == n
        assert all(is_prime(p) for p in result.distinct_primes)
        assert list(result.distinct_primes) == sorted(set(result.distinct_primes))
        assert factorize(n, sieve_1e5) == result


def test_primality_agrees_with_factorization(sieve_1e5):
    for n in range(2, 10**5 + 1):
        result = factorize(n, sieve_1e5)
        assert is_prime(n, sieve_1e5) == (result.factors == ((n, 1),))


def test_factorization_multiply():
    assert Factorization(value=360, factors=((2, 3), (3, 2), (5, 1))).multiply() == 360
    assert str(Factorization(value=1, factors=())) == "1"
