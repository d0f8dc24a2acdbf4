"""
Tests for the interval constructions and the short-interval gap check
"""

import pytest

from primelab_modules import constructions
from primelab_modules.constructions import (
    build_example2_set, gap_check_iwaniec_pintz, prime_in_interval, survey_intervals,
)
from primelab_modules.errors import ConstructionError, PreconditionError
from primelab_modules.factor_set import factor_set_by_scan
from primelab_modules.sieve_core import build_sieve, is_prime, miller_rabin


# ---------- prime_in_interval ----------

@pytest.mark.parametrize('n, alpha, expected', [(1, 3, 2), (2, 3, 11), (3, 2, 11)])
def test_prime_in_interval_examples(n, alpha, expected, sieve_1e5):
    assert prime_in_interval(n, alpha) == expected
    assert prime_in_interval(n, alpha, sieve_1e5) == expected


def test_prime_in_interval_is_smallest(sieve_1e5):
    for n in range(1, 40):
        p = prime_in_interval(n, 3, sieve_1e5)
        assert n**3 < p <= (n + 1)**3
        assert not any(is_prime(m) for m in range(n**3 + 1, p))


def test_prime_in_interval_without_sieve_agrees(sieve_1e6):
    for n in range(1, 100):
        assert prime_in_interval(n, 3) == prime_in_interval(n, 3, sieve_1e6)


def test_prime_in_interval_large_n():
    n = 10**6
    p = prime_in_interval(n, 3)
    assert n**3 < p <= (n + 1)**3 and is_prime(p)


def _next_prime_by_miller_rabin(start, stop):
    return next((m for m in range(start, stop + 1) if miller_rabin(m)), None)


def test_interval_sieve_matches_miller_rabin_across_windows(monkeypatch):
    monkeypatch.setattr(constructions, 'INTERVAL_WINDOW', 8)
    for start, stop in [(2, 2), (2, 30), (24, 28), (1328, 1400), (113, 127), (10**6, 10**6 + 200)]:
        assert constructions._first_prime_between(start, stop) == _next_prime_by_miller_rabin(start, stop)


def test_interval_sieve_confirms_survivors_beyond_the_base_primes():
    semiprime = 65537 * 65539
    assert constructions._first_prime_between(semiprime, semiprime) is None
    assert constructions._first_prime_between(semiprime, semiprime + 2000) == \
        _next_prime_by_miller_rabin(semiprime, semiprime + 2000)


def test_prime_in_interval_domain():
    with pytest.raises(PreconditionError):
        prime_in_interval(2**21, 3)
    with pytest.raises(PreconditionError):
        prime_in_interval(5, 1)
    with pytest.raises(PreconditionError):
        prime_in_interval(0, 3)


# ---------- Survey ----------

def test_survey_of_squares_is_nonempty():
    rows = survey_intervals(2, 100)
    assert len(rows) == 100
    assert all(p is not None for _, p in rows)
    assert rows[0] == (1, 2)


def test_survey_is_independent_of_workers():
    assert survey_intervals(3, 600, workers=2) == survey_intervals(3, 600)


# ---------- Interval prime set ----------

def test_build_small_set():
    summary = build_example2_set(3, 3)
    assert summary.primes == (2, 11, 29)
    assert summary.spec.elements == (2, 11, 29)
    assert [round(r, 12) for _, _, r in summary.rows] == [0.5, round(2 / 3, 12), 0.75]


@pytest.mark.slow
def test_build_ratio_approaches_one():
    summary = build_example2_set(3, 10**4)
    assert 0.98 <= summary.final_ratio <= 1.0
    assert len(summary.primes) == 10**4


def test_interval_primes_witness_themselves():
    summary = build_example2_set(3, 50)
    top = summary.primes[-1]
    fs = factor_set_by_scan(summary.spec, top, top)
    assert fs.primes == summary.primes
    assert fs.complete
    assert all(fs.witnesses[p].value == p for p in fs.primes)


def test_build_needs_alpha_three():
    with pytest.raises(PreconditionError):
        build_example2_set(2, 10)
    with pytest.raises(PreconditionError):
        build_example2_set(3, 0)


def test_empty_interval_names_its_index(monkeypatch):
    real = constructions.prime_in_interval

    def fake(n, alpha, sieve=None):
        return None if n == 2 else real(n, alpha, sieve)

    monkeypatch.setattr(constructions, 'prime_in_interval', fake)
    with pytest.raises(ConstructionError) as excinfo:
        build_example2_set(3, 5)
    assert excinfo.value.n == 2
    assert excinfo.value.exit_code == 2


# ---------- Gap check ----------

def test_gap_check_small(sieve_1e5):
    result = gap_check_iwaniec_pintz(100, sieve_1e5)
    assert result.passed
    assert result.failures == 0 and result.first_failure is None
    assert result.worst_count >= 1


def test_gap_check_to_a_million(sieve_1e6):
    result = gap_check_iwaniec_pintz(10**6, sieve_1e6)
    assert result.passed
    assert 2 <= result.worst_n <= 10**6


def test_gap_check_needs_a_covering_sieve():
    small = build_sieve(1000)
    with pytest.raises(PreconditionError):
        gap_check_iwaniec_pintz(10**4, small)
    with pytest.raises(PreconditionError):
        gap_check_iwaniec_pintz(1, small)
