"""
Interval constructions for PrimeLab
One prime per power interval, and the short-interval gap check it leans on
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .config import INT64_MAX, IWANIEC_PINTZ_EXPONENT, SEGMENT_SIZE
from .errors import ConstructionError, PreconditionError
from .parallel import chunked, ordered_map
from .sequences import ExplicitList, validate_spec
from .sieve_core import miller_rabin, simple_sieve

logger = logging.getLogger('PrimeLab.Constructions')

# Intervals are sieved with base primes up to this bound
BASE_PRIME_LIMIT = 1 << 16
BASE_PRIMES = simple_sieve(BASE_PRIME_LIMIT)
# Length of one sieved window of an interval
INTERVAL_WINDOW = 1024

# Interval indices handed to one worker task
SURVEY_CHUNK = 256


def _interval(n, alpha):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)) or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n!r}", field='n')
    if isinstance(alpha, bool) or not isinstance(alpha, (int, np.integer)) or alpha < 2:
        raise PreconditionError(f"alpha must be an integer >= 2, got {alpha!r}", field='alpha')
    n, alpha = int(n), int(alpha)
    hi = (n + 1) ** alpha
    if hi > INT64_MAX:
        raise PreconditionError(f"({n}+1)^{alpha} overflows the 64-bit domain", field='n')
    return n ** alpha, hi


def _first_prime_between(start, stop):
    """Smallest prime in [start, stop], or None

    [start, stop] is sieved window by window with the base primes up to
    sqrt(stop). When sqrt(stop) is past the base table, the survivors are
    confirmed by Miller-Rabin.
    """
    root = math.isqrt(stop)
    base = BASE_PRIMES[:int(np.searchsorted(BASE_PRIMES, root, side='right'))]
    confirm = root > BASE_PRIME_LIMIT
    small = [int(p) for p in base[base < INTERVAL_WINDOW]]
    large = base[base >= INTERVAL_WINDOW]
    large_squares = large * large

    lo = start
    while lo <= stop:
        size = min(stop - lo + 1, INTERVAL_WINDOW)
        flags = np.ones(size, dtype=bool)
        for p in small:
            first = max(p * p, lo + (-lo) % p) - lo
            flags[first::p] = False
        if large.size:
            # primes at least the window length hit it at most once
            offsets = np.where(large_squares >= lo, large_squares - lo, (-lo) % large)
            flags[offsets[offsets < size]] = False
        for i in np.flatnonzero(flags):
            candidate = lo + int(i)
            if candidate >= 2 and (not confirm or miller_rabin(candidate)):
                return candidate
        lo += size
    return None


def prime_in_interval(n, alpha, sieve=None):
    """Smallest prime p with n^alpha < p <= (n+1)^alpha, or None if there is none"""
    lo, hi = _interval(n, alpha)
    if sieve is not None and hi <= sieve.limit:
        p = sieve.next_prime(lo)
        return p if p is not None and p <= hi else None
    return _first_prime_between(lo + 1, hi)


def _survey_chunk(task):
    alpha, ns = task
    return [(n, prime_in_interval(n, alpha)) for n in ns]


def survey_intervals(alpha, n_max, sieve=None, workers=1):
    """(n, smallest prime in the interval or None) for n = 1..n_max"""
    _interval(max(1, int(n_max)), alpha)
    ns = list(range(1, int(n_max) + 1))
    if workers and workers > 1:
        rows = []
        for part in ordered_map(_survey_chunk, [(alpha, c) for c in chunked(ns, SURVEY_CHUNK)], workers):
            rows.extend(part)
    else:
        rows = [(n, prime_in_interval(n, alpha, sieve)) for n in ns]
    empty = sum(1 for _, p in rows if p is None)
    if empty:
        logger.warning(f"{empty} of {len(rows)} intervals (n^{alpha}, (n+1)^{alpha}] hold no prime")
    return rows


@dataclass(frozen=True, eq=False)
class Example2Summary:
    """One prime per interval and pi_S(x)/x^(1/alpha) at x = (n+1)^alpha"""
    alpha: int
    n_max: int
    rows: tuple = field(repr=False)   # (n, p_n, ratio)
    spec: ExplicitList = field(repr=False, default=None)

    @property
    def final_ratio(self):
        return self.rows[-1][2]

    @property
    def primes(self):
        return tuple(p for _, p, _ in self.rows)


def build_example2_set(alpha, n_max, sieve=None, workers=1):
    """S = {p_1, p_2, ...} with p_n the smallest prime in (n^alpha, (n+1)^alpha]

    Raises ConstructionError naming the first n whose interval is empty.
    """
    if isinstance(alpha, bool) or not isinstance(alpha, (int, np.integer)) or alpha < 3:
        raise PreconditionError(f"construction needs an integer alpha >= 3, got {alpha!r}", field='alpha')
    if n_max < 1:
        raise PreconditionError(f"n_max must be >= 1, got {n_max}", field='n_max')

    survey = survey_intervals(alpha, n_max, sieve, workers)
    for n, p in survey:
        if p is None:
            raise ConstructionError(f"interval ({n}^{alpha}, {n + 1}^{alpha}] contains no prime", n=n)

    primes = np.array([p for _, p in survey], dtype=np.int64)
    rows = []
    for n, p in survey:
        x = (n + 1) ** alpha
        count = int(np.searchsorted(primes, x, side='right'))
        rows.append((n, p, count / (n + 1)))

    spec = validate_spec(ExplicitList(tuple(int(p) for p in primes)))
    summary = Example2Summary(alpha=int(alpha), n_max=int(n_max), rows=tuple(rows), spec=spec)
    logger.info(f"Built {len(primes)} interval primes for alpha={alpha}; "
                f"final ratio {summary.final_ratio:.6f}")
    return summary


@dataclass(frozen=True)
class GapCheckResult:
    passed: bool
    N: int
    worst_n: int
    worst_count: int
    failures: int = 0
    first_failure: Optional[int] = None


def gap_check_iwaniec_pintz(N, sieve):
    """For every n in [2, N], is there a prime in (n - n^(23/42), n]?

    Reports the n with the fewest such primes (the smallest one on ties).
    """
    if N < 2:
        raise PreconditionError(f"gap check needs N >= 2, got {N}", field='N')
    if sieve is None or N > sieve.limit:
        raise PreconditionError(f"gap check up to {N} needs a sieve covering it", field='sieve_limit')

    worst_n, worst_count = None, None
    failures, first_failure = 0, None
    for start in range(2, N + 1, SEGMENT_SIZE):
        ns = np.arange(start, min(N, start + SEGMENT_SIZE - 1) + 1, dtype=np.int64)
        lower = np.floor(ns - np.power(ns.astype(np.float64), IWANIEC_PINTZ_EXPONENT))
        lower = np.maximum(lower, 0).astype(np.int64)
        counts = sieve.count_array(ns) - sieve.count_array(lower)
        i = int(np.argmin(counts))
        if worst_count is None or counts[i] < worst_count:
            worst_n, worst_count = int(ns[i]), int(counts[i])
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            failures += int(empty.size)
            if first_failure is None:
                first_failure = int(ns[empty[0]])

    result = GapCheckResult(passed=failures == 0, N=int(N), worst_n=worst_n,
                            worst_count=worst_count, failures=failures, first_failure=first_failure)
    if result.passed:
        logger.info(f"Gap check to {N} passed; tightest n={worst_n} with {worst_count} prime(s)")
    else:
        logger.warning(f"Gap check to {N}: {failures} empty windows, first at n={first_failure}")
    return result
