"""
Prime sieve and 64-bit factorization for PrimeLab
Segmented Eratosthenes tables, deterministic Miller-Rabin, Pollard-Brent rho
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import (
    SEGMENT_SIZE, MILLER_RABIN_BASES, TRIAL_DIVISION_BOUND, RHO_BATCH,
    DEFAULT_CONFIG,
)
from .errors import PreconditionError, BudgetError, PropertyViolation
from .parallel import ordered_imap
from .system_monitor import available_memory_bytes

logger = logging.getLogger('PrimeLab.Sieve')

UINT64_LIMIT = 2**64

# Transient bytes per entry while one segment is sieved and merged,
# not counting the smallest-factor slices
SEGMENT_WORK_BYTES = 32


def simple_sieve(limit):
    """Primes up to `limit` with a plain (unsegmented) sieve"""
    if limit < 2:
        return np.array([], dtype=np.int64)
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, math.isqrt(limit) + 1):
        if flags[p]:
            flags[p * p::p] = False
    return np.flatnonzero(flags).astype(np.int64)


_SMALL_PRIMES = tuple(int(p) for p in simple_sieve(TRIAL_DIVISION_BOUND))


# ---------- Domain types ----------

@dataclass(frozen=True)
class Factorization:
    """Complete factorization: ascending (prime, exponent) pairs"""
    value: int
    factors: tuple

    def multiply(self):
        product = 1
        for p, e in self.factors:
            product *= p ** e
        return product

    @property
    def distinct_primes(self):
        return tuple(p for p, _ in self.factors)

    def __str__(self):
        if not self.factors:
            return "1"
        return " * ".join(f"{p}^{e}" if e > 1 else str(p) for p, e in self.factors)


@dataclass(frozen=True, eq=False)
class PrimeSieve:
    """Primality and smallest-prime-factor knowledge over [0, limit]

    Immutable after construction; the arrays are marked read-only so one
    sieve can be shared by concurrent readers.
    """
    limit: int
    table: np.ndarray          # bool, table[n] iff n is prime
    primes: np.ndarray         # int64, ascending
    spf: Optional[np.ndarray]  # smallest prime factor, or None
    segment_size: int = SEGMENT_SIZE

    @property
    def has_spf(self):
        return self.spf is not None

    def is_prime(self, n):
        return is_prime(n, self)

    def _require(self, n, what):
        if n > self.limit:
            raise PreconditionError(
                f"{what}={n} is beyond the sieve limit {self.limit}", field='sieve_limit')

    def prime_array(self, limit):
        """Ascending primes <= limit as a read-only numpy view"""
        self._require(limit, 'limit')
        return self.primes[:int(np.searchsorted(self.primes, limit, side='right'))]

    def primes_up_to(self, limit):
        return [int(p) for p in self.prime_array(limit)]

    def prime_count(self, n):
        if n < 0:
            raise PreconditionError(f"prime_count needs n >= 0, got {n}", field='n')
        self._require(n, 'n')
        return int(np.searchsorted(self.primes, n, side='right'))

    def count_array(self, ns):
        """Vectorized pi(n) for an array of n within the sieve"""
        ns = np.asarray(ns)
        if ns.size and int(ns.max()) > self.limit:
            self._require(int(ns.max()), 'n')
        return np.searchsorted(self.primes, ns, side='right')

    def next_prime(self, n):
        """Smallest prime > n, or None when it lies beyond the sieve"""
        idx = int(np.searchsorted(self.primes, n, side='right'))
        return int(self.primes[idx]) if idx < len(self.primes) else None

    def prev_prime(self, n):
        """Largest prime <= n, or None below 2"""
        self._require(n, 'n')
        idx = int(np.searchsorted(self.primes, n, side='right')) - 1
        return int(self.primes[idx]) if idx >= 0 else None

    def smallest_factor(self, n):
        if not self.has_spf:
            raise PreconditionError("sieve was built without a smallest-prime-factor table",
                                    field='smallest_factor_table')
        self._require(n, 'n')
        return int(self.spf[n])

    def factorize(self, n):
        return factorize(n, self)


# ---------- Construction ----------

def estimate_sieve_bytes(limit, with_spf, segment_size=None):
    """Approximate peak size of building a sieve of the given limit

    The finished tables plus the working set of one segment (its int64 index
    array, temporary masks and returned slices). Worker processes hold their
    own segment; the estimate is the same for every worker count.
    """
    prime_estimate = int(1.26 * limit / math.log(max(limit, 3))) + 1
    spf_bytes = _spf_dtype(limit)().itemsize if with_spf else 0
    tables = (limit + 1) * (1 + spf_bytes) + 8 * prime_estimate
    segment = min(int(segment_size or DEFAULT_CONFIG['segment_size']), limit + 1)
    working = segment * (SEGMENT_WORK_BYTES + 2 * spf_bytes)
    return tables + working


def _spf_dtype(limit):
    return np.uint32 if limit < 2**32 else np.uint64


def _sieve_segment(task):
    """Sieve [lo, hi); returns (prime flags, spf slice or None)"""
    lo, hi, base, with_spf = task
    size = hi - lo
    numbers = np.arange(lo, hi, dtype=np.int64)

    if with_spf:
        spf = np.zeros(size, dtype=_spf_dtype(hi))
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            if start >= hi:
                continue
            view = spf[start - lo::p]
            view[view == 0] = p
        flags = (spf == 0) & (numbers >= 2)
        spf[flags] = numbers[flags]
    else:
        spf = None
        flags = numbers >= 2
        for p in base:
            p = int(p)
            if p * p >= hi:
                break
            start = max(p * p, -(-lo // p) * p)
            if start < hi:
                flags[start - lo::p] = False

    return flags, spf


def build_sieve(limit, segment_size=None, with_spf=None, workers=1, memory_budget_mb=None):
    """Build a PrimeSieve over [2, limit] segment by segment

    with_spf: True to require the smallest-prime-factor table, False to skip
    it, None to include it only when it fits the memory budget. The result is
    identical for every segment size and worker count.
    """
    if isinstance(limit, bool) or not isinstance(limit, (int, np.integer)):
        raise PreconditionError(f"sieve limit must be an integer, got {limit!r}", field='sieve_limit')
    limit = int(limit)
    if limit < 2:
        raise PreconditionError(f"sieve limit must be >= 2, got {limit}", field='sieve_limit')

    segment_size = int(segment_size or DEFAULT_CONFIG['segment_size'])
    if segment_size < 2:
        raise PreconditionError(f"segment size must be >= 2, got {segment_size}", field='segment_size')

    budget_mb = memory_budget_mb if memory_budget_mb is not None else DEFAULT_CONFIG['memory_budget_mb']
    budget = int(budget_mb * 1024 * 1024)
    available = available_memory_bytes()
    if available is not None:
        budget = min(budget, available)

    if with_spf is None:
        with_spf = estimate_sieve_bytes(limit, True, segment_size) <= budget
        if not with_spf:
            logger.info(f"Smallest-factor table for limit {limit} dropped: over memory budget")
    needed = estimate_sieve_bytes(limit, with_spf, segment_size)
    if needed > budget:
        raise BudgetError(
            f"sieve limit {limit} needs ~{needed // 2**20} MB, budget is {budget // 2**20} MB "
            f"(raise --memory-budget-mb or lower --sieve-limit)", field='sieve_limit')

    base = simple_sieve(math.isqrt(limit))
    tasks = [(lo, min(lo + segment_size, limit + 1), base, with_spf)
             for lo in range(0, limit + 1, segment_size)]
    logger.info(f"Sieving [2, {limit}] in {len(tasks)} segments of {segment_size} "
                f"(spf={'on' if with_spf else 'off'}, workers={workers})")

    table = np.zeros(limit + 1, dtype=bool)
    spf = np.zeros(limit + 1, dtype=_spf_dtype(limit)) if with_spf else None
    for (flags, segment_spf), (lo, hi, _, _) in zip(ordered_imap(_sieve_segment, tasks, workers), tasks):
        table[lo:hi] = flags
        if spf is not None:
            spf[lo:hi] = segment_spf
        # drop the slices before the next segment is sieved
        del flags, segment_spf
    primes = np.flatnonzero(table).astype(np.int64, copy=False)

    for array in (table, primes, spf):
        if array is not None:
            array.flags.writeable = False

    logger.info(f"Sieve ready: pi({limit}) = {len(primes)}")
    return PrimeSieve(limit=limit, table=table, primes=primes, spf=spf, segment_size=segment_size)


# ---------- Primality ----------

def _check_domain(n, what='n'):
    if isinstance(n, bool) or not isinstance(n, (int, np.integer)):
        raise PreconditionError(f"{what} must be an integer, got {n!r}", field=what)
    n = int(n)
    if n < 0 or n >= UINT64_LIMIT:
        raise PreconditionError(f"{what}={n} is outside the unsigned 64-bit range", field=what)
    return n


def miller_rabin(n):
    """Deterministic Miller-Rabin, exact for every n < 2^64"""
    if n < 2:
        return False
    for p in _SMALL_PRIMES[:16]:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while not d & 1:
        d >>= 1
        s += 1
    for a in MILLER_RABIN_BASES:
        a %= n
        if a == 0:
            continue
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


def is_prime(n, sieve=None):
    """Primality of a non-negative 64-bit integer

    Table lookup when the sieve covers n, Miller-Rabin otherwise.
    """
    n = _check_domain(n)
    if sieve is not None and n <= sieve.limit:
        return bool(sieve.table[n])
    return miller_rabin(n)


def primes_up_to(limit, sieve):
    return sieve.primes_up_to(limit)


def prime_count(n, sieve):
    return sieve.prime_count(n)


# ---------- Factorization ----------

def pollard_brent(n):
    """A nontrivial factor of the odd composite n

    Deterministic: starts from y = 2 with increment c = 1 and moves to the
    next c whenever a cycle closes without a proper factor.
    """
    if n % 2 == 0:
        return 2
    root = math.isqrt(n)
    if root * root == n:
        return root

    for c in range(1, n):
        y, r, q, g = 2, 1, 1, 1
        x = ys = y
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(RHO_BATCH, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += RHO_BATCH
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g
        logger.debug(f"rho cycle failed for {n} with c={c}, retrying")

    raise PropertyViolation(f"Pollard-Brent found no factor of {n}")


def _split(m, sieve, out):
    """Accumulate the prime factorization of m > 1 into `out`"""
    stack = [m]
    while stack:
        m = stack.pop()
        if is_prime(m, sieve):
            out[m] = out.get(m, 0) + 1
            continue
        d = pollard_brent(m)
        stack.append(d)
        stack.append(m // d)


def factorize(n, sieve=None):
    """Complete factorization of a positive 64-bit integer

    Small factors come from the smallest-prime-factor table when the sieve
    covers n, otherwise from trial division; the remaining cofactor is split
    by Pollard-Brent and every emitted prime is certified.
    """
    n = _check_domain(n)
    if n == 0:
        raise PreconditionError("cannot factorize 0 (0 is never an element of S)", field='n')

    out = {}
    m = n
    if sieve is not None and sieve.has_spf and m <= sieve.limit:
        spf = sieve.spf
        while m > 1:
            p = int(spf[m])
            out[p] = out.get(p, 0) + 1
            m //= p
    else:
        for p in _SMALL_PRIMES:
            if p * p > m:
                break
            while m % p == 0:
                out[p] = out.get(p, 0) + 1
                m //= p
        if m > 1:
            _split(m, sieve, out)

    factors = tuple(sorted(out.items()))
    for p, _ in factors:
        if not is_prime(p, sieve):
            raise PropertyViolation(f"factorize({n}) emitted non-prime {p}")
    result = Factorization(value=n, factors=factors)
    if result.multiply() != n:
        raise PropertyViolation(f"factorize({n}) does not multiply back: {result}")
    return result
