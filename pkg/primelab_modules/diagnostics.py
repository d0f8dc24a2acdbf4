"""
Divergence diagnostics for PrimeLab
Reciprocal sums, Euler products, the Stieltjes identity, witnesses and fits over P(S)
"""

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .config import (
    FLOAT_REL_TOL, MERTENS_CONSTANT, SEGMENT_SIZE, SERIES_POINTS_PER_DECADE,
    STIELTJES_TOLERANCE,
)
from .errors import PreconditionError, SpecSyntaxError
from .factor_set import PiSTable
from .sequences import enumerate_window, render_spec

logger = logging.getLogger('PrimeLab.Diagnostics')

LOG_BASE = 'natural'

# Witness lists in reports are thinned to at most this many entries
WITNESS_SAMPLE = 1000


# ---------- Weight series ----------

@dataclass(frozen=True)
class InverseNLogR:
    """a_n = 1 / (n (log n)^r)"""
    r: float
    start: int = 2

    def required_count(self, ns, alpha):
        """pi_S(n) must reach n^(1/alpha) / (log n)^r"""
        ns = np.asarray(ns, dtype=np.float64)
        return np.power(ns, 1.0 / alpha) / np.power(np.log(ns), self.r)

    def value(self, n):
        return 1.0 / (n * math.log(n) ** self.r)


@dataclass(frozen=True)
class InverseNLogLogLogR:
    """a_n = 1 / (n log n (log log n)^r)"""
    r: float
    start: int = 3

    def required_count(self, ns, alpha):
        ns = np.asarray(ns, dtype=np.float64)
        log_n = np.log(ns)
        return np.power(ns, 1.0 / alpha) / (log_n * np.power(np.log(log_n), self.r))

    def value(self, n):
        log_n = math.log(n)
        return 1.0 / (n * log_n * math.log(log_n) ** self.r)


@dataclass(frozen=True)
class Custom:
    """Caller-supplied positive weights; summability is the caller's claim"""
    evaluator: Callable
    start: int = 1
    name: str = 'custom'

    def required_count(self, ns, alpha):
        ns = np.asarray(ns, dtype=np.float64)
        weights = np.array([float(self.evaluator(int(n))) for n in ns], dtype=np.float64)
        if weights.size and not np.all(weights > 0):
            raise PreconditionError(f"custom weights must be positive from n={self.start}", field='weights')
        return weights * np.power(ns, 1.0 + 1.0 / alpha)

    def value(self, n):
        return float(self.evaluator(n))


def validate_weights(weights):
    if isinstance(weights, (InverseNLogR, InverseNLogLogLogR)):
        if not weights.r > 1:
            raise PreconditionError(f"weight exponent r must be > 1, got {weights.r}", field='weights')
    elif not isinstance(weights, Custom):
        raise PreconditionError(f"unknown weight series {weights!r}", field='weights')
    if weights.start < 1:
        raise PreconditionError(f"weight start index must be >= 1, got {weights.start}", field='weights')
    return weights


def parse_weights(text):
    """'log:r' or 'loglog:r'"""
    kind, _, arg = str(text).strip().partition(':')
    try:
        r = float(arg) if arg else 2.0
    except ValueError:
        raise SpecSyntaxError(f"weight exponent must be a number, got {text!r}", field='weights')
    if kind == 'log':
        return validate_weights(InverseNLogR(r))
    if kind == 'loglog':
        return validate_weights(InverseNLogLogLogR(r))
    raise SpecSyntaxError(f"unknown weight series {kind!r} (expected log:r or loglog:r)", field='weights')


def render_weights(weights):
    if isinstance(weights, InverseNLogR):
        return f"log:{weights.r:g}"
    if isinstance(weights, InverseNLogLogLogR):
        return f"loglog:{weights.r:g}"
    return weights.name


# ---------- Shared checks ----------

def _require_alpha(alpha):
    if not alpha >= 1:
        raise PreconditionError(f"alpha must be >= 1, got {alpha}", field='alpha')


def _require_bound(prime_bound, N, lowest=1):
    if N < lowest:
        raise PreconditionError(f"N must be >= {lowest}, got {N}", field='N')
    if N > prime_bound:
        raise PreconditionError(f"N={N} is beyond the factor set's prime bound {prime_bound}", field='N')


def _primes(fs, N):
    primes = np.array(fs.primes, dtype=np.int64)
    return primes[:int(np.searchsorted(primes, N, side='right'))]


def _reciprocal_terms(primes, alpha):
    return np.power(primes.astype(np.float64), -1.0 / alpha)


def _n_chunks(lo, hi):
    for start in range(lo, hi + 1, SEGMENT_SIZE):
        yield np.arange(start, min(hi, start + SEGMENT_SIZE - 1) + 1, dtype=np.int64)


# ---------- Sums and products ----------

def partial_sum_reciprocal(fs, alpha, N):
    """Sum of p^(-1/alpha) over the factor set's primes <= N"""
    _require_alpha(alpha)
    _require_bound(fs.prime_bound, N)
    return math.fsum(_reciprocal_terms(_primes(fs, N), alpha).tolist())


def log_euler_partial_product(fs, alpha, N):
    """Sum of -log(1 - p^(-1/alpha)) over primes <= N"""
    _require_alpha(alpha)
    _require_bound(fs.prime_bound, N)
    x = _reciprocal_terms(_primes(fs, N), alpha)
    return math.fsum((-np.log1p(-x)).tolist())


def euler_partial_product(fs, alpha, N):
    """Product of 1 / (1 - p^(-1/alpha)) over primes <= N; inf once it leaves float range"""
    try:
        return math.exp(log_euler_partial_product(fs, alpha, N))
    except OverflowError:
        return math.inf


def weighted_pi_sum(table, alpha, N):
    """Sum over n = 1..N of pi_S(n) / n^(1 + 1/alpha)"""
    _require_alpha(alpha)
    _require_bound(table.prime_bound, N)
    exponent = 1.0 + 1.0 / alpha

    def terms():
        for ns in _n_chunks(1, N):
            counts = table.evaluate_many(ns).astype(np.float64)
            yield (counts / np.power(ns.astype(np.float64), exponent)).tolist()

    return math.fsum(itertools.chain.from_iterable(terms()))


def mertens_gap(fs, N):
    """Sum of 1/p over primes <= N minus log log N; tends to the Mertens constant"""
    if N < 3:
        raise PreconditionError(f"Mertens comparison needs N >= 3, got {N}", field='N')
    return partial_sum_reciprocal(fs, 1.0, N) - math.log(math.log(N))


@dataclass(frozen=True)
class BridgeCheck:
    holds: bool
    log_product: float
    partial_sum: float
    count: int
    tightest_prime: Optional[int]


def product_sum_bridge(fs, alpha, N):
    """Termwise -log(1 - x) >= x with x = p^(-1/alpha), so log product >= sum"""
    _require_alpha(alpha)
    _require_bound(fs.prime_bound, N)
    primes = _primes(fs, N)
    x = _reciprocal_terms(primes, alpha)
    log_terms = -np.log1p(-x)
    slack = log_terms - x
    holds = bool(np.all(slack >= 0))
    tightest = int(primes[int(np.argmin(slack))]) if primes.size else None
    return BridgeCheck(holds=holds, log_product=math.fsum(log_terms.tolist()),
                       partial_sum=math.fsum(x.tolist()), count=int(primes.size),
                       tightest_prime=tightest)


# ---------- Comparability ----------

@dataclass(frozen=True)
class ComparabilityResult:
    passed: bool
    alpha: float
    count: int
    left_failures: int
    right_failures: int
    worst_left_slack: float
    worst_left_prime: int
    worst_right_slack: float
    worst_right_prime: int
    right_equality_primes: tuple = ()


def comparability_check(alpha, primes):
    """p^(-1/a) < 1/(1 - p^(-1/a)) - 1 <= p^(-1/a) / (1 - 2^(-1/a)) for every p

    Slacks are relative to the smaller side; a zero right slack is the
    equality case at p = 2.
    """
    _require_alpha(alpha)
    primes = np.asarray(primes, dtype=np.int64)
    if primes.size == 0:
        raise PreconditionError("comparability check needs at least one prime", field='primes')

    exponent = -1.0 / alpha
    x = np.power(primes.astype(np.float64), exponent)
    two = np.power(np.float64(2.0), exponent)
    x[primes == 2] = two  # p = 2 must reproduce the right-hand denominator exactly
    middle = x / (1.0 - x)
    right = x / (1.0 - two)

    left_slack = (middle - x) / x
    right_slack = (right - middle) / right
    left_bad = int(np.count_nonzero(~(x < middle)))
    right_bad = int(np.count_nonzero(~(middle <= right)))
    i_left = int(np.argmin(left_slack))
    i_right = int(np.argmin(right_slack))

    result = ComparabilityResult(
        passed=left_bad == 0 and right_bad == 0,
        alpha=float(alpha),
        count=int(primes.size),
        left_failures=left_bad,
        right_failures=right_bad,
        worst_left_slack=float(left_slack[i_left]),
        worst_left_prime=int(primes[i_left]),
        worst_right_slack=float(right_slack[i_right]),
        worst_right_prime=int(primes[i_right]),
        right_equality_primes=tuple(int(p) for p in primes[middle == right]),
    )
    if not result.passed:
        logger.error(f"Comparability fails for alpha={alpha}: "
                     f"{left_bad} left, {right_bad} right violations")
    return result


# ---------- Stieltjes identity ----------

@dataclass(frozen=True)
class StieltjesTerms:
    """Sum of p^(-1/a) against boundary + coefficient * piecewise integral"""
    lhs: float
    boundary: float
    piecewise: float   # (1/alpha) * integral of pi_S(t) t^-(1+1/alpha) over [1, N]
    residual: float
    alternate_residual: float


def _stieltjes_parts(table, alpha, N):
    primes = table.primes_up_to(N).astype(np.float64)
    k = primes.size
    exponent = -1.0 / alpha
    at_primes = np.power(primes, exponent)
    at_next = np.append(at_primes[1:], N ** exponent)
    heights = np.arange(1, k + 1, dtype=np.float64)
    lhs_terms = at_primes.tolist()
    boundary = k * N ** exponent
    # pi_S is constant (= i) on [p_i, p_{i+1}), so each piece integrates in closed form
    piece_plus = (heights * at_primes).tolist()
    piece_minus = (heights * at_next).tolist()
    return lhs_terms, boundary, piece_plus, piece_minus


def stieltjes_terms(table, alpha, N):
    _require_alpha(alpha)
    _require_bound(table.prime_bound, N, lowest=2)
    lhs_terms, boundary, plus, minus = _stieltjes_parts(table, alpha, N)
    lhs = math.fsum(lhs_terms)
    piecewise = math.fsum(plus + [-m for m in minus])
    scale = max(1.0, abs(lhs))
    difference = math.fsum(lhs_terms + [-boundary] + [-p for p in plus] + minus)
    # the printed coefficient 1 + 1/alpha is alpha + 1 times the piecewise sum
    alternate = math.fsum(lhs_terms + [-boundary] + [-(alpha + 1) * p for p in plus]
                          + [(alpha + 1) * m for m in minus])
    return StieltjesTerms(lhs=lhs, boundary=boundary, piecewise=piecewise,
                          residual=abs(difference) / scale,
                          alternate_residual=abs(alternate) / scale)


def stieltjes_identity_residual(table, alpha, N):
    """Relative residual of the integration-by-parts identity with coefficient 1/alpha"""
    terms = stieltjes_terms(table, alpha, N)
    if terms.residual > STIELTJES_TOLERANCE:
        logger.warning(f"Stieltjes residual {terms.residual:.3e} at alpha={alpha}, N={N}")
    return terms.residual


def alternate_coefficient_residual(table, alpha, N):
    """Same identity with coefficient 1 + 1/alpha; nonzero as soon as one prime is <= N"""
    return stieltjes_terms(table, alpha, N).alternate_residual


# ---------- Witnesses ----------

def io_witnesses(table, alpha, weights, N):
    """Every n in [start, N] with pi_S(n) / n^(1 + 1/alpha) >= a_n"""
    _require_alpha(alpha)
    validate_weights(weights)
    _require_bound(table.prime_bound, N)
    found = []
    if N < weights.start or len(table.factor_set) == 0:
        return found
    for ns in _n_chunks(weights.start, N):
        counts = table.evaluate_many(ns)
        hits = ns[counts >= weights.required_count(ns, alpha)]
        found.extend(int(n) for n in hits)
    logger.debug(f"{len(found)} witnesses for {render_weights(weights)} up to {N}")
    return found


def is_witness(table, alpha, weights, n):
    """Direct re-evaluation of the witness inequality at one n"""
    count = table.evaluate(n)
    return count / n ** (1.0 + 1.0 / alpha) >= weights.value(n)


# ---------- Harmonic lower bound ----------

@dataclass(frozen=True)
class HarmonicCheck:
    status: str          # 'pass', 'fail' or 'precondition-violated'
    lhs: float
    rhs: float
    count: int
    equality: bool
    first_violation: Optional[int] = None  # element index j with s_j > K j^alpha

    @property
    def holds(self):
        return self.status == 'pass'


def harmonic_lower_bound_check(spec, alpha, K, N, max_elements=None):
    """Sum over s <= N of s^(-1/alpha) against K^(-1/alpha) times the harmonic sum"""
    _require_alpha(alpha)
    if K <= 0:
        raise PreconditionError(f"K must be > 0, got {K}", field='K')
    window = enumerate_window(spec, N, max_elements)
    if len(window) == 0:
        raise PreconditionError(f"no element of {render_spec(spec)} is <= {N}", field='N')

    s = window.elements.astype(np.float64)
    j = np.arange(1, len(window) + 1, dtype=np.float64)
    above = np.flatnonzero(s > K * np.power(j, alpha) * (1 + FLOAT_REL_TOL))

    lhs = math.fsum(np.power(s, -1.0 / alpha).tolist())
    rhs = K ** (-1.0 / alpha) * math.fsum((1.0 / j).tolist())
    equality = math.isclose(lhs, rhs, rel_tol=FLOAT_REL_TOL * 10)

    if above.size:
        status = 'precondition-violated'
        first = int(above[0]) + 1
        logger.info(f"s_j <= K j^alpha fails first at j={first} for {render_spec(spec)}")
    else:
        status = 'pass' if lhs >= rhs or equality else 'fail'
        first = None
    return HarmonicCheck(status=status, lhs=lhs, rhs=rhs, count=len(window),
                         equality=equality, first_violation=first)


# ---------- Fits ----------

@dataclass(frozen=True)
class ChebyshevFit:
    m_hat: float
    M_hat: float
    argmin: int
    argmax: int
    n_range: tuple
    alpha: float

    def brackets(self, count, n):
        """m_hat n^(1/a)/log n <= count <= M_hat n^(1/a)/log n"""
        scale = n ** (1.0 / self.alpha) / math.log(n)
        tol = FLOAT_REL_TOL * max(1.0, count)
        return self.m_hat * scale - tol <= count <= self.M_hat * scale + tol


def _range_within(table, n_range):
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo < 2:
        raise PreconditionError(f"range must start at n >= 2, got {lo}", field='range')
    if lo > hi:
        raise PreconditionError(f"empty range {lo}:{hi}", field='range')
    _require_bound(table.prime_bound, hi)
    return lo, hi


def chebyshev_fit(table, alpha, n_range):
    """min and max of pi_S(n) log n / n^(1/alpha) over the range; ties go to the smaller n"""
    _require_alpha(alpha)
    lo, hi = _range_within(table, n_range)
    best_min = best_max = None
    for ns in _n_chunks(lo, hi):
        x = ns.astype(np.float64)
        values = table.evaluate_many(ns) * np.log(x) / np.power(x, 1.0 / alpha)
        i, k = int(np.argmin(values)), int(np.argmax(values))
        if best_min is None or values[i] < best_min[0]:
            best_min = (float(values[i]), int(ns[i]))
        if best_max is None or values[k] > best_max[0]:
            best_max = (float(values[k]), int(ns[k]))
    return ChebyshevFit(m_hat=best_min[0], M_hat=best_max[0], argmin=best_min[1],
                        argmax=best_max[1], n_range=(lo, hi), alpha=float(alpha))


@dataclass(frozen=True)
class ExponentFit:
    """Empirical log-log slopes; no bound is claimed from them"""
    slope_count: float       # log pi_S(n) against log n
    slope_count_log: float   # log(pi_S(n) log n) against log n
    points: int
    n_range: tuple
    label: str = 'empirical'


def exponent_fit(table, n_range, points=200):
    lo, hi = _range_within(table, n_range)
    ns = np.unique(np.geomspace(lo, hi, points).astype(np.int64))
    counts = table.evaluate_many(ns).astype(np.float64)
    keep = counts > 0
    ns, counts = ns[keep].astype(np.float64), counts[keep]
    if ns.size < 2:
        raise PreconditionError(f"exponent fit needs pi_S > 0 at two points in {lo}:{hi}", field='range')
    log_n = np.log(ns)
    slope_count = float(np.polyfit(log_n, np.log(counts), 1)[0])
    slope_count_log = float(np.polyfit(log_n, np.log(counts * log_n), 1)[0])
    return ExponentFit(slope_count=slope_count, slope_count_log=slope_count_log,
                       points=int(ns.size), n_range=(lo, hi))


# ---------- Report ----------

def checkpoints(N, lowest=2):
    """1..9 times each power of ten up to N, plus N itself"""
    points = set()
    decade = 1
    while decade <= N:
        for c in range(1, SERIES_POINTS_PER_DECADE + 1):
            value = c * decade
            if lowest <= value <= N:
                points.add(value)
        decade *= 10
    points.add(N)
    return sorted(points)


def _cumulative_at(values_by_segment):
    """Running correctly-rounded totals of per-segment sums"""
    sums = [math.fsum(seg) for seg in values_by_segment]
    return [math.fsum(sums[:i + 1]) for i in range(len(sums))]


def _segments(keys, values, points):
    cuts = np.searchsorted(keys, np.asarray(points, dtype=np.int64), side='right')
    bounds = [0] + [int(c) for c in cuts]
    return [values[a:b].tolist() for a, b in zip(bounds, bounds[1:])]


@dataclass(frozen=True, eq=False)
class DiagnosticsReport:
    alpha: float
    prime_bound: int
    N: int
    complete: bool
    coverage: str
    checkpoints: tuple
    partial_sums: tuple
    log_partial_products: tuple
    weighted_sums: tuple
    stieltjes: StieltjesTerms
    comparability: Optional[ComparabilityResult]
    bridge: BridgeCheck
    weights: str
    witnesses: tuple = field(repr=False)
    chebyshev: Optional[ChebyshevFit] = None
    exponents: Optional[ExponentFit] = None
    mertens_gap: Optional[float] = None
    log_base: str = LOG_BASE

    @property
    def passed(self):
        checks = [self.bridge.holds, self.stieltjes.residual <= STIELTJES_TOLERANCE]
        if self.comparability is not None:
            checks.append(self.comparability.passed)
        return all(checks)

    def series_rows(self):
        """(metric, n, value) rows for flat CSV"""
        rows = []
        for name, series in (('partial_sum', self.partial_sums),
                             ('log_partial_product', self.log_partial_products),
                             ('weighted_pi_sum', self.weighted_sums)):
            rows.extend((name, n, v) for n, v in zip(self.checkpoints, series))
        return rows

    def witness_sample(self):
        step = max(1, -(-len(self.witnesses) // WITNESS_SAMPLE))
        return list(self.witnesses[::step])


def _optional_exponent_fit(table, N):
    if N < 3:
        return None
    try:
        return exponent_fit(table, (2, N))
    except PreconditionError as e:
        logger.debug(f"Exponent fit skipped: {e}")
        return None


def build_report(fs, alpha, N, weights=None):
    """Every diagnostic for one factor set at one (alpha, N)"""
    _require_alpha(alpha)
    _require_bound(fs.prime_bound, N, lowest=2)
    weights = validate_weights(weights or InverseNLogR(2.0))
    table = PiSTable.from_factor_set(fs)
    points = checkpoints(N)

    primes = _primes(fs, N)
    x = _reciprocal_terms(primes, alpha)
    sums = _cumulative_at(_segments(primes, x, points))
    log_products = _cumulative_at(_segments(primes, -np.log1p(-x), points))

    ns = np.arange(1, N + 1, dtype=np.int64)
    weighted_terms = table.evaluate_many(ns) / np.power(ns.astype(np.float64), 1.0 + 1.0 / alpha)
    weighted = _cumulative_at(_segments(ns, weighted_terms, points))

    comparability = comparability_check(alpha, primes) if primes.size else None
    mertens = None
    if alpha == 1 and N >= 3:
        mertens = sums[-1] - math.log(math.log(N))

    report = DiagnosticsReport(
        alpha=float(alpha), prime_bound=fs.prime_bound, N=int(N),
        complete=fs.complete, coverage=fs.coverage,
        checkpoints=tuple(points), partial_sums=tuple(sums),
        log_partial_products=tuple(log_products),
        weighted_sums=tuple(weighted),
        stieltjes=stieltjes_terms(table, alpha, N),
        comparability=comparability,
        bridge=product_sum_bridge(fs, alpha, N),
        weights=render_weights(weights),
        witnesses=tuple(io_witnesses(table, alpha, weights, N)),
        chebyshev=chebyshev_fit(table, alpha, (2, N)),
        exponents=_optional_exponent_fit(table, N),
        mertens_gap=mertens,
    )
    logger.info(f"Diagnostics at alpha={alpha}, N={N}: sum={sums[-1]:.6g}, "
                f"residual={report.stieltjes.residual:.3e}, {len(report.witnesses)} witnesses")
    if mertens is not None and fs.complete:
        logger.debug(f"Mertens gap {mertens:.6f} (constant {MERTENS_CONSTANT})")
    return report
