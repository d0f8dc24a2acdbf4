"""
Integer sequences for PrimeLab
Describe, materialize and measure sets S of positive integers
"""

import logging
import math
import pathlib
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import INT64_MAX, SEGMENT_SIZE, DEFAULT_CONFIG
from .errors import PreconditionError, BudgetError, SpecSyntaxError

logger = logging.getLogger('PrimeLab.Sequences')

# Offsets k(n) of the surrogate set are drawn in independent blocks so any
# prefix is the same whatever window it was generated for.
OFFSET_BLOCK = 1 << 16

# Largest Zelinsky block index whose lower end fits in 64 bits (2^(2^5) = 2^32)
ZELINSKY_MAX_BLOCK = 5


# ---------- Sequence specs ----------

@dataclass(frozen=True)
class PolynomialRange:
    """S = {|Q(n)| : n >= 1} minus zero; coefficients in ascending degree"""
    coefficients: tuple

    @property
    def degree(self):
        return len(self.coefficients) - 1

    def evaluate(self, n):
        value = 0
        for c in reversed(self.coefficients):
            value = value * n + c
        return value


@dataclass(frozen=True)
class ArithmeticProgression:
    """S = {a n + b : n >= 1}"""
    a: int
    b: int


@dataclass(frozen=True)
class PowersOfTwo:
    """S = {2^n : n >= 1}"""


@dataclass(frozen=True)
class ZelinskyLacunary:
    """Union of blocks [2^(2^n), 2^(2^(n+1))) over n of one parity

    parity 'odd' is the lacunary set itself; 'even' is its complement in the
    positive integers, which also contains 1.
    """
    parity: str = 'odd'


@dataclass(frozen=True)
class PseudoRandomOffset:
    """S = {3n + k(n)} with k(n) in {1, 2} drawn from a seeded stream"""
    seed: int


@dataclass(frozen=True)
class ExplicitList:
    """A finite strictly increasing list; `source` is the file it came from"""
    elements: tuple
    source: Optional[str] = None


SEQUENCE_TYPES = (PolynomialRange, ArithmeticProgression, PowersOfTwo,
                  ZelinskyLacunary, PseudoRandomOffset, ExplicitList)


def _is_int(value):
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


def validate_spec(spec):
    """Raise PreconditionError unless the sequence satisfies its invariants"""
    if isinstance(spec, PolynomialRange):
        coeffs = spec.coefficients
        if not coeffs or not all(_is_int(c) for c in coeffs):
            raise PreconditionError("polynomial coefficients must be integers", field='seq')
        if len(coeffs) < 2:
            raise PreconditionError("polynomial must have degree >= 1", field='seq')
        if coeffs[-1] == 0:
            raise PreconditionError("leading coefficient must be nonzero", field='seq')
    elif isinstance(spec, ArithmeticProgression):
        if not (_is_int(spec.a) and _is_int(spec.b)) or spec.a < 1 or spec.b < 0:
            raise PreconditionError(f"arithmetic progression needs a >= 1, b >= 0, got a={spec.a}, b={spec.b}",
                                    field='seq')
    elif isinstance(spec, ZelinskyLacunary):
        if spec.parity not in ('odd', 'even'):
            raise PreconditionError(f"zelinsky parity must be odd or even, got {spec.parity!r}", field='seq')
    elif isinstance(spec, PseudoRandomOffset):
        if not _is_int(spec.seed) or spec.seed < 0:
            raise PreconditionError(f"surrogate seed must be a non-negative integer, got {spec.seed!r}",
                                    field='seq')
    elif isinstance(spec, ExplicitList):
        elements = spec.elements
        if not all(_is_int(e) for e in elements):
            raise PreconditionError("list elements must be integers", field='seq')
        if elements and elements[0] < 1:
            raise PreconditionError("list elements must be >= 1", field='seq')
        for prev, cur in zip(elements, elements[1:]):
            if cur <= prev:
                raise PreconditionError(f"list must be strictly increasing ({prev} then {cur})", field='seq')
    elif not isinstance(spec, PowersOfTwo):
        raise PreconditionError(f"unknown sequence spec {spec!r}", field='seq')
    return spec


# ---------- Textual form ----------

def _parse_ints(text, what):
    try:
        return tuple(int(tok) for tok in text.split(',') if tok.strip() != '')
    except ValueError:
        raise SpecSyntaxError(f"{what} expects comma-separated integers, got {text!r}", field='seq')


def read_list_file(path):
    """One integer per line; blank lines and '#' comments are skipped"""
    values = []
    for lineno, line in enumerate(pathlib.Path(path).read_text().splitlines(), 1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise SpecSyntaxError(f"{path}:{lineno}: not an integer: {line!r}", field='seq')
    return tuple(values)


def parse_spec(text):
    """Parse the canonical text form, e.g. poly:1,0,1  ap:4,1  pow2  zelinsky"""
    if not isinstance(text, str) or not text.strip():
        raise SpecSyntaxError("empty sequence spec", field='seq')
    kind, _, arg = text.strip().partition(':')
    kind = kind.lower()

    if kind == 'poly':
        spec = PolynomialRange(_parse_ints(arg, 'poly'))
    elif kind == 'ap':
        values = _parse_ints(arg, 'ap')
        if len(values) != 2:
            raise SpecSyntaxError(f"ap expects 'ap:a,b', got {text!r}", field='seq')
        spec = ArithmeticProgression(*values)
    elif kind == 'pow2':
        if arg:
            raise SpecSyntaxError(f"pow2 takes no parameters, got {text!r}", field='seq')
        spec = PowersOfTwo()
    elif kind == 'zelinsky':
        spec = ZelinskyLacunary(arg.lower() or 'odd')
    elif kind == 'surrogate':
        values = _parse_ints(arg, 'surrogate')
        if len(values) != 1:
            raise SpecSyntaxError(f"surrogate expects 'surrogate:seed', got {text!r}", field='seq')
        spec = PseudoRandomOffset(values[0])
    elif kind == 'list':
        if arg.startswith('@'):
            spec = ExplicitList(read_list_file(arg[1:]), source=arg[1:])
        else:
            spec = ExplicitList(_parse_ints(arg, 'list'))
    else:
        raise SpecSyntaxError(f"unknown sequence kind {kind!r} in {text!r}", field='seq')

    return validate_spec(spec)


def render_spec(spec):
    """Canonical text form; parse_spec(render_spec(s)) == s"""
    if isinstance(spec, PolynomialRange):
        return "poly:" + ",".join(str(c) for c in spec.coefficients)
    if isinstance(spec, ArithmeticProgression):
        return f"ap:{spec.a},{spec.b}"
    if isinstance(spec, PowersOfTwo):
        return "pow2"
    if isinstance(spec, ZelinskyLacunary):
        return "zelinsky" if spec.parity == 'odd' else f"zelinsky:{spec.parity}"
    if isinstance(spec, PseudoRandomOffset):
        return f"surrogate:{spec.seed}"
    if isinstance(spec, ExplicitList):
        if spec.source is not None:
            return f"list:@{spec.source}"
        return "list:" + ",".join(str(e) for e in spec.elements)
    raise PreconditionError(f"unknown sequence spec {spec!r}", field='seq')


# ---------- Windows ----------

@dataclass(frozen=True, eq=False)
class SequenceWindow:
    """The elements of S that are <= bound, ascending and deduplicated"""
    spec: object
    bound: int
    elements: np.ndarray
    truncated: bool = False

    def __len__(self):
        return len(self.elements)

    def tolist(self):
        return [int(e) for e in self.elements]


@dataclass(frozen=True)
class DensityEstimate:
    alpha_hat: float
    K_hat: float
    max_residual: float
    sample_range: tuple


@dataclass(frozen=True)
class DensityCheck:
    holds: bool
    counterexample: Optional[int]
    count_at_counterexample: Optional[int]
    required_at_counterexample: Optional[float]
    n_range: tuple
    alpha: float
    K: float


def polynomial_tail_start(coefficients):
    """Index from which |Q(n)| is strictly increasing in n

    Beyond the Cauchy root bounds of Q and of Q(n+1) - Q(n) both keep the
    sign of the leading coefficient, so |Q| grows.
    """
    def cauchy(coeffs):
        if len(coeffs) < 2:
            return 0
        lead = abs(coeffs[-1])
        return 1 + -(-max(abs(c) for c in coeffs[:-1]) // lead)

    d = len(coefficients) - 1
    shifted = [0] * (d + 1)
    for i, c in enumerate(coefficients):
        for k in range(i + 1):
            shifted[k] += c * math.comb(i, k)
    difference = [s - c for s, c in zip(shifted, coefficients)][:d]
    return max(1, cauchy(list(coefficients)), cauchy(difference))


def surrogate_offsets(seed, count):
    """k(1), ..., k(count), each in {1, 2}"""
    if count <= 0:
        return np.array([], dtype=np.int64)
    blocks = -(-count // OFFSET_BLOCK)
    parts = [np.random.default_rng([seed, b]).integers(1, 3, size=OFFSET_BLOCK, dtype=np.int64)
             for b in range(blocks)]
    return np.concatenate(parts)[:count]


def _zelinsky_blocks(parity, upper):
    """Inclusive block ranges of the given parity intersected with [1, upper]"""
    ranges = []
    if parity == 'even' and upper >= 1:
        ranges.append((1, 1))
    want = 1 if parity == 'odd' else 0
    for k in range(ZELINSKY_MAX_BLOCK + 1):
        lo, hi = 2 ** (2 ** k), 2 ** (2 ** (k + 1)) - 1
        if lo > upper:
            break
        if k % 2 == want:
            ranges.append((lo, min(hi, upper)))
    return ranges


def zelinsky_block(m):
    """Block index k with 2^(2^k) <= m < 2^(2^(k+1)); None for m < 2"""
    if m < 2:
        return None
    return (m.bit_length() - 1).bit_length() - 1


def in_zelinsky_gap(spec, m):
    """True when m lies in a block that the Zelinsky spec leaves out"""
    k = zelinsky_block(int(m))
    if k is None:
        return spec.parity == 'odd'
    return (k % 2 == 1) != (spec.parity == 'odd')


def _truncated(spec, N):
    """Whether elements above the 64-bit ceiling but <= N were dropped"""
    if N <= INT64_MAX:
        return False
    if isinstance(spec, ExplicitList):
        return any(INT64_MAX < e <= N for e in spec.elements)
    if isinstance(spec, ZelinskyLacunary):
        return any(hi > INT64_MAX for _, hi in _zelinsky_blocks(spec.parity, N))
    if isinstance(spec, ArithmeticProgression):
        return _count_closed(spec, N) > _count_closed(spec, INT64_MAX)
    return True


def _count_closed(spec, n):
    """Closed-form card{s in S : s <= n} for the structured families"""
    if isinstance(spec, ArithmeticProgression):
        return (n - spec.b) // spec.a if n >= spec.a + spec.b else 0
    if isinstance(spec, PowersOfTwo):
        return n.bit_length() - 1 if n >= 2 else 0
    if isinstance(spec, ZelinskyLacunary):
        return sum(hi - lo + 1 for lo, hi in _zelinsky_blocks(spec.parity, n))
    return None


def _check_budget(size, max_elements, spec):
    if size > max_elements:
        raise BudgetError(
            f"window of {render_spec(spec)} would hold {size} elements, "
            f"budget is {max_elements} (raise max_window_elements or lower the bound)", field='N')


def _poly_window(spec, bound, max_elements):
    tail = polynomial_tail_start(spec.coefficients)
    values = []
    n = 1
    while True:
        v = abs(spec.evaluate(n))
        if 1 <= v <= bound:
            values.append(v)
            if len(values) > max_elements:
                _check_budget(len(values), max_elements, spec)
        if n >= tail and v > bound:
            break
        n += 1
    logger.debug(f"{render_spec(spec)}: scanned n=1..{n} (monotone from {tail})")
    return values


def enumerate_window(spec, N, max_elements=None):
    """The elements of S that are <= N, ascending, deduplicated, zero excluded"""
    validate_spec(spec)
    if not _is_int(N) or N < 1:
        raise PreconditionError(f"window bound must be a positive integer, got {N!r}", field='N')
    N = int(N)
    max_elements = int(max_elements or DEFAULT_CONFIG['max_window_elements'])
    bound = min(N, INT64_MAX)
    truncated = _truncated(spec, N)

    expected = _count_closed(spec, bound)
    if expected is not None:
        _check_budget(expected, max_elements, spec)

    if isinstance(spec, ArithmeticProgression):
        elements = np.arange(1, expected + 1, dtype=np.int64) * spec.a + spec.b
    elif isinstance(spec, PowersOfTwo):
        elements = np.array([2 ** k for k in range(1, expected + 1)], dtype=np.int64)
    elif isinstance(spec, ZelinskyLacunary):
        parts = [np.arange(lo, hi + 1, dtype=np.int64) for lo, hi in _zelinsky_blocks(spec.parity, bound)]
        elements = np.concatenate(parts) if parts else np.array([], dtype=np.int64)
    elif isinstance(spec, PseudoRandomOffset):
        n_max = max(0, (bound - 1) // 3)
        _check_budget(n_max, max_elements, spec)
        n = np.arange(1, n_max + 1, dtype=np.int64)
        values = 3 * n + surrogate_offsets(spec.seed, n_max)
        elements = values[values <= bound]
    elif isinstance(spec, PolynomialRange):
        elements = np.unique(np.array(_poly_window(spec, bound, max_elements), dtype=np.int64))
    else:
        kept = [e for e in spec.elements if e <= bound]
        _check_budget(len(kept), max_elements, spec)
        elements = np.array(kept, dtype=np.int64)

    elements.flags.writeable = False
    return SequenceWindow(spec=spec, bound=N, elements=elements, truncated=truncated)


def counting_function(spec, n, max_elements=None):
    """card{s in S : s <= n}"""
    validate_spec(spec)
    if not _is_int(n) or n < 0:
        raise PreconditionError(f"counting bound must be >= 0, got {n!r}", field='n')
    n = min(int(n), INT64_MAX)
    if n == 0:
        return 0
    closed = _count_closed(spec, n)
    if closed is not None:
        return closed
    return len(enumerate_window(spec, n, max_elements))


def count_array(spec, ns, max_elements=None):
    """Vectorized counting_function over an ascending int64 array"""
    ns = np.asarray(ns, dtype=np.int64)
    if ns.size == 0:
        return np.array([], dtype=np.int64)
    if isinstance(spec, ArithmeticProgression):
        return np.where(ns >= spec.a + spec.b, (ns - spec.b) // spec.a, 0)
    if isinstance(spec, PowersOfTwo):
        powers = np.array([2 ** k for k in range(1, 63)], dtype=np.int64)
        return np.searchsorted(powers, ns, side='right')
    if isinstance(spec, ZelinskyLacunary):
        counts = np.zeros(ns.shape, dtype=np.int64)
        for lo, hi in _zelinsky_blocks(spec.parity, int(ns.max())):
            counts += np.clip(np.minimum(ns, hi) - lo + 1, 0, None)
        return counts
    window = enumerate_window(spec, max(1, int(ns.max())), max_elements)
    return np.searchsorted(window.elements, ns, side='right')


def check_polynomial_density(spec, alpha, K, n_range, max_elements=None):
    """Does card{s <= n} >= K n^(1/alpha) hold for every n in n_range?

    n_range is an inclusive (lo, hi) pair. The sweep runs in ascending
    segments and stops at the first violation, which is the smallest one.
    """
    validate_spec(spec)
    if alpha < 1:
        raise PreconditionError(f"alpha must be >= 1, got {alpha}", field='alpha')
    if K <= 0:
        raise PreconditionError(f"K must be > 0, got {K}", field='K')
    lo, hi = int(n_range[0]), int(n_range[1])
    if lo > hi:
        raise PreconditionError(f"empty range {lo}:{hi}", field='range')
    if lo < 1:
        raise PreconditionError(f"range must start at n >= 1, got {lo}", field='range')

    exponent = 1.0 / alpha
    start = lo
    while start <= hi:
        stop = min(hi, start + SEGMENT_SIZE - 1)
        ns = np.arange(start, stop + 1, dtype=np.int64)
        counts = count_array(spec, ns, max_elements)
        required = K * np.power(ns.astype(np.float64), exponent)
        failing = np.flatnonzero(counts < required)
        if failing.size:
            i = int(failing[0])
            n = int(ns[i])
            logger.info(f"Density fails for {render_spec(spec)} at n={n}: "
                        f"count {int(counts[i])} < {float(required[i]):.6g}")
            return DensityCheck(False, n, int(counts[i]), float(required[i]), (lo, hi), alpha, K)
        start = stop + 1

    return DensityCheck(True, None, None, None, (lo, hi), alpha, K)


def estimate_density(spec, N, max_elements=None):
    """Least-squares fit of log s_j against log j over the window at N"""
    window = enumerate_window(spec, N, max_elements)
    if len(window) < 10:
        raise PreconditionError(
            f"density estimate needs >= 10 elements, window at N={N} has {len(window)}", field='N')
    j = np.arange(1, len(window) + 1, dtype=np.float64)
    log_j = np.log(j)
    log_s = np.log(window.elements.astype(np.float64))
    slope, intercept = np.polyfit(log_j, log_s, 1)
    residual = float(np.max(np.abs(log_s - (slope * log_j + intercept))))
    return DensityEstimate(alpha_hat=float(slope), K_hat=float(math.exp(intercept)),
                           max_residual=residual, sample_range=(1, len(window)))
