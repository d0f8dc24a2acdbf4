"""
Prime factor sets for PrimeLab
P(S) truncated at a prime bound, its witnesses, and the step function pi_S
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_degree, gf_from_int_poly, gf_gcd, gf_pow_mod, gf_sub

from .config import SEGMENT_SIZE
from .errors import PreconditionError, PropertyViolation
from .parallel import chunked, ordered_map
from .sequences import (
    ArithmeticProgression, ExplicitList, PolynomialRange,
    enumerate_window, render_spec, validate_spec,
)
from .sieve_core import factorize, miller_rabin, simple_sieve

logger = logging.getLogger('PrimeLab.FactorSet')

METHOD_SCAN = 'scan'
METHOD_EXACT_POLY = 'exact-polynomial'
METHOD_EXACT_AP = 'exact-ap'
METHODS = (METHOD_SCAN, METHOD_EXACT_POLY, METHOD_EXACT_AP)

CSV_HEADER = ('prime', 'witness', 'kind', 'method', 'prime_bound', 'scan_bound', 'complete', 'spec')

# Elements factored per worker task
SCAN_CHUNK = 2048
# Primes examined per worker task in the exact root search
ROOT_CHUNK = 512
# First block of residues scanned for a witness root; later blocks double
ROOT_SCAN_BLOCK = 1024
# Above this the vectorized Horner products would overflow int64
VECTOR_HORNER_LIMIT = 2**31


@dataclass(frozen=True)
class Witness:
    """Why a prime is in P(S): an element it divides, or a root residue"""
    kind: str   # 'element' or 'residue'
    value: int


@dataclass(frozen=True, eq=False)
class FactorSet:
    prime_bound: int
    primes: tuple
    witnesses: dict = field(repr=False)
    method: str = METHOD_SCAN
    complete: bool = False
    scan_bound: Optional[int] = None
    spec_text: Optional[str] = None

    def __len__(self):
        return len(self.primes)

    def __contains__(self, p):
        return p in self.witnesses

    @property
    def coverage(self):
        if self.complete:
            return f"exact P(S) ∩ [2, {self.prime_bound}]"
        return (f"lower approximation of P(S) ∩ [2, {self.prime_bound}] "
                f"(elements <= {self.scan_bound} scanned)")

    def same_primes(self, other):
        return self.primes == other.primes


# ---------- Scan ----------

def _factor_elements(elements, sieve=None):
    return [factorize(int(s), sieve).distinct_primes for s in elements]


def _factor_chunk(chunk):
    return _factor_elements(chunk)


def factor_set_by_scan(spec, element_bound, prime_bound, sieve=None, workers=1, max_elements=None):
    """Primes <= prime_bound dividing some element of S that is <= element_bound

    Every window element is fully factorized; the witness of a prime is the
    smallest element it divides.
    """
    validate_spec(spec)
    if element_bound < 2 or prime_bound < 2:
        raise PreconditionError(
            f"scan bounds must be >= 2 (element_bound={element_bound}, prime_bound={prime_bound})",
            field='element_bound' if element_bound < 2 else 'prime_bound')

    window = enumerate_window(spec, element_bound, max_elements)
    if len(window) == 0:
        raise PreconditionError(f"no element of {render_spec(spec)} is <= {element_bound}",
                                field='element_bound')

    elements = window.tolist()
    if workers and workers > 1:
        factored = []
        for part in ordered_map(_factor_chunk, chunked(elements, SCAN_CHUNK), workers):
            factored.extend(part)
    else:
        factored = _factor_elements(elements, sieve)

    witnesses = {}
    for s, primes in zip(elements, factored):
        for p in primes:
            if p <= prime_bound and p not in witnesses:
                witnesses[p] = Witness('element', s)

    complete = (isinstance(spec, ExplicitList) and not window.truncated
                and (not spec.elements or spec.elements[-1] <= element_bound))
    logger.info(f"Scan of {len(elements)} elements of {render_spec(spec)}: "
                f"{len(witnesses)} primes <= {prime_bound}")
    return FactorSet(prime_bound=int(prime_bound), primes=tuple(sorted(witnesses)),
                     witnesses=witnesses, method=METHOD_SCAN, complete=complete,
                     scan_bound=int(element_bound), spec_text=render_spec(spec))


# ---------- Roots modulo p ----------

def has_root_mod_p(coefficients, p):
    """Whether Q has a root modulo the prime p

    The roots of Q mod p are those of gcd(x^p - x, Q mod p), so a root
    exists iff that gcd has positive degree. Quadratics at odd p are
    settled by Euler's criterion on the discriminant instead.
    """
    if p < 2:
        raise PreconditionError(f"modulus must be prime, got {p}", field='p')
    q = gf_from_int_poly([int(c) for c in reversed(coefficients)], p)
    if not q:
        return True
    degree = gf_degree(q)
    if degree <= 1:
        return degree == 1
    if degree == 2 and p > 2:
        a, b, c = q
        discriminant = (b * b - 4 * a * c) % p
        return discriminant == 0 or pow(discriminant, (p - 1) // 2, p) == 1
    x = [ZZ.one, ZZ.zero]
    x_p = gf_pow_mod(x, p, q, p, ZZ)
    return gf_degree(gf_gcd(q, gf_sub(x_p, x, p, ZZ), p, ZZ)) > 0


def _residue_blocks(p):
    """Ascending blocks of [0, p), doubling from ROOT_SCAN_BLOCK up to SEGMENT_SIZE"""
    lo, size = 0, ROOT_SCAN_BLOCK
    while lo < p:
        hi = min(p, lo + size)
        yield lo, hi
        lo, size = hi, min(SEGMENT_SIZE, size * 2)


def _roots_in_block(reduced, p, lo, hi):
    """Ascending roots r in [lo, hi) of the reduced coefficients"""
    if p >= VECTOR_HORNER_LIMIT:
        roots = []
        for r in range(lo, hi):
            acc = 0
            for c in reversed(reduced):
                acc = (acc * r + c) % p
            if acc == 0:
                roots.append(r)
        return roots
    r = np.arange(lo, hi, dtype=np.int64)
    acc = np.full_like(r, reduced[-1])
    for c in reversed(reduced[:-1]):
        acc = (acc * r + c) % p
    return [int(v) for v in r[acc == 0]]


def roots_mod_p(coefficients, p):
    """Ascending residues r in [0, p) with Q(r) = 0 mod p (Horner, mod p)"""
    if p < 2:
        raise PreconditionError(f"modulus must be prime, got {p}", field='p')
    reduced = [int(c) % p for c in coefficients]
    if not any(reduced):
        return np.arange(p, dtype=np.int64)
    found = []
    for lo in range(0, p, SEGMENT_SIZE):
        found.extend(_roots_in_block(reduced, p, lo, min(p, lo + SEGMENT_SIZE)))
    return np.array(found, dtype=np.int64)


def count_roots_mod_p(coefficients, p):
    """Number of roots of Q modulo p; p itself when p divides every coefficient"""
    return int(len(roots_mod_p(coefficients, p)))


def _evaluate(coefficients, n):
    value = 0
    for c in reversed(coefficients):
        value = value * n + c
    return value


def _first_nonzero_member(coefficients, r, p):
    """Smallest n >= 1 with n = r mod p and Q(n) != 0"""
    n = r if r >= 1 else p
    for _ in range(len(coefficients) + 1):
        if _evaluate(coefficients, n) != 0:
            return n
        n += p
    return None


def _root_witness(coefficients, p):
    """Smallest residue witnessing p in P(S), or None when p never divides |Q(n)|

    Primes without a root are settled by the gcd test; otherwise the scan
    stops at the first usable root.
    """
    if not has_root_mod_p(coefficients, p):
        return None
    reduced = [int(c) % p for c in coefficients]
    for lo, hi in _residue_blocks(p):
        for r in _roots_in_block(reduced, p, lo, hi):
            if _first_nonzero_member(coefficients, r, p) is not None:
                return r
    return None


def _roots_chunk(task):
    coefficients, primes = task
    return [(p, _root_witness(coefficients, p)) for p in primes]


def _primes_for(prime_bound, sieve):
    if sieve is not None and prime_bound <= sieve.limit:
        return sieve.primes_up_to(prime_bound)
    return [int(p) for p in simple_sieve(prime_bound)]


def factor_set_polynomial_exact(coefficients, prime_bound, sieve=None, workers=1):
    """Exactly P(S) ∩ [2, prime_bound] for S = {|Q(n)| : n >= 1}"""
    coefficients = tuple(int(c) for c in coefficients)
    while len(coefficients) > 1 and coefficients[-1] == 0:
        coefficients = coefficients[:-1]
    if len(coefficients) < 2:
        raise PreconditionError("exact factor set needs a polynomial of degree >= 1", field='seq')
    if prime_bound < 2:
        raise PreconditionError(f"prime bound must be >= 2, got {prime_bound}", field='prime_bound')

    primes = _primes_for(prime_bound, sieve)
    tasks = [(coefficients, chunk) for chunk in chunked(primes, ROOT_CHUNK)]
    witnesses = {}
    for part in ordered_map(_roots_chunk, tasks, workers):
        for p, r in part:
            if r is not None:
                witnesses[p] = Witness('residue', r)

    spec_text = render_spec(PolynomialRange(coefficients))
    logger.info(f"Exact factor set of {spec_text}: {len(witnesses)} of {len(primes)} primes <= {prime_bound}")
    return FactorSet(prime_bound=int(prime_bound), primes=tuple(sorted(witnesses)),
                     witnesses=witnesses, method=METHOD_EXACT_POLY, complete=True,
                     spec_text=spec_text)


def factor_set_ap_exact(a, b, prime_bound, sieve=None):
    """Exactly P(S) ∩ [2, prime_bound] for S = {a n + b : n >= 1}

    p is in P(S) iff a n = -b (mod p) is solvable; the witness is the
    smallest such residue n.
    """
    spec = validate_spec(ArithmeticProgression(a, b))
    if prime_bound < 2:
        raise PreconditionError(f"prime bound must be >= 2, got {prime_bound}", field='prime_bound')
    witnesses = {}
    for p in _primes_for(prime_bound, sieve):
        if a % p:
            witnesses[p] = Witness('residue', (-b * pow(a, -1, p)) % p)
        elif b % p == 0:
            witnesses[p] = Witness('residue', 0)
    return FactorSet(prime_bound=int(prime_bound), primes=tuple(sorted(witnesses)),
                     witnesses=witnesses, method=METHOD_EXACT_AP, complete=True,
                     spec_text=render_spec(spec))


def factor_set_exact(spec, prime_bound, sieve=None, workers=1, max_elements=None):
    """Complete P(S) ∩ [2, prime_bound] for the families that allow it"""
    validate_spec(spec)
    if isinstance(spec, PolynomialRange):
        return factor_set_polynomial_exact(spec.coefficients, prime_bound, sieve, workers)
    if isinstance(spec, ArithmeticProgression):
        return factor_set_ap_exact(spec.a, spec.b, prime_bound, sieve)
    if isinstance(spec, ExplicitList) and spec.elements:
        return factor_set_by_scan(spec, max(2, spec.elements[-1]), prime_bound, sieve, workers, max_elements)
    raise PreconditionError(f"no exact factor-set method for {render_spec(spec)}; use a scan",
                            field='exact')


# ---------- Witnesses ----------

def _polynomial_of(spec):
    if isinstance(spec, PolynomialRange):
        return spec.coefficients
    if isinstance(spec, ArithmeticProgression):
        return (spec.b, spec.a)
    return None


def verify_witnesses(fs, spec=None):
    """Primes whose witness does not re-verify by direct division"""
    coefficients = _polynomial_of(spec) if spec is not None else None
    failures = []
    for p in fs.primes:
        w = fs.witnesses.get(p)
        if w is None or p > fs.prime_bound or not miller_rabin(p):
            failures.append(p)
        elif w.kind == 'element':
            if w.value < 1 or w.value % p:
                failures.append(p)
        elif w.kind == 'residue':
            if coefficients is None or _evaluate(coefficients, w.value) % p:
                failures.append(p)
        else:
            failures.append(p)
    return failures


def witness_element(fs, p, spec):
    """(n, |Q(n)|) with p | |Q(n)| != 0, n taken from the witness residue class"""
    coefficients = _polynomial_of(spec)
    w = fs.witnesses.get(p)
    if w is None:
        raise PreconditionError(f"{p} is not in the factor set", field='p')
    if w.kind == 'element':
        return None, w.value
    n = _first_nonzero_member(coefficients, w.value, p)
    value = abs(_evaluate(coefficients, n))
    if value % p:
        raise PropertyViolation(f"witness residue {w.value} of {p} does not divide Q({n})")
    return n, value


# ---------- pi_S ----------

@dataclass(frozen=True, eq=False)
class PiSTable:
    """pi_S(n) for n <= prime_bound, by binary search over the prime list"""
    factor_set: FactorSet
    primes: np.ndarray = field(repr=False)

    @classmethod
    def from_factor_set(cls, fs):
        primes = np.array(fs.primes, dtype=np.int64)
        primes.flags.writeable = False
        return cls(factor_set=fs, primes=primes)

    @property
    def prime_bound(self):
        return self.factor_set.prime_bound

    def _require(self, n):
        if n < 0:
            raise PreconditionError(f"pi_S needs n >= 0, got {n}", field='N')
        if n > self.prime_bound:
            raise PreconditionError(
                f"n={n} is beyond the factor set's prime bound {self.prime_bound}", field='N')

    def evaluate(self, n):
        self._require(n)
        return int(np.searchsorted(self.primes, n, side='right'))

    def evaluate_many(self, ns):
        ns = np.asarray(ns, dtype=np.int64)
        if ns.size:
            self._require(int(ns.min()))
            self._require(int(ns.max()))
        return np.searchsorted(self.primes, ns, side='right')

    def primes_up_to(self, n):
        self._require(n)
        return self.primes[:self.evaluate(n)]


def pi_s_eval(table, n):
    return table.evaluate(n)


# ---------- Serialization ----------

def to_json_obj(fs):
    return {
        'prime_bound': fs.prime_bound,
        'method': fs.method,
        'complete': fs.complete,
        'coverage': fs.coverage,
        'scan_bound': fs.scan_bound,
        'spec': fs.spec_text,
        'count': len(fs.primes),
        'primes': list(fs.primes),
        'witnesses': [{'prime': p, 'kind': fs.witnesses[p].kind, 'witness': fs.witnesses[p].value}
                      for p in fs.primes],
    }


def from_json_obj(obj):
    witnesses = {int(w['prime']): Witness(w['kind'], int(w['witness'])) for w in obj['witnesses']}
    if sorted(witnesses) != [int(p) for p in obj['primes']]:
        raise PreconditionError("factor set JSON: primes and witnesses disagree", field='primes')
    if obj['method'] not in METHODS:
        raise PreconditionError(f"factor set JSON: unknown method {obj['method']!r}", field='method')
    return FactorSet(prime_bound=int(obj['prime_bound']), primes=tuple(sorted(witnesses)),
                     witnesses=witnesses, method=obj['method'], complete=bool(obj['complete']),
                     scan_bound=obj.get('scan_bound'), spec_text=obj.get('spec'))


def to_csv_rows(fs):
    """Header plus one row per prime; factor-set metadata repeats on each row"""
    rows = [CSV_HEADER]
    scan_bound = '' if fs.scan_bound is None else fs.scan_bound
    spec_text = fs.spec_text or ''
    for p in fs.primes:
        w = fs.witnesses[p]
        rows.append((p, w.value, w.kind, fs.method, fs.prime_bound, scan_bound, int(fs.complete),
                     spec_text))
    return rows


def from_csv_rows(rows, prime_bound=None, method=METHOD_SCAN, spec_text=None):
    """Inverse of to_csv_rows

    An empty set has no row to carry its metadata, so `prime_bound` is
    required for it and `method` and `spec_text` are taken from the caller.
    """
    rows = [tuple(str(v) for v in row) for row in rows]
    if not rows or rows[0] != CSV_HEADER:
        raise PreconditionError("factor set CSV: missing or unexpected header", field='csv')
    body = rows[1:]
    if not body:
        if prime_bound is None:
            raise PreconditionError("factor set CSV without rows needs an explicit prime bound",
                                    field='prime_bound')
        if method not in METHODS:
            raise PreconditionError(f"factor set CSV: unknown method {method!r}", field='method')
        return FactorSet(prime_bound=int(prime_bound), primes=(), witnesses={}, method=method,
                         complete=False, spec_text=spec_text)
    witnesses = {int(r[0]): Witness(r[2], int(r[1])) for r in body}
    first = body[0]
    if first[3] not in METHODS:
        raise PreconditionError(f"factor set CSV: unknown method {first[3]!r}", field='method')
    return FactorSet(prime_bound=int(first[4]), primes=tuple(sorted(witnesses)), witnesses=witnesses,
                     method=first[3], complete=first[6] == '1',
                     scan_bound=int(first[5]) if first[5] else None, spec_text=first[7] or None)
