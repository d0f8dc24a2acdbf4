"""
Command runner for PrimeLab
RunConfig, argument parsing and dispatch of the eight report commands
"""

import argparse
import logging
from dataclasses import dataclass, fields
from typing import Optional

from .config import (
    COMMANDS, DEFAULT_CONFIG, EXECUTION_ONLY_KEYS, MERTENS_CONSTANT, REPORT_FORMATS,
    STIELTJES_TOLERANCE, load_config, save_config,
)
from .constructions import build_example2_set, gap_check_iwaniec_pintz, survey_intervals
from .diagnostics import (
    LOG_BASE, WITNESS_SAMPLE, build_report, chebyshev_fit, checkpoints, exponent_fit, io_witnesses,
    is_witness, parse_weights,
)
from .errors import BudgetError, PreconditionError, PropertyViolation, SpecSyntaxError
from .factor_set import (
    PiSTable, factor_set_by_scan, factor_set_exact, to_csv_rows, to_json_obj, verify_witnesses,
)
from .report import plain, render, write_report
from .sequences import (
    ArithmeticProgression, ExplicitList, PolynomialRange, ZelinskyLacunary,
    check_polynomial_density, estimate_density, in_zelinsky_gap, parse_spec, render_spec,
    zelinsky_block,
)
from .sieve_core import build_sieve
from .system_monitor import log_system_info

logger = logging.getLogger('PrimeLab.Runner')

EXIT_OK = 0
EXIT_PRECONDITION = 1
EXIT_PROPERTY = 2
EXIT_IO = 3

# Every tenth accepted witness, and the rejected n among every tenth n of the range, are re-evaluated
WITNESS_AUDIT_STRIDE = 10


# ---------- Run configuration ----------

@dataclass
class RunConfig:
    command: str
    seq: Optional[str] = None
    alpha: float = DEFAULT_CONFIG['alpha']
    K: float = DEFAULT_CONFIG['K']
    element_bound: int = DEFAULT_CONFIG['element_bound']
    prime_bound: int = DEFAULT_CONFIG['prime_bound']
    N: int = DEFAULT_CONFIG['N']
    range: Optional[str] = None
    weights: str = DEFAULT_CONFIG['weights']
    exact: bool = False
    n_max: int = DEFAULT_CONFIG['n_max']
    limit: Optional[int] = None
    survey: bool = False
    seed: int = DEFAULT_CONFIG['seed']
    format: str = DEFAULT_CONFIG['format']
    out: Optional[str] = None
    sieve_limit: int = DEFAULT_CONFIG['sieve_limit']
    segment_size: int = DEFAULT_CONFIG['segment_size']
    memory_budget_mb: int = DEFAULT_CONFIG['memory_budget_mb']
    max_window_elements: int = DEFAULT_CONFIG['max_window_elements']
    smallest_factor_table: bool = DEFAULT_CONFIG['smallest_factor_table']
    workers: int = DEFAULT_CONFIG['workers']

    @classmethod
    def from_mapping(cls, mapping):
        known = {f.name for f in fields(cls)}
        config = cls(**{k: v for k, v in mapping.items() if k in known})
        config.validate()
        return config

    def validate(self):
        if self.command not in COMMANDS:
            raise PreconditionError(f"unknown command {self.command!r}", field='command')
        if self.format not in REPORT_FORMATS:
            raise PreconditionError(f"format must be one of {', '.join(REPORT_FORMATS)}, got {self.format!r}",
                                    field='format')
        try:
            self.alpha = float(self.alpha)
            self.K = float(self.K)
        except (TypeError, ValueError):
            raise PreconditionError("alpha and K must be numbers", field='alpha')
        if not self.alpha >= 1:
            raise PreconditionError(f"alpha must be >= 1, got {self.alpha}", field='alpha')
        if not self.K > 0:
            raise PreconditionError(f"K must be > 0, got {self.K}", field='K')
        for name in ('element_bound', 'prime_bound', 'N', 'n_max', 'sieve_limit', 'segment_size',
                     'memory_budget_mb', 'max_window_elements', 'workers', 'limit'):
            value = getattr(self, name)
            if value is None and name == 'limit':
                continue
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise PreconditionError(f"{name} must be a positive integer, got {value!r}", field=name)
        return self

    def resolved(self):
        """Everything that determines the result; execution-only fields left out"""
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name not in EXECUTION_ONLY_KEYS}


@dataclass
class CommandResult:
    payload: dict
    csv_rows: Optional[list] = None
    ok: bool = True


# ---------- Helpers ----------

def parse_int(text):
    """Integer from '1000000', '1_000_000', '1e6' or '10^6'"""
    text = str(text).strip().replace('_', '')
    try:
        if '^' in text:
            base, _, exponent = text.partition('^')
            return int(base) ** int(exponent)
        if 'e' in text.lower():
            value = float(text)
            if value.is_integer():
                return int(value)
        return int(text)
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"not an integer: {text!r}")


def parse_range(text, default):
    """'lo:hi', inclusive"""
    if text is None:
        return default
    lo, sep, hi = str(text).partition(':')
    if not sep:
        raise SpecSyntaxError(f"range must look like lo:hi, got {text!r}", field='range')
    try:
        return parse_int(lo), parse_int(hi)
    except argparse.ArgumentTypeError as e:
        raise SpecSyntaxError(f"range {text!r}: {e}", field='range')


def _spec(config):
    if not config.seq:
        raise PreconditionError(f"{config.command} needs --seq", field='seq')
    text = config.seq.strip()
    if text.lower() == 'surrogate':
        text = f"surrogate:{config.seed}"
    return parse_spec(text)


def _sieve(config, need, strict=True):
    """Sieve sized to what the command needs, capped by --sieve-limit"""
    if need > config.sieve_limit:
        if strict:
            raise BudgetError(f"{config.command} needs a sieve up to {need}, "
                              f"sieve limit is {config.sieve_limit} (raise --sieve-limit)", field='sieve_limit')
        need = config.sieve_limit
    return build_sieve(max(2, need), segment_size=config.segment_size,
                       with_spf=None if config.smallest_factor_table else False,
                       workers=config.workers, memory_budget_mb=config.memory_budget_mb)


def _has_exact_method(spec):
    return isinstance(spec, (PolynomialRange, ArithmeticProgression, ExplicitList))


def _factor_set(config, spec, prime_bound, exact=None):
    """Exact P(S) when the family allows it, else a scan up to element_bound"""
    if exact is None:
        exact = _has_exact_method(spec)
    if exact:
        sieve = _sieve(config, prime_bound, strict=False)
        return factor_set_exact(spec, prime_bound, sieve, config.workers, config.max_window_elements)
    sieve = _sieve(config, max(prime_bound, config.element_bound), strict=False)
    return factor_set_by_scan(spec, config.element_bound, prime_bound, sieve,
                              config.workers, config.max_window_elements)


def _factor_set_summary(fs):
    return {'complete': fs.complete, 'coverage': fs.coverage, 'method': fs.method,
            'prime_bound': fs.prime_bound, 'scan_bound': fs.scan_bound, 'count': len(fs)}


def _envelope(config, result):
    return {'command': config.command, 'config': config.resolved(), 'log_base': LOG_BASE,
            'result': result}


# ---------- Commands ----------

def cmd_sieve(config):
    limit = config.limit or config.sieve_limit
    sieve = _sieve(config, limit)
    points = checkpoints(limit)
    result = {
        'limit': limit,
        'prime_count': sieve.prime_count(limit),
        'largest_prime': sieve.prev_prime(limit),
        'smallest_factor_table': sieve.has_spf,
    }
    rows = [('n', 'pi')] + [(n, sieve.prime_count(n)) for n in points]
    return CommandResult(_envelope(config, result), rows)


def cmd_density(config):
    spec = _spec(config)
    n_range = parse_range(config.range, (1, config.N))
    check = check_polynomial_density(spec, config.alpha, config.K, n_range, config.max_window_elements)
    result = {'seq': render_spec(spec), 'check': plain(check)}
    if check.counterexample is not None and isinstance(spec, ZelinskyLacunary):
        result['counterexample_block'] = zelinsky_block(check.counterexample)
        result['counterexample_in_gap'] = in_zelinsky_gap(spec, check.counterexample)
    try:
        result['estimate'] = plain(estimate_density(spec, config.N, config.max_window_elements))
    except PreconditionError as e:
        logger.info(f"Density estimate skipped: {e}")
        result['estimate'] = None
    return CommandResult(_envelope(config, result))


def cmd_factors(config):
    spec = _spec(config)
    fs = _factor_set(config, spec, config.prime_bound, exact=config.exact)
    failures = verify_witnesses(fs, spec)
    if failures:
        raise PropertyViolation(f"witnesses fail to verify for primes {failures[:10]}")
    result = to_json_obj(fs)
    result['verified'] = True
    return CommandResult(_envelope(config, result), to_csv_rows(fs))


def cmd_diagnose(config):
    spec = _spec(config)
    fs = _factor_set(config, spec, config.N)
    report = build_report(fs, config.alpha, config.N, parse_weights(config.weights))
    result = {
        'seq': render_spec(spec),
        'alpha': report.alpha,
        'N': report.N,
        'factor_set': _factor_set_summary(fs),
        'series': {
            'checkpoints': list(report.checkpoints),
            'partial_sum': list(report.partial_sums),
            'log_partial_product': list(report.log_partial_products),
            'weighted_pi_sum': list(report.weighted_sums),
        },
        'partial_sum': report.partial_sums[-1],
        'log_partial_product': report.log_partial_products[-1],
        'weighted_pi_sum': report.weighted_sums[-1],
        'stieltjes': {**plain(report.stieltjes), 'coefficient': '1/alpha',
                      'alternate_coefficient': '1+1/alpha', 'tolerance': STIELTJES_TOLERANCE},
        'comparability': plain(report.comparability),
        'bridge': plain(report.bridge),
        'witnesses': {'weights': report.weights, 'count': len(report.witnesses),
                      'largest': report.witnesses[-1] if report.witnesses else None,
                      'sample': report.witness_sample()},
        'chebyshev': plain(report.chebyshev),
        'exponents': plain(report.exponents),
        'mertens_gap': report.mertens_gap,
        'mertens_constant': MERTENS_CONSTANT if report.mertens_gap is not None else None,
        'passed': report.passed,
    }
    if not report.passed:
        logger.error("Diagnostics: a checked property failed (see comparability/bridge/stieltjes)")
    rows = [('metric', 'n', 'value')] + report.series_rows()
    return CommandResult(_envelope(config, result), rows, ok=report.passed)


def cmd_witnesses(config):
    spec = _spec(config)
    weights = parse_weights(config.weights)
    fs = _factor_set(config, spec, config.N)
    table = PiSTable.from_factor_set(fs)
    found = io_witnesses(table, config.alpha, weights, config.N)
    accepted = set(found)
    audited = found[::WITNESS_AUDIT_STRIDE]
    bad = [n for n in audited if not is_witness(table, config.alpha, weights, n)]
    if bad:
        raise PropertyViolation(f"witnesses {bad[:10]} fail direct re-evaluation")
    rejected = [n for n in range(weights.start, config.N + 1, WITNESS_AUDIT_STRIDE) if n not in accepted]
    missed = [n for n in rejected if is_witness(table, config.alpha, weights, n)]
    if missed:
        raise PropertyViolation(f"n = {missed[:10]} satisfy the witness inequality but were rejected")
    step = max(1, -(-len(found) // WITNESS_SAMPLE))
    sample = found[::step]
    result = {
        'seq': render_spec(spec),
        'weights': config.weights,
        'start': weights.start,
        'factor_set': _factor_set_summary(fs),
        'count': len(found),
        'largest': found[-1] if found else None,
        'audited': len(audited),
        'audited_rejected': len(rejected),
        'sample': sample,
    }
    rows = [('n', 'pi_s')] + [(n, table.evaluate(n)) for n in sample]
    return CommandResult(_envelope(config, result), rows)


def _integer_alpha(alpha):
    if not float(alpha).is_integer():
        raise PreconditionError(f"construct needs an integer alpha, got {alpha}", field='alpha')
    return int(alpha)


def cmd_construct(config):
    alpha = _integer_alpha(config.alpha)
    if config.survey:
        survey = survey_intervals(alpha, config.n_max, workers=config.workers)
        empty = [n for n, p in survey if p is None]
        result = {'alpha': alpha, 'n_max': config.n_max, 'empty_intervals': empty,
                  'rows': [[n, p] for n, p in survey]}
        rows = [('n', 'p_n')] + [(n, p) for n, p in survey]
        return CommandResult(_envelope(config, result), rows)

    summary = build_example2_set(alpha, config.n_max, workers=config.workers)
    result = {
        'alpha': alpha,
        'n_max': config.n_max,
        'all_nonempty': True,
        'final_ratio': summary.final_ratio,
        'rows': [list(row) for row in summary.rows],
    }
    rows = [('n', 'p_n', 'ratio')] + list(summary.rows)
    return CommandResult(_envelope(config, result), rows)


def cmd_chebyshev(config):
    spec = _spec(config)
    lo, hi = parse_range(config.range, (2, config.N))
    fs = _factor_set(config, spec, hi)
    table = PiSTable.from_factor_set(fs)
    fit = chebyshev_fit(table, config.alpha, (lo, hi))
    try:
        exponents = plain(exponent_fit(table, (lo, hi)))
    except PreconditionError as e:
        logger.info(f"Exponent fit skipped: {e}")
        exponents = None
    result = {
        'seq': render_spec(spec),
        'factor_set': _factor_set_summary(fs),
        'fit': plain(fit),
        'exponents': exponents,
        'label': 'empirical',
    }
    return CommandResult(_envelope(config, result))


def cmd_gapcheck(config):
    sieve = _sieve(config, config.N)
    check = gap_check_iwaniec_pintz(config.N, sieve)
    return CommandResult(_envelope(config, {'check': plain(check), 'label': 'empirical'}))


COMMAND_HANDLERS = {
    'sieve': cmd_sieve,
    'density': cmd_density,
    'factors': cmd_factors,
    'diagnose': cmd_diagnose,
    'witnesses': cmd_witnesses,
    'construct': cmd_construct,
    'chebyshev': cmd_chebyshev,
    'gapcheck': cmd_gapcheck,
}


def run(config):
    """Run one command, write its report and return the exit code"""
    handler = COMMAND_HANDLERS[config.command]
    try:
        outcome = handler(config)
        csv_rows = outcome.csv_rows if config.format == 'csv' else None
        write_report(render(outcome.payload, config.format, csv_rows), config.out)
    except PreconditionError as e:
        logger.error(f"{e.field or config.command}: {e}")
        return EXIT_PRECONDITION
    except PropertyViolation as e:
        logger.error(f"Property check failed: {e}")
        return EXIT_PROPERTY
    except OSError as e:
        logger.error(f"I/O error: {e}")
        return EXIT_IO

    if not outcome.ok:
        return EXIT_PROPERTY
    return EXIT_OK


# ---------- Argument parsing ----------

class _Parser(argparse.ArgumentParser):
    """Parse errors become PreconditionError so they map to exit code 1"""

    def error(self, message):
        raise PreconditionError(message, field='argv')


OPTIONS = {
    'seq': (('--seq',), dict(help="sequence, e.g. poly:1,0,1 ap:4,1 pow2 zelinsky[:even] surrogate:SEED list:@FILE")),
    'alpha': (('--alpha',), dict(type=float, help="density exponent (>= 1)")),
    'K': (('--K',), dict(type=float, help="density constant (> 0)")),
    'N': (('--N',), dict(type=parse_int, help="upper bound")),
    'range': (('--range',), dict(help="inclusive range lo:hi")),
    'prime_bound': (('--prime-bound',), dict(type=parse_int, help="largest prime considered")),
    'element_bound': (('--element-bound',), dict(type=parse_int, help="largest element scanned")),
    'exact': (('--exact',), dict(action='store_true', help="use the exact method for polynomial/AP sets")),
    'weights': (('--weights',), dict(help="weight series log:r or loglog:r (r > 1)")),
    'n_max': (('--n-max',), dict(type=parse_int, help="last interval index")),
    'survey': (('--survey',), dict(action='store_true', help="report every interval instead of building the set")),
    'limit': (('--limit',), dict(type=parse_int, help="sieve up to this bound")),
    'seed': (('--seed',), dict(type=parse_int, help="seed for a bare 'surrogate' sequence")),
}

COMMAND_OPTIONS = {
    'sieve': ('limit',),
    'density': ('seq', 'alpha', 'K', 'range', 'N', 'seed'),
    'factors': ('seq', 'prime_bound', 'element_bound', 'exact', 'seed'),
    'diagnose': ('seq', 'alpha', 'N', 'weights', 'element_bound', 'seed'),
    'witnesses': ('seq', 'alpha', 'N', 'weights', 'element_bound', 'seed'),
    'construct': ('alpha', 'n_max', 'survey'),
    'chebyshev': ('seq', 'alpha', 'range', 'N', 'element_bound', 'seed'),
    'gapcheck': ('N',),
}


def _common_options():
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument('--config', help="JSON config file (flags win over it)")
    common.add_argument('--save-config', help="write the resolved config to this path")
    common.add_argument('--workers', type=parse_int, help="worker processes")
    common.add_argument('--sieve-limit', type=parse_int, help="largest sieve the run may build")
    common.add_argument('--segment-size', type=parse_int, help="sieve segment length")
    common.add_argument('--memory-budget-mb', type=parse_int, help="memory budget for sieve tables")
    common.add_argument('--max-window-elements', type=parse_int, help="largest materialized window")
    common.add_argument('--no-spf', dest='smallest_factor_table', action='store_false',
                        help="skip the smallest-prime-factor table")
    common.add_argument('--format', choices=REPORT_FORMATS, help="report format")
    common.add_argument('--out', help="report path (stdout if omitted)")
    common.add_argument('--verbose', action='store_true', help="debug logging")
    common.add_argument('--quiet', action='store_true', help="warnings and errors only")
    return common


def build_parser():
    common = _common_options()
    parser = _Parser(prog='primelab', description="Prime factors of polynomial-density sets",
                     parents=[common], argument_default=argparse.SUPPRESS)
    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    for name, description in COMMANDS.items():
        sub = subparsers.add_parser(name, help=description, description=description,
                                    parents=[common], argument_default=argparse.SUPPRESS)
        for key in COMMAND_OPTIONS[name]:
            flags, kwargs = OPTIONS[key]
            sub.add_argument(*flags, dest=key, **kwargs)
    return parser


def resolve_config(argv=None):
    """Defaults, then config file, then flags; returns (RunConfig, parsed flags)"""
    args = vars(build_parser().parse_args(argv))
    if not args.get('command'):
        raise PreconditionError(f"a command is required: {', '.join(COMMANDS)}", field='command')
    mapping = load_config(args.get('config'))
    mapping.update({k: v for k, v in args.items() if v is not None})
    config = RunConfig.from_mapping(mapping)
    if args.get('save_config'):
        save_config(config.resolved(), args['save_config'])
    return config, args


def _apply_verbosity(args):
    root = logging.getLogger()
    if args.get('verbose'):
        root.setLevel(logging.DEBUG)
    elif args.get('quiet'):
        root.setLevel(logging.WARNING)


def main(argv=None):
    """Parse flags, run the command and return its exit code"""
    try:
        config, args = resolve_config(argv)
    except PreconditionError as e:
        logger.error(f"{e.field or 'argv'}: {e}")
        return EXIT_PRECONDITION
    except ValueError as e:
        logger.error(f"config: {e}")
        return EXIT_PRECONDITION
    except OSError as e:
        logger.error(f"config: {e}")
        return EXIT_IO

    _apply_verbosity(args)
    log_system_info()
    logger.info(f"Running {config.command} with workers={config.workers}")
    return run(config)
