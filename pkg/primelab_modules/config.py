"""
Configuration management for PrimeLab
Numeric constants, run defaults and settings persistence
"""

import json
import os
import pathlib
import logging

logger = logging.getLogger('PrimeLab.Config')

# ---------- Integer domain ----------
INT64_MAX = 2**63 - 1

# ---------- Sieve ----------
DEFAULT_SIEVE_LIMIT = 10**8
SEGMENT_SIZE = 2**20  # entries per sieve segment
SIEVE_LIMIT_ENV = "PRIMELAB_SIEVE_LIMIT"

# Deterministic Miller-Rabin witnesses, correct for every n < 2^64
MILLER_RABIN_BASES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)

# Trial division by primes below this bound before Pollard's rho takes over
TRIAL_DIVISION_BOUND = 1 << 10

# Pollard-Brent batch size between gcd evaluations
RHO_BATCH = 128

# ---------- Number theory constants ----------
MERTENS_CONSTANT = 0.2614972128476428
IWANIEC_PINTZ_EXPONENT = 23 / 42

# Checkpoints used when sampling cumulative diagnostics series
SERIES_POINTS_PER_DECADE = 9

# Relative tolerance for "equality" in floating-point inequality checks
FLOAT_REL_TOL = 1e-12
STIELTJES_TOLERANCE = 1e-9

# ---------- Reports ----------
REPORT_FORMATS = ('json', 'csv')
FLOAT_DIGITS = 17

COMMANDS = {
    'sieve': 'Build a prime sieve and report pi(limit)',
    'density': 'Check and estimate polynomial density of a sequence',
    'factors': 'Compute the prime factor set P(S) up to a prime bound',
    'diagnose': 'Partial sums, Euler products and the Stieltjes identity',
    'witnesses': 'Infinitely-often witnesses for a summable weight series',
    'construct': 'One prime per interval (n^alpha, (n+1)^alpha]',
    'chebyshev': 'Chebyshev-type constants for pi_S over a range',
    'gapcheck': 'Empirical short-interval prime gap check',
}

# Configuration file
CONFIG_FILE = pathlib.Path.home() / ".primelab_config.json"

# Default configuration
DEFAULT_CONFIG = {
    'sieve_limit': DEFAULT_SIEVE_LIMIT,
    'segment_size': SEGMENT_SIZE,
    'memory_budget_mb': 2048,
    'max_window_elements': 50_000_000,
    'smallest_factor_table': True,  # dropped automatically if over budget
    'workers': 1,
    'format': 'json',
    'alpha': 1.0,
    'K': 1.0,
    'element_bound': 10**6,
    'prime_bound': 10**4,
    'N': 10**4,
    'weights': 'log:2',
    'n_max': 100,
    'seed': 1,
}

# Keys that affect how a run executes but never what it computes
EXECUTION_ONLY_KEYS = ('workers', 'out', 'verbose', 'quiet', 'config', 'save_config')


# ---------- Configuration Management ----------

def _env_sieve_limit():
    """Sieve limit from the environment, or None"""
    raw = os.environ.get(SIEVE_LIMIT_ENV)
    if not raw:
        return None
    try:
        value = int(raw.replace('_', ''))
    except ValueError:
        logger.warning(f"Ignoring {SIEVE_LIMIT_ENV}={raw!r}: not an integer")
        return None
    logger.debug(f"Sieve limit {value} taken from {SIEVE_LIMIT_ENV}")
    return value


def load_config(path=None):
    """Load configuration from file with defaults

    The file is optional; when `path` is given it must exist. The environment
    override is applied to the default sieve limit, so a file or a flag still
    wins over it.
    """
    config = DEFAULT_CONFIG.copy()

    env_limit = _env_sieve_limit()
    if env_limit is not None:
        config['sieve_limit'] = env_limit

    config_path = pathlib.Path(path) if path else CONFIG_FILE
    if path or config_path.exists():
        user_config = json.loads(config_path.read_text())
        if not isinstance(user_config, dict):
            raise ValueError(f"config file {config_path} must hold a JSON object")
        for key, value in user_config.items():
            if key not in DEFAULT_CONFIG and key not in ('seq', 'range', 'command', 'exact', 'limit', 'survey'):
                logger.warning(f"Ignoring unknown config key: {key}")
                continue
            config[key] = value
        logger.info(f"Configuration loaded from {config_path}")
    else:
        logger.debug("Using default configuration")

    return config


def save_config(config, path=None):
    """Save configuration to file"""
    config_path = pathlib.Path(path) if path else CONFIG_FILE
    config_path.parent.mkdir(parents=True, exist_ok=True)
    persisted = {k: v for k, v in config.items() if k not in EXECUTION_ONLY_KEYS}
    config_path.write_text(json.dumps(persisted, indent=2, sort_keys=True))
    logger.info(f"Configuration saved to {config_path}")
    return config_path
