"""
Shared fixtures for the PrimeLab tests
Sieves and factor sets are built once per session
"""

import pytest

from primelab_modules import config
from primelab_modules.factor_set import FactorSet, Witness, factor_set_ap_exact
from primelab_modules.sieve_core import build_sieve


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """No user config file or environment override leaks into a test"""
    monkeypatch.setattr(config, 'CONFIG_FILE', tmp_path / 'absent_config.json')
    monkeypatch.delenv(config.SIEVE_LIMIT_ENV, raising=False)


@pytest.fixture(scope='session')
def sieve_1e6():
    return build_sieve(10**6)


@pytest.fixture(scope='session')
def sieve_1e5():
    return build_sieve(10**5)


@pytest.fixture(scope='session')
def all_primes_fs(sieve_1e6):
    """P(positive integers) up to 10^6, i.e. every prime"""
    return factor_set_ap_exact(1, 0, 10**6, sieve_1e6)


@pytest.fixture
def make_fs():
    """FactorSet over a literal prime list, each prime its own witness"""
    def build(primes, prime_bound=None):
        primes = tuple(sorted(primes))
        bound = prime_bound if prime_bound is not None else max(primes + (2,))
        return FactorSet(prime_bound=bound, primes=primes,
                         witnesses={p: Witness('element', p) for p in primes},
                         method='scan', complete=True)
    return build
