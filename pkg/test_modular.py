#!/usr/bin/env python3
"""
Test script for modular PrimeLab
Verifies all modules load and the basic plumbing works
"""

import importlib

import pytest

import primelab_modules


@pytest.mark.parametrize('name', primelab_modules.__all__)
def test_module_imports(name):
    """Test 1: every listed module imports"""
    module = importlib.import_module(f'primelab_modules.{name}')
    assert module.__doc__, f"{name} has no module docstring"


def test_configuration_defaults():
    """Test 2: configuration loads with defaults"""
    from primelab_modules import config

    cfg = config.load_config()
    assert cfg['sieve_limit'] == 10**8
    assert cfg['segment_size'] == 2**20
    assert cfg['format'] in config.REPORT_FORMATS
    assert set(config.COMMANDS) == {'sieve', 'density', 'factors', 'diagnose',
                                    'witnesses', 'construct', 'chebyshev', 'gapcheck'}


def test_configuration_file_and_environment(tmp_path, monkeypatch):
    """Test 3: file values win over the environment, unknown keys are dropped"""
    from primelab_modules import config

    monkeypatch.setenv(config.SIEVE_LIMIT_ENV, '12345')
    assert config.load_config()['sieve_limit'] == 12345

    path = tmp_path / 'cfg.json'
    path.write_text('{"sieve_limit": 999, "alpha": 2, "brightness": 50}')
    cfg = config.load_config(path)
    assert cfg['sieve_limit'] == 999
    assert cfg['alpha'] == 2
    assert 'brightness' not in cfg


def test_configuration_rejects_non_object(tmp_path):
    from primelab_modules import config

    path = tmp_path / 'cfg.json'
    path.write_text('[1, 2, 3]')
    with pytest.raises(ValueError):
        config.load_config(path)


def test_save_config_drops_execution_keys(tmp_path):
    from primelab_modules import config

    path = config.save_config({'alpha': 2.0, 'workers': 8, 'out': 'x.json'}, tmp_path / 'saved.json')
    assert path.read_text().strip() == '{\n  "alpha": 2.0\n}'


def test_system_monitoring():
    """Test 4: host facts come back from psutil"""
    from primelab_modules.system_monitor import available_memory_bytes, get_system_info

    info = get_system_info()
    assert info['cpu_count'] >= 1
    assert info['memory_total_mb'] > 0
    assert available_memory_bytes() > 0


def _square(chunk):
    return [x * x for x in chunk]


def test_ordered_map_keeps_chunk_order():
    """Test 5: worker pool merges in chunk order"""
    from primelab_modules.parallel import chunked, ordered_map

    chunks = chunked(list(range(10)), 3)
    assert chunks == [[0, 1, 2], [3, 4, 5], [6, 7, 8], [9]]
    assert ordered_map(_square, chunks, workers=1) == ordered_map(_square, chunks, workers=2)
    assert ordered_map(_square, chunks, workers=2)[-1] == [81]


def test_error_exit_codes():
    """Test 6: error families map onto exit codes"""
    from primelab_modules import errors

    assert errors.PreconditionError('x').exit_code == 1
    assert errors.BudgetError('x').exit_code == 1
    assert errors.PropertyViolation('x').exit_code == 2
    assert errors.ConstructionError('x', n=5).n == 5
    assert isinstance(errors.SpecSyntaxError('x', field='seq'), ValueError)


if __name__ == '__main__':
    raise SystemExit(pytest.main([__file__, '-v']))
