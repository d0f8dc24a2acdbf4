"""
PrimeLab Modules
Prime factor sets of polynomial-density integer sequences, computed at desk scale
"""

__version__ = "1.0.0"
__all__ = [
    'config',
    'errors',
    'system_monitor',
    'parallel',
    'sieve_core',
    'sequences',
    'factor_set',
    'diagnostics',
    'constructions',
    'report',
    'runner',
]
