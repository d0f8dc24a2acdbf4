#!/usr/bin/env python3
"""
PrimeLab v1.0 - Prime factors of polynomial-density sets
Sieves, factor sets P(S), divergence diagnostics and interval constructions

Commands:
- sieve: Build a prime sieve and report pi(limit)
- density: Check and estimate polynomial density of a sequence
- factors: Prime factor set P(S) up to a prime bound
- diagnose: Partial sums, Euler products and the Stieltjes identity
- witnesses: Infinitely-often witnesses for a weight series
- construct: One prime per interval (n^alpha, (n+1)^alpha]
- chebyshev: Chebyshev-type constants for pi_S
- gapcheck: Short-interval prime gap check
"""

import os
import sys
import logging
from datetime import datetime

# Configure logging
log_dir = os.path.join(os.path.expanduser("~"), ".primelab_logs")
os.makedirs(log_dir, exist_ok=True)

log_file = os.path.join(log_dir, f"primelab_{datetime.now().strftime('%Y%m%d')}.log")

logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(log_file),
        logging.StreamHandler(sys.stderr)  # stdout carries the report
    ]
)

logger = logging.getLogger('PrimeLab')

from primelab_modules.runner import main


if __name__ == "__main__":
    sys.exit(main())
