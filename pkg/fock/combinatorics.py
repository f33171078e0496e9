"""
Log-Space Combinatorics Module

Factorial tables and signed log-magnitude arithmetic. Amplitudes at
N_tot ~ 10^3 involve binomials far outside float range, so every combinatorial
quantity is carried as (sign, log|value|) until the last step.
"""

import logging
from functools import lru_cache
from typing import Tuple

import numpy as np
from scipy.special import gammaln

import config

logger = logging.getLogger(__name__)


class LogCombinatorics:
    """Read-only table of ln(k!) for k = 0..k_max."""

    def __init__(self, k_max: int) -> None:
        """Build the table.

        Args:
            k_max: Largest k whose factorial is tabulated.

        Raises:
            ValueError: If k_max is negative.
        """
        if k_max < 0:
            raise ValueError(f"k_max must be non-negative, got {k_max}")
        self.k_max = int(k_max)
        self.table = gammaln(np.arange(self.k_max + 1, dtype=float) + 1.0)
        self.table.setflags(write=False)
        logger.debug(f"LogCombinatorics table built up to k_max={self.k_max}")

    def log_factorial(self, k) -> np.ndarray:
        """Return ln(k!) for integer k (scalar or array)."""
        return self.table[np.asarray(k, dtype=int)]

    def log_binomial(self, n, k) -> np.ndarray:
        """Return ln C(n, k); -inf where k < 0 or k > n."""
        n = np.asarray(n, dtype=int)
        k = np.asarray(k, dtype=int)
        valid = (k >= 0) & (k <= n)
        kk = np.where(valid, k, 0)
        nk = np.where(valid, n - k, 0)
        out = self.table[n] - self.table[kk] - self.table[nk]
        return np.where(valid, out, -np.inf)


@lru_cache(maxsize=None)
def _table_for(size: int) -> LogCombinatorics:
    return LogCombinatorics(size)


def log_combinatorics(k_max: int) -> LogCombinatorics:
    """Return a shared table covering at least k_max.

    Sizes are rounded up to a power of two so that a handful of tables serve
    every sector size in a run.
    """
    size = 1
    while size < max(int(k_max), 1):
        size *= 2
    return _table_for(size)


def log_power(log_base: float, exponent) -> np.ndarray:
    """Return exponent * log_base with the convention 0 * (-inf) = 0."""
    exponent = np.asarray(exponent, dtype=float)
    if np.isneginf(log_base):
        return np.where(exponent == 0, 0.0, -np.inf)
    return exponent * log_base


def signed_log_add(sign_a: np.ndarray, log_a: np.ndarray,
                   sign_b: np.ndarray, log_b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Add two signed log-magnitude arrays.

    A value is sign * exp(log); sign 0 goes together with log = -inf.

    Returns:
        Tuple of (sign, log_magnitude) of the elementwise sum.
    """
    sign_a = np.where(np.isneginf(log_a), 0.0, sign_a)
    sign_b = np.where(np.isneginf(log_b), 0.0, sign_b)
    a_larger = log_a >= log_b
    hi = np.where(a_larger, log_a, log_b)
    lo = np.where(a_larger, log_b, log_a)
    s_hi = np.where(a_larger, sign_a, sign_b)
    s_lo = np.where(a_larger, sign_b, sign_a)

    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(np.isneginf(hi), 0.0, np.exp(lo - hi))
        ratio = np.where(s_lo == 0, 0.0, ratio)
        same = (s_hi == s_lo) | (s_lo == 0)
        mag = hi + np.where(same, np.log1p(ratio), np.log1p(-ratio))

    mag = np.where(np.isneginf(hi), -np.inf, mag)
    sign = np.where(np.isneginf(mag), 0.0, s_hi)
    return sign, mag


def signed_log_to_linear(sign: np.ndarray, log_mag: np.ndarray) -> np.ndarray:
    """Convert to linear scale, flushing magnitudes below the underflow floor."""
    flushed = log_mag < config.LOG_UNDERFLOW
    with np.errstate(over="raise"):
        values = sign * np.exp(np.where(flushed, 0.0, log_mag))
    return np.where(flushed, 0.0, values)
