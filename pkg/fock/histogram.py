"""
Count Histogram Module

Discrete probability distribution over an integer observable (n0, Delta N^f,
Delta N_12) together with a small provenance dictionary.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

import config

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CountHistogram:
    """Probabilities over strictly increasing integer values.

    Attributes:
        values: Integer values of the observable.
        probabilities: Probability of each value; non-negative, sum 1.
        label: Name of the observable, used as the CSV column header.
        metadata: Provenance carried to exports.
    """

    values: np.ndarray
    probabilities: np.ndarray
    label: str = "value"
    metadata: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.int64).reshape(-1)
        probs = np.array(self.probabilities, dtype=float).reshape(-1)
        if values.shape != probs.shape:
            raise ValueError(f"{values.size} values but {probs.size} probabilities")
        if values.size == 0:
            raise ValueError("histogram is empty")
        if np.any(np.diff(values) <= 0):
            raise ValueError("histogram values must be strictly increasing")
        if np.any(probs < 0):
            raise ValueError("histogram probabilities must be non-negative")
        total = float(probs.sum())
        if abs(total - 1.0) > config.JOINT_NORM_TOL:
            raise ValueError(f"histogram sums to {total:.12g}, expected 1")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probabilities", probs)

    @classmethod
    def from_weights(cls, values, weights, label: str = "value",
                     metadata: Optional[Dict[str, object]] = None) -> "CountHistogram":
        """Normalize non-negative weights into a histogram."""
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not total > 0:
            raise ValueError("histogram weights sum to zero")
        return cls(values, weights / total, label, dict(metadata or {}))

    def mean(self) -> float:
        return float(np.dot(self.values, self.probabilities))

    def variance(self) -> float:
        mean = self.mean()
        return float(np.dot((self.values - mean) ** 2, self.probabilities))

    def probability_at(self, value: int) -> float:
        index = np.searchsorted(self.values, value)
        if index < self.values.size and self.values[index] == value:
            return float(self.probabilities[index])
        return 0.0

    def shifted(self, offset: int) -> "CountHistogram":
        return CountHistogram(self.values + int(offset), self.probabilities, self.label, dict(self.metadata))

    def dense(self) -> "CountHistogram":
        """Same distribution on the full integer range min..max (zeros filled in)."""
        full = np.arange(self.values[0], self.values[-1] + 1)
        probs = np.zeros(full.size)
        probs[self.values - self.values[0]] = self.probabilities
        return CountHistogram(full, probs, self.label, dict(self.metadata))

    def rows(self) -> np.ndarray:
        """Two-column array (value, probability) for CSV export."""
        return np.column_stack([self.values.astype(float), self.probabilities])
