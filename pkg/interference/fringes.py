"""
Fringe Analysis Module

Peak positions, spacing and visibility of the interference pattern in a
number-difference histogram.
"""

import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy.signal import find_peaks

import config
from fock.histogram import CountHistogram

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FringeReport:
    """Interference summary of one histogram.

    Attributes:
        histogram: The analysed distribution.
        peak_positions: Values of the significant maxima.
        peak_spacing: Most common distance between adjacent maxima (0 if fewer than two).
        visibility: (P_peak - P_trough) / (P_peak + P_trough) over the three central maxima.
    """

    histogram: CountHistogram
    peak_positions: List[int]
    peak_spacing: int
    visibility: float

    def to_dict(self) -> dict:
        return {
            "peak_positions": [int(p) for p in self.peak_positions],
            "peak_spacing": int(self.peak_spacing),
            "visibility": float(self.visibility),
            "mean": self.histogram.mean(),
            "variance": self.histogram.variance(),
            "metadata": self.histogram.metadata,
        }


def dominant_parity(histogram: CountHistogram) -> Tuple[np.ndarray, np.ndarray]:
    """Values and probabilities of the parity class carrying most weight.

    The fringe pattern lives on one parity class; after detector smearing the
    other class carries an interleaved copy that would hide the troughs.
    """
    dense = histogram.dense()
    even = dense.values % 2 == 0
    if dense.probabilities[even].sum() >= dense.probabilities[~even].sum():
        mask = even
    else:
        mask = ~even
    return dense.values[mask], dense.probabilities[mask]


def find_fringe_peaks(histogram: CountHistogram) -> Tuple[np.ndarray, np.ndarray]:
    """Significant maxima and minima of the dominant parity class.

    Maxima below 1e-3 of the largest value are ignored; minima are kept only
    between the first and last retained maximum.

    Returns:
        Tuple of (peak values, trough values).
    """
    values, probs = dominant_parity(histogram)
    if probs.size < 3:
        return np.array([], dtype=int), np.array([], dtype=int)
    peaks, _ = find_peaks(probs, height=config.FRINGE_PEAK_MIN_RATIO * probs.max())
    troughs, _ = find_peaks(-probs)
    if peaks.size:
        troughs = troughs[(troughs > peaks[0]) & (troughs < peaks[-1])]
    return values[peaks], values[troughs]


def _central_peaks(peak_values: np.ndarray, histogram: CountHistogram, count: int = 3) -> np.ndarray:
    heights = np.array([histogram.probability_at(v) for v in peak_values])
    centre = int(np.argmax(heights))
    low = max(0, min(centre - count // 2, peak_values.size - count))
    return peak_values[low:low + count]


def visibility(histogram: CountHistogram) -> float:
    """Fringe visibility over the three maxima around the highest one.

    Each maximum is compared with the mean of its neighbouring minima; the
    result is the mean over the maxima, or 0 if there are no minima.
    """
    peak_values, trough_values = find_fringe_peaks(histogram)
    if peak_values.size == 0 or trough_values.size == 0:
        return 0.0
    ratios = []
    for peak in _central_peaks(peak_values, histogram):
        left = trough_values[trough_values < peak]
        right = trough_values[trough_values > peak]
        neighbours = ([left[-1]] if left.size else []) + ([right[0]] if right.size else [])
        if not neighbours:
            continue
        p_peak = histogram.probability_at(int(peak))
        p_trough = float(np.mean([histogram.probability_at(int(t)) for t in neighbours]))
        ratios.append((p_peak - p_trough) / (p_peak + p_trough))
    if not ratios:
        return 0.0
    return float(np.clip(np.mean(ratios), 0.0, 1.0))


def fringe_report(histogram: CountHistogram) -> FringeReport:
    peak_values, _ = find_fringe_peaks(histogram)
    central = _central_peaks(peak_values, histogram) if peak_values.size else peak_values
    if central.size >= 2:
        spacing = int(np.bincount(np.diff(central).astype(int)).argmax())
    else:
        spacing = 0
    report = FringeReport(histogram, [int(v) for v in peak_values], spacing, visibility(histogram))
    logger.debug(f"Fringes: {len(report.peak_positions)} peaks, spacing {spacing}, visibility {report.visibility:.4f}")
    return report
