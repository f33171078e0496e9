"""
Number-Difference Histogram Module

Distribution of the final atom-number difference Delta N^f = n1 - n2 of a
trapped state, and the detector model that smears counted numbers with a
discrete Gaussian error.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

import config
from fock.histogram import CountHistogram
from fock.states import PlusMinusState, number_difference_values
from fock.transforms import plusminus_to_number

logger = logging.getLogger(__name__)

INITIAL_NUMBER_MODELS = ("fixed", "poissonian")


@dataclass(frozen=True)
class DetectionModel:
    """Atom-counting model of the interference readout.

    Attributes:
        sigma: Total r.m.s. counting error (atoms).
        initial_number_model: "fixed" or "poissonian" initial atom numbers.
        mean1: Level-1 atom number (fixed) or its Poisson mean.
        mean2: Level-2 atom number (fixed) or its Poisson mean.
    """

    sigma: float = config.DEFAULT_SIGMA
    initial_number_model: str = "poissonian"
    mean1: float = float(config.DEFAULT_N1)
    mean2: float = float(config.DEFAULT_N2)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"sigma must be finite and non-negative, got {self.sigma}")
        if self.initial_number_model not in INITIAL_NUMBER_MODELS:
            raise ValueError(f"initial_number_model must be one of {INITIAL_NUMBER_MODELS}, "
                             f"got {self.initial_number_model!r}")
        if not (self.mean1 > 0 and self.mean2 > 0):
            raise ValueError(f"initial numbers must be positive, got ({self.mean1}, {self.mean2})")
        if self.initial_number_model == "fixed" and (self.mean1 != int(self.mean1) or self.mean2 != int(self.mean2)):
            raise ValueError("fixed initial numbers must be integers")


def final_number_distribution(final_state: PlusMinusState) -> CountHistogram:
    """P(Delta N^f) over -N_tot'..N_tot' in steps of 2."""
    number_state = plusminus_to_number(final_state)
    values = number_difference_values(final_state.sector.n_tot)
    metadata = {"n1": final_state.sector.n1, "n2": final_state.sector.n2}
    return CountHistogram.from_weights(values, number_state.probabilities, label="delta_n_final", metadata=metadata)


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Discrete Gaussian of r.m.s. sigma on the integers |m| <= ceil(6 sigma), unit sum."""
    half = int(math.ceil(config.GAUSSIAN_KERNEL_HALF_WIDTH_SIGMAS * sigma))
    m = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (m / sigma) ** 2)
    return kernel / kernel.sum()


def smear(histogram: CountHistogram, sigma: float) -> CountHistogram:
    """Convolve counts with the detector error; sigma = 0 returns the histogram unchanged."""
    if sigma == 0:
        return histogram
    dense = histogram.dense()
    kernel = gaussian_kernel(sigma)
    half = (kernel.size - 1) // 2
    probs = np.convolve(dense.probabilities, kernel)
    values = np.arange(dense.values[0] - half, dense.values[-1] + half + 1)
    metadata = dict(histogram.metadata, sigma=sigma)
    return CountHistogram.from_weights(values, probs, label=histogram.label, metadata=metadata)
