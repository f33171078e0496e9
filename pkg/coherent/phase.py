"""
Conditional Phase Module

Distribution of the relative phase of levels 1 and 2 after the snapshot
count n0, exactly (from the joint state) and in the Gaussian form
C_ph exp{-[n0 - N sin^2(Vt)(1 + cos phi)]^2 / (2 n0)}.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.signal import find_peaks

import config
from coherent.evolution import CouplingParams, JointState, project_on_n0
from errors import ZeroProbabilityOutcome
from fock.states import SectorSpec
from fock.transforms import cosphi_eigenvalues

logger = logging.getLogger(__name__)


def default_phi_grid(size: int = config.PHI_GRID_SIZE) -> np.ndarray:
    """Cell centres of a uniform grid on the open interval (-pi, pi).

    Built as a mirrored half grid so that phi and -phi are exact negatives.
    """
    if size < 2 or size % 2:
        raise ValueError(f"phi grid size must be a positive even number, got {size}")
    step = 2.0 * math.pi / size
    half = (np.arange(size // 2) + 0.5) * step
    return np.concatenate([-half[::-1], half])


@dataclass(frozen=True, eq=False)
class ConditionalPhaseDistribution:
    """Probability of each cos(phi) value given the observed n0.

    Attributes:
        sector: Sector the cos(phi) labels refer to.
        n0_observed: Snapshot count the distribution is conditioned on.
        support: (cos phi, probability) pairs.
        phi_grid: Optional grid for the rendering over phi.
        phi_density: Density over phi_grid, even in phi.
    """

    sector: SectorSpec
    n0_observed: int
    support: List[Tuple[float, float]]
    phi_grid: Optional[np.ndarray] = None
    phi_density: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        probs = np.array([p for _, p in self.support], dtype=float)
        if probs.size == 0:
            raise ValueError("empty support")
        if np.any(probs < 0):
            raise ValueError("negative probability in support")
        if abs(probs.sum() - 1.0) > config.JOINT_NORM_TOL:
            raise ValueError(f"support probabilities sum to {probs.sum():.12g}")

    @property
    def cos_values(self) -> np.ndarray:
        return np.array([c for c, _ in self.support])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for _, p in self.support])

    def mean_cos(self) -> float:
        return float(np.dot(self.cos_values, self.probabilities))

    def total_variation(self, other: "ConditionalPhaseDistribution") -> float:
        """Half the L1 distance of the two phi renderings (same grid required)."""
        if self.phi_density is None or other.phi_density is None:
            raise ValueError("both distributions need a phi rendering")
        if self.phi_grid.shape != other.phi_grid.shape or not np.allclose(self.phi_grid, other.phi_grid):
            raise ValueError("phi grids differ")
        step = self.phi_grid[1] - self.phi_grid[0]
        return float(0.5 * np.sum(np.abs(self.phi_density - other.phi_density)) * step)


def _normalized_on_grid(density: np.ndarray, grid: np.ndarray) -> np.ndarray:
    step = grid[1] - grid[0]
    total = np.sum(density) * step
    if not total > 0:
        raise ZeroProbabilityOutcome("phase density vanishes on the grid")
    return density / total


def render_on_phi(cos_values: np.ndarray, probabilities: np.ndarray, phi_grid: np.ndarray) -> np.ndarray:
    """Spread discrete cos(phi) probabilities over phi with the continuum Jacobian.

    Each eigenvalue's probability becomes a density in cos(phi) (divided by the
    local spacing of the occupied eigenvalues), which is interpolated at cos(phi)
    and multiplied by |d cos(phi) / d phi| = |sin(phi)|.
    """
    occupied = probabilities > config.PHASE_SUPPORT_FLOOR * probabilities.max()
    xs = cos_values[occupied]
    ps = probabilities[occupied]
    order = np.argsort(xs)
    xs, ps = xs[order], ps[order]
    if xs.size == 1:
        spacing = np.ones(1)
    else:
        spacing = np.gradient(xs)
    cos_density = ps / spacing
    density = np.interp(np.cos(phi_grid), xs, cos_density, left=0.0, right=0.0) * np.abs(np.sin(phi_grid))
    return _normalized_on_grid(density, phi_grid)


def conditional_phase_distribution(state: JointState, n0: int,
                                   phi_grid: Optional[np.ndarray] = None) -> ConditionalPhaseDistribution:
    """Exact phase distribution after observing n0.

    For equal Rabi frequencies the labels are the pre-outcoupling cos(phi)
    eigenvalues of the original sector (index n+ + n0). Otherwise the labels
    are the eigenvalues of the post-measurement state in its depleted sector.
    """
    if phi_grid is None:
        phi_grid = default_phi_grid()
    conditional, probability = project_on_n0(state, n0)
    if state.params.is_symmetric:
        sector = state.sector
        labels = cosphi_eigenvalues(sector)[n0:n0 + conditional.sector.n_tot + 1]
    else:
        sector = conditional.sector
        labels = cosphi_eigenvalues(sector)
    probs = conditional.probabilities
    support = [(float(c), float(p)) for c, p in zip(labels, probs)]
    density = render_on_phi(labels, probs, phi_grid)
    logger.debug(f"Conditional phase for n0={n0}: P0={probability:.6g}, "
                 f"<cos phi>={float(np.dot(labels, probs)):.6g}")
    return ConditionalPhaseDistribution(sector, n0, support, phi_grid, density)


def gaussian_phase_approx(sector: SectorSpec, params: CouplingParams, n0: int,
                          phi_grid: Optional[np.ndarray] = None) -> ConditionalPhaseDistribution:
    """C_ph exp{-[n0 - <n0 | phi>]^2 / (2 n0)} on the phi grid, normalized.

    <n0 | phi> = sin^2(Vt) (cos^2 a N1 + sin^2 a N2 + 2 cos a sin a sqrt(N1 N2) cos phi),
    which is N sin^2(Vt)(1 + cos phi) for N1 = N2 = N and a = pi/4.
    """
    if n0 < 1:
        raise ValueError(f"the Gaussian form needs n0 >= 1, got {n0}")
    if phi_grid is None:
        phi_grid = default_phi_grid()
    s2 = math.sin(params.theta) ** 2
    ca, sa = math.cos(params.alpha), math.sin(params.alpha)
    expected = s2 * (ca * ca * sector.n1 + sa * sa * sector.n2
                     + 2.0 * ca * sa * math.sqrt(sector.n1 * sector.n2) * np.cos(phi_grid))
    density = _normalized_on_grid(np.exp(-((n0 - expected) ** 2) / (2.0 * n0)), phi_grid)

    # fold phi and -phi onto one cos(phi) value
    step = phi_grid[1] - phi_grid[0]
    upper = phi_grid > 0
    weights = 2.0 * density[upper] * step
    weights = weights / weights.sum()
    support = [(float(c), float(w)) for c, w in zip(np.cos(phi_grid[upper]), weights)]
    return ConditionalPhaseDistribution(sector, n0, support, phi_grid, density)


def phase_peaks_resolved(distribution: ConditionalPhaseDistribution,
                         valley_ratio: float = config.PHASE_VALLEY_RATIO) -> bool:
    """True if the phi rendering shows two maxima at +-phi* separated by a clear dip.

    The dip at phi = 0 between the two highest maxima must fall below
    valley_ratio times the lower maximum.
    """
    if distribution.phi_density is None:
        raise ValueError("distribution has no phi rendering")
    density = distribution.phi_density
    peaks, _ = find_peaks(density)
    if peaks.size < 2:
        return False
    top = peaks[np.argsort(density[peaks])[-2:]]
    left, right = sorted(top)
    valley = float(density[left:right + 1].min())
    return valley < valley_ratio * float(min(density[left], density[right]))


def peak_phases(distribution: ConditionalPhaseDistribution) -> Tuple[float, float]:
    """Positions (-phi*, +phi*) of the two highest maxima of the phi rendering."""
    density = distribution.phi_density
    peaks, _ = find_peaks(density)
    if peaks.size < 2:
        raise ValueError("phase rendering has fewer than two maxima")
    top = sorted(peaks[np.argsort(density[peaks])[-2:]])
    return float(distribution.phi_grid[top[0]]), float(distribution.phi_grid[top[1]])
