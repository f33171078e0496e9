"""
Collapse Kernel Module

Measuring f(x) with outcome f0 multiplies the wavefunction by a narrow
detector kernel, Psi_out(x) ~ Psi_in(x) g[f(x) - f0]. Near well separated
roots x_r of f(x) = f0 the output is a sum of kernel images
Psi_in(x_r) g[f'(x_r)(x - x_r)], one peak per root.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

import config
from errors import DegenerateRoot, GridTooSmall, KernelUnderresolved, ZeroOverlap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Wavefunction1D:
    """Complex wavefunction sampled on a uniform grid of a collective variable x."""

    grid: np.ndarray
    amplitudes: np.ndarray
    norm_tol: float = config.NORM_TOL

    def __post_init__(self) -> None:
        grid = np.array(self.grid, dtype=float).reshape(-1)
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if grid.shape != amps.shape:
            raise ValueError(f"grid has {grid.size} points but {amps.size} amplitudes were given")
        if grid.size < 3:
            raise ValueError("grid needs at least three points")
        steps = np.diff(grid)
        if np.any(steps <= 0):
            raise ValueError("grid must be strictly increasing")
        if np.max(np.abs(steps - steps.mean())) > config.GRID_UNIFORMITY_TOL * abs(steps.mean()):
            raise ValueError("grid must be uniformly spaced")
        grid.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def spacing(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (self.grid.size - 1))

    @property
    def density(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sum(self.density) * self.spacing)

    def is_normalized(self) -> bool:
        return abs(self.norm() - 1.0) <= self.norm_tol

    def normalize(self) -> "Wavefunction1D":
        weight = self.norm()
        if weight < config.ZERO_OVERLAP_THRESHOLD:
            raise ZeroOverlap(f"cannot normalize a wavefunction of weight {weight:.3g}")
        return Wavefunction1D(self.grid, self.amplitudes / np.sqrt(weight), self.norm_tol)

    def at(self, x: float) -> complex:
        """Linear interpolation of the amplitude at x."""
        real = np.interp(x, self.grid, self.amplitudes.real)
        imag = np.interp(x, self.grid, self.amplitudes.imag)
        return complex(real, imag)

    def overlap(self, other: "Wavefunction1D") -> complex:
        """<self|other> on the shared grid."""
        return complex(np.sum(np.conj(self.amplitudes) * other.amplitudes) * self.spacing)

    def l2_distance(self, other: "Wavefunction1D") -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes - other.amplitudes) ** 2) * self.spacing))

    def width(self) -> float:
        """Standard deviation of |Psi|^2 in x."""
        weights = self.density / np.sum(self.density)
        mean = np.sum(weights * self.grid)
        return float(np.sqrt(np.sum(weights * (self.grid - mean) ** 2)))

    @classmethod
    def gaussian(cls, grid: np.ndarray, center: float, sigma: float) -> "Wavefunction1D":
        grid = np.asarray(grid, dtype=float)
        amps = np.exp(-((grid - center) ** 2) / (4.0 * sigma ** 2))
        return cls(grid, amps.astype(np.complex128)).normalize()

    @classmethod
    def flat(cls, grid: np.ndarray) -> "Wavefunction1D":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, np.ones_like(grid, dtype=np.complex128)).normalize()


@dataclass(frozen=True)
class DetectorKernel:
    """Narrow detector response g(y) centred on the measurement outcome.

    Attributes:
        center: Measurement outcome f0.
        width: Kernel width w (Gaussian standard deviation or boxcar half-width).
        shape: "gaussian" (default) or "boxcar"; both are unit-normalized in y.
    """

    center: float
    width: float
    shape: str = "gaussian"

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ValueError(f"kernel width must be positive, got {self.width}")
        if self.shape not in config.KERNEL_SHAPES:
            raise ValueError(f"unknown kernel shape {self.shape!r}; expected one of {config.KERNEL_SHAPES}")

    def __call__(self, y) -> np.ndarray:
        """Evaluate g(y); g is even with its maximum at y = 0."""
        y = np.asarray(y, dtype=float)
        if self.shape == "gaussian":
            return np.exp(-0.5 * (y / self.width) ** 2) / (np.sqrt(2.0 * np.pi) * self.width)
        return np.where(np.abs(y) <= self.width, 0.5 / self.width, 0.0)


@dataclass(frozen=True, eq=False)
class MeasuredFunction:
    """The measured function f and its derivative sampled on the state grid.

    The optional callables are used to evaluate f and f' away from grid points
    (at roots); without them linear interpolation of the samples is used.
    """

    values: np.ndarray
    derivative: np.ndarray
    func: Optional[Callable] = None
    dfunc: Optional[Callable] = None

    @classmethod
    def from_callable(cls, grid: np.ndarray, func: Callable,
                      dfunc: Optional[Callable] = None) -> "MeasuredFunction":
        """Sample f (and f', analytically or by central differences) on a grid."""
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(func(grid), dtype=float)
        if dfunc is not None:
            derivative = np.asarray(dfunc(grid), dtype=float)
        else:
            derivative = np.gradient(values, grid)
        return cls(values, derivative, func, dfunc)

    def value_at(self, x: float, grid: np.ndarray) -> float:
        if self.func is not None:
            return float(self.func(x))
        return float(np.interp(x, grid, self.values))

    def derivative_at(self, x: float, grid: np.ndarray) -> float:
        if self.dfunc is not None:
            return float(self.dfunc(x))
        return float(np.interp(x, grid, self.derivative))

    def derivative_consistent(self, grid: np.ndarray, rtol: float = 1e-6) -> bool:
        """Check f' against central differences of f on interior points."""
        central = (self.values[2:] - self.values[:-2]) / (grid[2:] - grid[:-2])
        scale = max(float(np.max(np.abs(self.derivative))), 1e-300)
        return bool(np.max(np.abs(central - self.derivative[1:-1])) <= rtol * scale)


def _check_resolvable(psi: Wavefunction1D, g: DetectorKernel) -> None:
    if g.width <= config.KERNEL_MIN_GRID_SPACINGS * psi.spacing:
        raise KernelUnderresolved(
            f"kernel width {g.width:.3g} must exceed {config.KERNEL_MIN_GRID_SPACINGS:g} grid spacings "
            f"({psi.spacing:.3g})"
        )


def _check_boundary(psi: Wavefunction1D) -> None:
    magnitude = np.abs(psi.amplitudes)
    edge = max(magnitude[0], magnitude[-1])
    if edge >= config.GRID_BOUNDARY_RATIO * magnitude.max():
        raise GridTooSmall(
            f"boundary amplitude is {edge / magnitude.max():.3g} of the maximum; widen the grid"
        )


def _normalized_output(grid: np.ndarray, amps: np.ndarray, norm_tol: float) -> Wavefunction1D:
    raw = Wavefunction1D(grid, amps, norm_tol)
    if raw.norm() < config.ZERO_OVERLAP_THRESHOLD:
        raise ZeroOverlap("measurement outcome is incompatible with the input state")
    out = raw.normalize()
    _check_boundary(out)
    return out


def collapse(psi_in: Wavefunction1D, f: MeasuredFunction, g: DetectorKernel) -> Wavefunction1D:
    """Collapse psi_in on the outcome g.center of a measurement of f.

    Returns:
        Normalized Psi_out(x) ~ Psi_in(x) g[f(x) - f0].

    Raises:
        KernelUnderresolved: If the kernel is not wider than two grid spacings.
        ZeroOverlap: If the outcome has no support in psi_in.
        GridTooSmall: If the output does not vanish at the grid edges.
    """
    if not psi_in.is_normalized():
        raise ValueError(f"input wavefunction is not normalized (norm {psi_in.norm():.12g})")
    _check_resolvable(psi_in, g)
    amps = psi_in.amplitudes * g(f.values - g.center)
    return _normalized_output(psi_in.grid, amps, psi_in.norm_tol)


def find_roots(f: MeasuredFunction, f0: float, grid: np.ndarray) -> List[float]:
    """All solutions of f(x) = f0 inside the grid.

    Sign changes of the samples are bracketed and refined with brentq when the
    callable is known, otherwise linearly interpolated.
    """
    grid = np.asarray(grid, dtype=float)
    shifted = f.values - f0
    roots: List[float] = []
    for i in range(grid.size - 1):
        a, b = shifted[i], shifted[i + 1]
        if a == 0.0:
            roots.append(float(grid[i]))
            continue
        if a * b < 0.0:
            if f.func is not None:
                root = brentq(lambda x: f.func(x) - f0, grid[i], grid[i + 1], rtol=1e-14)
            else:
                root = grid[i] - a * (grid[i + 1] - grid[i]) / (b - a)
            roots.append(float(root))
    if shifted[-1] == 0.0:
        roots.append(float(grid[-1]))
    return roots


def two_peak_approximation(psi_in: Wavefunction1D, f: MeasuredFunction, g: DetectorKernel,
                           roots: Sequence[float]) -> Wavefunction1D:
    """Linearized collapse: one kernel image per root of f(x) = f0.

    Returns:
        Normalized sum over roots of Psi_in(x_r) g[f'(x_r)(x - x_r)].

    Raises:
        DegenerateRoot: If |f'(x_r)| < 1e-9 at some root.
        ZeroOverlap: If psi_in vanishes at every root.
    """
    if not roots:
        raise ZeroOverlap("no roots given; outcome lies outside the range of f")
    _check_resolvable(psi_in, g)
    amps = np.zeros_like(psi_in.amplitudes)
    for root in roots:
        slope = f.derivative_at(root, psi_in.grid)
        if abs(slope) < config.DEGENERATE_SLOPE:
            raise DegenerateRoot(f"f'({root:.6g}) = {slope:.3g}; linearization is invalid")
        amps = amps + psi_in.at(root) * g(slope * (psi_in.grid - root))

    out = _normalized_output(psi_in.grid, amps, psi_in.norm_tol)
    if len(roots) >= 2 and not peaks_resolved(out, g, roots, f):
        logger.warning(f"Peaks at roots {[round(r, 6) for r in roots]} are not resolved by kernel width {g.width}")
    return out


def peaks_resolved(psi_out: Wavefunction1D, g: DetectorKernel, roots: Sequence[float],
                   f: MeasuredFunction) -> bool:
    """Resolution criterion g[x0 f'(x0)] / g(0) < 0.01 for every adjacent root pair.

    x0 is half the distance between the two roots of a pair, and f' is taken
    at each root of the pair.
    """
    if len(roots) < 2:
        raise ValueError("resolution needs at least two roots")
    ordered = sorted(roots)
    peak = float(g(0.0))
    for left, right in zip(ordered[:-1], ordered[1:]):
        half = 0.5 * (right - left)
        for root in (left, right):
            slope = f.derivative_at(root, psi_out.grid)
            if float(g(half * slope)) / peak >= config.PEAK_RESOLUTION_RATIO:
                return False
    return True
