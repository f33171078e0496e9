"""
Lindblad Oracle Module

Exact master-equation counterpart of the trajectory unraveling,
d rho/dt = c rho c^dag - 1/2 {c^dag c, rho} with c = sqrt(W)(b1 + b2),
integrated on the two-mode space, and the trajectory-averaged density
matrix it is compared with.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import solve_ivp

import config
from errors import StepControlFailure
from fock.states import PlusMinusState
from fock.transforms import plusminus_to_number
from oracle.dense import DenseFockSpace

logger = logging.getLogger(__name__)


def jump_matrix(space: DenseFockSpace, W: float) -> np.ndarray:
    return math.sqrt(W) * (space.annihilation(0) + space.annihilation(1)).toarray()


def fock_density_matrix(space: DenseFockSpace, n1: int, n2: int) -> np.ndarray:
    vector = space.fock_vector((n1, n2))
    return np.outer(vector, vector.conj())


def embed_state(space: DenseFockSpace, state: PlusMinusState) -> np.ndarray:
    """Two-mode vector of a +- state; only the sector's total number matters."""
    number = plusminus_to_number(state)
    n_tot = state.sector.n_tot
    vector = np.zeros(space.size, dtype=np.complex128)
    for k in range(n_tot + 1):
        vector[space.index((k, n_tot - k))] = number.amps[k]
    return vector


def mean_trapped_number(space: DenseFockSpace, rho: np.ndarray) -> float:
    occupations = space.occupations().sum(axis=1)
    return float(np.real(np.dot(np.diag(rho), occupations)))


def lindblad_evolve(rho0: np.ndarray, W: float, t: float, space: DenseFockSpace) -> np.ndarray:
    """Integrate the master equation from 0 to t with RK45 and tight tolerances.

    Raises:
        StepControlFailure: If the integrator fails, the trace drifts by more
            than 1e-9, or the final state has an eigenvalue below -1e-9.
    """
    rank = space.size
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if rho0.shape != (rank, rank):
        raise ValueError(f"density matrix must be {rank} x {rank}, got {rho0.shape}")
    if W == 0 or t == 0:
        return rho0.copy()

    L = jump_matrix(space, W)
    L_dagger = L.conj().T
    L_squared = L_dagger @ L

    def _lindblad_rhs(_, rho):
        rho = rho.reshape(rank, rank)
        rho_dot = L @ rho @ L_dagger - 0.5 * (L_squared @ rho + rho @ L_squared)
        return rho_dot.reshape(-1)

    soln = solve_ivp(_lindblad_rhs, t_span=(0.0, t), y0=rho0.reshape(-1), method="RK45",
                     rtol=config.LINDBLAD_RTOL, atol=config.LINDBLAD_ATOL)
    if soln.status != 0:
        raise StepControlFailure(f"master-equation integration failed: {soln.message}")
    rho = soln.y[:, -1].reshape(rank, rank)
    rho = 0.5 * (rho + rho.conj().T)

    trace_error = abs(np.trace(rho) - np.trace(rho0))
    if trace_error > config.LINDBLAD_TRACE_TOL:
        raise StepControlFailure(f"trace drifted by {trace_error:.3g}")
    lowest = float(np.linalg.eigvalsh(rho).min())
    if lowest < -config.LINDBLAD_POSITIVITY_TOL:
        raise StepControlFailure(f"density matrix lost positivity (eigenvalue {lowest:.3g})")
    logger.debug(f"Lindblad evolution to Wt={W * t:.6g}: {soln.nfev} evaluations")
    return rho


@dataclass(frozen=True)
class AveragedDensityMatrix:
    """Trajectory average of |psi><psi| with per-element standard errors."""

    mean: np.ndarray
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    samples: int

    def agrees_with(self, rho: np.ndarray, sigmas: float = config.ORACLE_LINDBLAD_SIGMAS,
                    mask: Optional[np.ndarray] = None, atol: float = config.ORACLE_LINDBLAD_ATOL) -> bool:
        """Element-wise agreement within `sigmas` standard errors.

        Args:
            rho: Reference density matrix.
            sigmas: Allowed deviation in standard errors.
            mask: Boolean selection of the elements to compare (default: all).
            atol: Absolute slack for integration error only; elements that
                every trajectory gives the same value have zero standard error.
        """
        diff = self.mean - rho
        ok_real = np.abs(diff.real) <= sigmas * self.stderr_real + atol
        ok_imag = np.abs(diff.imag) <= sigmas * self.stderr_imag + atol
        ok = ok_real & ok_imag
        if mask is not None:
            ok = ok[np.asarray(mask, dtype=bool)]
        return bool(np.all(ok))

    def worst_deviation(self, rho: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
        """Largest |mean - rho| over the selected elements, in standard errors."""
        diff = np.abs(self.mean - rho)
        stderr = np.hypot(self.stderr_real, self.stderr_imag)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(stderr > 0, diff / stderr, np.where(diff > config.ORACLE_LINDBLAD_ATOL, np.inf, 0.0))
        if mask is not None:
            z = z[np.asarray(mask, dtype=bool)]
        return float(np.max(z))


def detection_block_mask(space: DenseFockSpace, n_tot: int, max_detections: int) -> np.ndarray:
    """Select the density-matrix blocks reached by at most max_detections detections.

    Row and column must both hold between n_tot - max_detections and n_tot atoms.
    """
    totals = space.occupations().sum(axis=1)
    inside = (totals <= n_tot) & (totals >= n_tot - max_detections)
    return np.outer(inside, inside)


def trajectory_density_matrix(states: Iterable[PlusMinusState], space: DenseFockSpace) -> AveragedDensityMatrix:
    """Average the projectors of trajectory end states, streaming over the iterable."""
    total = np.zeros((space.size, space.size), dtype=np.complex128)
    squares_real = np.zeros((space.size, space.size))
    squares_imag = np.zeros((space.size, space.size))
    count = 0
    for state in states:
        vector = embed_state(space, state)
        projector = np.outer(vector, vector.conj())
        total += projector
        squares_real += projector.real ** 2
        squares_imag += projector.imag ** 2
        count += 1
    if count < 2:
        raise ValueError("need at least two states to estimate standard errors")
    mean = total / count
    var_real = np.maximum(squares_real / count - mean.real ** 2, 0.0) * count / (count - 1)
    var_imag = np.maximum(squares_imag / count - mean.imag ** 2, 0.0) * count / (count - 1)
    return AveragedDensityMatrix(mean, np.sqrt(var_real / count), np.sqrt(var_imag / count), count)
