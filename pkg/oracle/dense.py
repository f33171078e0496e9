"""
Dense Fock Space Module

Brute-force reference constructions on explicitly truncated Fock spaces:
the three-mode evolution under the outcoupling Hamiltonian, two-mode
ladder operators, the +- transform by matrix exponential, and the
conditional state of a detection record.
"""

import logging
import math
from dataclasses import dataclass
from functools import reduce
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import sparse
from scipy.linalg import expm
from scipy.sparse.linalg import expm_multiply

import config
from errors import DimensionCap
from fock.transforms import plusminus_matrix

logger = logging.getLogger(__name__)

DENSE_EXPM_LIMIT = 4096


@dataclass(frozen=True)
class DenseFockSpace:
    """Product of truncated Fock spaces, occupation 0..cutoff for each mode.

    Basis states are ordered row-major in the mode occupations.
    """

    cutoffs: Tuple[int, ...]

    def __post_init__(self) -> None:
        cutoffs = tuple(int(c) for c in self.cutoffs)
        if not cutoffs or any(c < 0 for c in cutoffs):
            raise ValueError(f"cutoffs must be non-negative, got {self.cutoffs}")
        object.__setattr__(self, "cutoffs", cutoffs)
        if self.size > config.DENSE_DIMENSION_CAP:
            raise DimensionCap(f"dense space of dimension {self.size} exceeds {config.DENSE_DIMENSION_CAP}")

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(c + 1 for c in self.cutoffs)

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def index(self, occupations: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(occupations), self.dims))

    def occupations(self) -> np.ndarray:
        """Array of shape (size, modes) listing the occupation of every basis state."""
        grids = np.meshgrid(*[np.arange(d) for d in self.dims], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1)

    def fock_vector(self, occupations: Sequence[int]) -> np.ndarray:
        vector = np.zeros(self.size, dtype=np.complex128)
        vector[self.index(occupations)] = 1.0
        return vector

    def annihilation(self, mode: int) -> sparse.csr_matrix:
        """Ladder operator of one mode, identity on the others."""
        factors = []
        for m, dim in enumerate(self.dims):
            if m == mode:
                factors.append(sparse.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr"))
            else:
                factors.append(sparse.identity(dim, format="csr"))
        return reduce(lambda a, b: sparse.kron(a, b, format="csr"), factors)

    def number(self, mode: int) -> sparse.csr_matrix:
        a = self.annihilation(mode)
        return (a.T @ a).tocsr()


def _apply_exponential(generator: sparse.spmatrix, vector: np.ndarray) -> np.ndarray:
    if generator.shape[0] <= DENSE_EXPM_LIMIT:
        return expm(generator.toarray()) @ vector
    return expm_multiply(generator.tocsc(), vector)


def dense_unitary_evolve(n1: int, n2: int, V1: float, V2: float, t: float) -> Tuple[DenseFockSpace, np.ndarray]:
    """Apply exp(-iHt) to |n1, n2, 0> on the full three-mode space (modes 1, 2, 0).

    -iH = V1 (b0^dag b1 - b1^dag b0) + V2 (b0^dag b2 - b2^dag b0) is real and
    antisymmetric, so the propagator is a real orthogonal matrix.

    Raises:
        DimensionCap: If (N_tot + 1)^3 exceeds the cap.
    """
    n_tot = n1 + n2
    space = DenseFockSpace((n_tot, n_tot, n_tot))
    b1, b2, b0 = (space.annihilation(m) for m in range(3))
    generator = V1 * (b0.T @ b1 - b1.T @ b0) + V2 * (b0.T @ b2 - b2.T @ b0)
    state = _apply_exponential(generator * t, space.fock_vector((n1, n2, 0)))
    logger.debug(f"Dense unitary evolution of |{n1}, {n2}, 0> on dimension {space.size}")
    return space, state


def dense_joint_amplitudes(space: DenseFockSpace, state: np.ndarray, n_tot: int) -> np.ndarray:
    """Rearrange a three-mode state into amps[n+, n0] with the +- transform per n0 slice."""
    amps = np.zeros((n_tot + 1, n_tot + 1), dtype=np.complex128)
    for n0 in range(n_tot + 1):
        remaining = n_tot - n0
        slice_ = np.array([state[space.index((k, remaining - k, n0))] for k in range(remaining + 1)])
        amps[:remaining + 1, n0] = plusminus_matrix(remaining) @ slice_
    return amps


def dense_n0_marginal(space: DenseFockSpace, state: np.ndarray) -> np.ndarray:
    """P(n0) of a three-mode state."""
    probs = np.abs(state) ** 2
    return np.bincount(space.occupations()[:, 2], weights=probs, minlength=space.dims[2])


def dense_two_mode_operators(n_max: int) -> Dict[str, np.ndarray]:
    """Dense b1, b2 and the hopping matrix b1^dag b2 + b2^dag b1 on two modes with cutoff n_max."""
    space = DenseFockSpace((n_max, n_max))
    b1 = space.annihilation(0).toarray()
    b2 = space.annihilation(1).toarray()
    return {"b1": b1, "b2": b2, "hopping": b1.T @ b2 + b2.T @ b1, "space": space}


def sector_hopping(n_tot: int) -> np.ndarray:
    """b1^dag b2 on the fixed-number sector, basis |n1, n_tot - n1>."""
    k = np.arange(n_tot)
    return np.diag(np.sqrt((k + 1.0) * (n_tot - k)), -1)


def dense_plusminus_transform(n_tot: int) -> np.ndarray:
    """The +- transform U[n+, n1] by matrix exponential.

    exp((pi/4)(b1^dag b2 - b2^dag b1)) rotates b1 onto b+; its row n+ read as
    an n1 index, signed by (-1)^(n-), gives <n+, n- | n1, n2>.
    """
    raising = sector_hopping(n_tot)
    rotation = expm(0.25 * math.pi * (raising - raising.T))
    n_minus = n_tot - np.arange(n_tot + 1)
    return np.where(n_minus % 2 == 0, 1.0, -1.0)[:, None] * rotation


def dense_conditioned_state(n1: int, n2: int, nu: int, W: float, total_time: float) -> np.ndarray:
    """Number-basis amplitudes c^nu exp(-c^dag c T / 2) |n1, n2>, c = sqrt(W)(b1 + b2), normalized.

    Returns the amplitudes over n1' = 0..N_tot - nu of the depleted sector.
    """
    n_tot = n1 + n2
    space = DenseFockSpace((n_tot, n_tot))
    c = math.sqrt(W) * (space.annihilation(0) + space.annihilation(1)).toarray()
    state = expm(-0.5 * total_time * (c.T @ c)) @ space.fock_vector((n1, n2))
    for _ in range(nu):
        state = c @ state
    remaining = n_tot - nu
    amps = np.array([state[space.index((k, remaining - k))] for k in range(remaining + 1)])
    return amps / np.linalg.norm(amps)


def phase_aligned_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Largest element-wise |a - e^(i chi) b| after removing the global phase chi."""
    a = np.asarray(a, dtype=np.complex128).reshape(-1)
    b = np.asarray(b, dtype=np.complex128).reshape(-1)
    if a.shape != b.shape:
        raise ValueError(f"shapes differ: {a.shape} vs {b.shape}")
    overlap = np.vdot(b, a)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.max(np.abs(a - phase * b)))
