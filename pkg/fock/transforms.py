"""
Mode Transform Module

The cos(phi) operator (b1^dag b2 + b2^dag b1) / (2 sqrt(N1 N2)) and the change
of basis between the number basis |n1, n2> and its eigenbasis |n+, n->.

The transform matrix U[n+, n1] = <n+, n- | n1, n2> is a Wigner-d matrix at
angle pi/2. Row n+ is the eigenvector of the hopping matrix
X = b1^dag b2 + b2^dag b1 with eigenvalue 2 n+ - N_tot, which gives the
three-term recurrence in n1

    sqrt((n1 + 1)(N - n1)) U[n+, n1 + 1]
        = (2 n+ - N) U[n+, n1] - sqrt(n1 (N - n1 + 1)) U[n+, n1 - 1]

started from the closed form of the n1 = 0 column and run up to the middle
column; the other half follows from U[n+, N - n1] = (-1)^(n-) U[n+, n1].
"""

import logging
from functools import lru_cache
from typing import List

import numpy as np

from fock.combinatorics import log_combinatorics, signed_log_add, signed_log_to_linear
from fock.states import NumberBasisState, PlusMinusState, SectorSpec

logger = logging.getLogger(__name__)


def cosphi_spectrum(sector: SectorSpec) -> List[float]:
    """Return the N_tot + 1 eigenvalues of cos(phi), ascending.

    The eigenvalue for n+ atoms in the symmetric mode is
    (2 n+ - N_tot) / (2 sqrt(N1 N2)); for N1 = N2 = N this is -1 + 2j/N, j = n+/2.
    """
    return list(cosphi_eigenvalues(sector))


def cosphi_eigenvalues(sector: SectorSpec) -> np.ndarray:
    """Eigenvalues of cos(phi) indexed by n+ (array form of cosphi_spectrum).

    The vacuum carries no phase; its single label is 0.
    """
    if sector.is_vacuum:
        return np.zeros(1)
    n_plus = np.arange(sector.n_tot + 1)
    return (2.0 * n_plus - sector.n_tot) / sector.cos_phi_scale


@lru_cache(maxsize=4)
def plusminus_matrix(n_tot: int) -> np.ndarray:
    """Real orthogonal transform U[n+, n1] for a sector of n_tot atoms.

    Computed by the log-space recurrence described in the module docstring;
    entries are converted to linear scale only at the end.

    Args:
        n_tot: Total atom number of the sector.

    Returns:
        Read-only (n_tot + 1) x (n_tot + 1) array.
    """
    if n_tot < 0:
        raise ValueError(f"n_tot must be non-negative, got {n_tot}")
    size = n_tot + 1
    comb = log_combinatorics(n_tot)
    n_plus = np.arange(size)
    n_minus = n_tot - n_plus

    eigen = (2 * n_plus - n_tot).astype(float)
    eigen_sign = np.sign(eigen)
    with np.errstate(divide="ignore"):
        eigen_log = np.log(np.abs(eigen))

    signs = np.zeros((size, size))
    logs = np.full((size, size), -np.inf)

    # column n1 = 0: (b+^dag - b-^dag)^N / 2^(N/2)
    logs[:, 0] = -0.5 * n_tot * np.log(2.0) + 0.5 * comb.log_binomial(n_tot, n_plus)
    signs[:, 0] = np.where(n_minus % 2 == 0, 1.0, -1.0)

    middle = n_tot // 2
    for n1 in range(middle):
        log_up = 0.5 * np.log((n1 + 1.0) * (n_tot - n1))
        s_a = eigen_sign * signs[:, n1]
        l_a = eigen_log + logs[:, n1]
        if n1 == 0:
            s_b = np.zeros(size)
            l_b = np.full(size, -np.inf)
        else:
            s_b = -signs[:, n1 - 1]
            l_b = 0.5 * np.log(n1 * (n_tot - n1 + 1.0)) + logs[:, n1 - 1]
        s_new, l_new = signed_log_add(s_a, l_a, s_b, l_b)
        signs[:, n1 + 1] = s_new
        logs[:, n1 + 1] = l_new - log_up

    parity = np.where(n_minus % 2 == 0, 1.0, -1.0)
    if n_tot % 2 == 0:
        # middle column is its own mirror image: odd n- entries vanish exactly
        odd = parity < 0
        signs[odd, middle] = 0.0
        logs[odd, middle] = -np.inf
    for n1 in range(middle + 1, size):
        signs[:, n1] = parity * signs[:, n_tot - n1]
        logs[:, n1] = logs[:, n_tot - n1]

    matrix = signed_log_to_linear(signs, logs)
    matrix.setflags(write=False)
    logger.debug(f"Built plus/minus transform for n_tot={n_tot}")
    return matrix


def number_to_plusminus(state: NumberBasisState) -> PlusMinusState:
    """Express a number-basis state in the cos(phi) eigenbasis."""
    matrix = plusminus_matrix(state.sector.n_tot)
    return PlusMinusState.from_unnormalized(state.sector, matrix @ state.amps)


def plusminus_to_number(state: PlusMinusState) -> NumberBasisState:
    """Inverse of number_to_plusminus."""
    matrix = plusminus_matrix(state.sector.n_tot)
    return NumberBasisState.from_unnormalized(state.sector, matrix.T @ state.amps)


def cosphi_expectation(state: PlusMinusState) -> float:
    """Mean value of cos(phi) in the state, kept inside the spectrum."""
    eigen = cosphi_eigenvalues(state.sector)
    value = float(np.dot(state.probabilities, eigen))
    return float(np.clip(value, eigen[0], eigen[-1]))


def fock_in_plusminus(sector: SectorSpec) -> PlusMinusState:
    """Product Fock state |N1, N2> expressed over n+."""
    return number_to_plusminus(NumberBasisState.fock(sector))
