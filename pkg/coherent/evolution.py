"""
Coherent Evolution Module

Unitary outcoupling of levels 1 and 2 into level 0 under
H = i[V1(b0^dag b1 - b1^dag b0) + V2(b0^dag b2 - b2^dag b0)], hbar = 1,
starting from the product Fock state |N1, N2, 0>, and the snapshot
measurement of the level-0 population n0.

Creation operators evolve linearly,

    b1^dag -> xi11 b1^dag + xi12 b2^dag + xi10 b0^dag
    b2^dag -> xi21 b1^dag + xi22 b2^dag + xi20 b0^dag

so the final state is the product of two multinomial expansions. For equal
Rabi frequencies only the symmetric mode b+ couples to level 0 and the
expansion collapses to a beam splitter between b+ and b0.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

import config
from errors import (
    FormulaScopeError,
    TruncationError,
    UndepletedAssumptionViolated,
    ZeroProbabilityOutcome,
)
from fock.combinatorics import log_combinatorics, log_power, signed_log_to_linear
from fock.histogram import CountHistogram
from fock.states import PlusMinusState, SectorSpec
from fock.transforms import fock_in_plusminus, plusminus_matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CouplingParams:
    """Pulse parameters of the coherent regime.

    Attributes:
        V: Composite Rabi frequency sqrt(V1^2 + V2^2).
        alpha: Mixing angle; V1 = V cos(alpha), V2 = V sin(alpha).
        t: Pulse duration.
    """

    V: float = config.DEFAULT_V
    alpha: float = config.DEFAULT_ALPHA
    t: float = 0.0

    def __post_init__(self) -> None:
        if not self.V > 0:
            raise ValueError(f"V must be positive, got {self.V}")
        if not 0.0 < self.alpha < math.pi / 2:
            raise ValueError(f"alpha must lie in (0, pi/2), got {self.alpha}")
        if not self.t >= 0:
            raise ValueError(f"t must be non-negative, got {self.t}")

    @property
    def v1(self) -> float:
        return self.V * math.cos(self.alpha)

    @property
    def v2(self) -> float:
        return self.V * math.sin(self.alpha)

    @property
    def theta(self) -> float:
        """Dimensionless pulse area V t."""
        return self.V * self.t

    @property
    def is_symmetric(self) -> bool:
        return abs(self.alpha - math.pi / 4) < config.SYMMETRIC_ALPHA_TOL

    @classmethod
    def for_mean_n0(cls, sector: SectorSpec, mean_n0: float, V: float = config.DEFAULT_V,
                    alpha: float = config.DEFAULT_ALPHA) -> "CouplingParams":
        """Pulse duration giving <n0> = mean_n0 in the given sector."""
        bright = _bright_occupation(sector, alpha)
        ratio = mean_n0 / bright
        if not 0.0 <= ratio <= 1.0:
            raise ValueError(f"<n0> = {mean_n0} is out of reach for sector ({sector.n1}, {sector.n2})")
        return cls(V=V, alpha=alpha, t=math.asin(math.sqrt(ratio)) / V)


@dataclass(frozen=True, eq=False)
class JointState:
    """Joint state of the trapped levels and level 0 after the pulse.

    amps[k, n0] is the amplitude of |k>_(+-) |n0>_0, where k is the
    symmetric-mode occupation in the sector left after n0 atoms went to
    level 0 (rows k > N_tot - n0 are zero).
    """

    sector: SectorSpec
    n0_max: int
    amps: np.ndarray
    params: CouplingParams

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=np.complex128)
        expected = (self.sector.n_tot + 1, self.n0_max + 1)
        if amps.shape != expected:
            raise ValueError(f"joint amplitudes must have shape {expected}, got {amps.shape}")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def n0_probabilities(self) -> np.ndarray:
        return np.sum(np.abs(self.amps) ** 2, axis=0)

    def norm(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def depleted_sector(self, n0: int) -> SectorSpec:
        """Sector of levels 1, 2 after n0 atoms were outcoupled."""
        return self.sector.depleted(n0, _level1_share(self.sector, self.params.alpha))


def _bright_occupation(sector: SectorSpec, alpha: float) -> float:
    """<c^dag c> in |N1, N2> for the bright mode c = cos(a) b1 + sin(a) b2."""
    return math.cos(alpha) ** 2 * sector.n1 + math.sin(alpha) ** 2 * sector.n2


def _level1_share(sector: SectorSpec, alpha: float) -> float:
    bright = _bright_occupation(sector, alpha)
    if bright == 0:
        return 0.5
    return math.cos(alpha) ** 2 * sector.n1 / bright


def exact_n0_moments(sector: SectorSpec, params: CouplingParams) -> Tuple[float, float]:
    """Exact mean and variance of n0 for any sector and mixing angle.

    n0 is binomial with success probability sin^2(Vt) given the bright-mode
    occupation, whose variance in the Fock state comes from the hopping term.
    """
    s2 = math.sin(params.theta) ** 2
    c2 = 1.0 - s2
    ca2 = math.cos(params.alpha) ** 2
    sa2 = math.sin(params.alpha) ** 2
    bright_mean = _bright_occupation(sector, params.alpha)
    bright_var = ca2 * sa2 * (sector.n1 * (sector.n2 + 1) + sector.n2 * (sector.n1 + 1))
    return bright_mean * s2, bright_mean * s2 * c2 + bright_var * s2 * s2


def check_undepleted(sector: SectorSpec, removed: float, what: str = "<n0>") -> None:
    """Raise if more than a tenth of the smaller level would be outcoupled.

    Raises:
        UndepletedAssumptionViolated: If removed / min(N1, N2) >= 0.1.
    """
    smaller = min(sector.n1, sector.n2)
    ratio = math.inf if smaller == 0 else removed / smaller
    if ratio >= config.UNDEPLETED_MAX_RATIO:
        raise UndepletedAssumptionViolated(
            f"{what} = {removed:.6g} is {ratio:.3g} of min(N1, N2) = {smaller}; "
            f"the undepleted regime needs a ratio below {config.UNDEPLETED_MAX_RATIO}"
        )


def default_n0_max(sector: SectorSpec, params: CouplingParams) -> int:
    """Truncation ceil(<n0> + 10 sqrt(var)), clamped to [1, N_tot]."""
    mean, variance = exact_n0_moments(sector, params)
    bound = math.ceil(mean + config.N0_TAIL_SIGMAS * math.sqrt(variance))
    return int(min(max(bound, 1), sector.n_tot))


def _sign_power(value: float, exponent) -> np.ndarray:
    exponent = np.asarray(exponent)
    return np.where(exponent % 2 == 0, 1.0, math.copysign(1.0, value) if value != 0 else 0.0)


def _log_abs(value: float) -> float:
    return math.log(abs(value)) if value != 0 else -math.inf


def _symmetric_amplitudes(sector: SectorSpec, theta: float, n0_max: int) -> np.ndarray:
    """Beam splitter b+^dag -> cos(theta) b+^dag + sin(theta) b0^dag in log space."""
    n_tot = sector.n_tot
    comb = log_combinatorics(n_tot)
    initial = fock_in_plusminus(sector).amps.real
    sign_a = np.sign(initial)
    with np.errstate(divide="ignore"):
        log_a = np.log(np.abs(initial))

    remaining = np.arange(n_tot + 1)[:, None]
    n0 = np.arange(n0_max + 1)[None, :]
    original = remaining + n0
    valid = original <= n_tot
    index = np.where(valid, original, 0)

    cos_t, sin_t = math.cos(theta), math.sin(theta)
    logs = (log_a[index]
            + 0.5 * comb.log_binomial(index, np.broadcast_to(n0, index.shape))
            + log_power(_log_abs(cos_t), remaining)
            + log_power(_log_abs(sin_t), n0))
    signs = sign_a[index] * _sign_power(cos_t, remaining) * _sign_power(sin_t, n0)
    logs = np.where(valid, logs, -np.inf)
    signs = np.where(valid, signs, 0.0)
    return signed_log_to_linear(signs, logs).astype(np.complex128)


def mode_coefficients(params: CouplingParams) -> np.ndarray:
    """Rows (xi_i1, xi_i2, xi_i0) giving b_i^dag(t) for i = 1, 2."""
    ca, sa = math.cos(params.alpha), math.sin(params.alpha)
    ct, st = math.cos(params.theta), math.sin(params.theta)
    cross = ca * sa * (ct - 1.0)
    return np.array([
        [ca * ca * ct + sa * sa, cross, ca * st],
        [cross, sa * sa * ct + ca * ca, sa * st],
    ])


def _factor_terms(n_atoms: int, to_zero: int, xi: np.ndarray, comb) -> Tuple[np.ndarray, float]:
    """Coefficients of b1^dag^i b2^dag^j b0^dag^k in (xi . b^dag)^n_atoms for fixed k.

    Returns the terms over i = 0..n_atoms - k scaled by exp(-offset), and the offset.
    """
    i = np.arange(n_atoms - to_zero + 1)
    j = n_atoms - to_zero - i
    logs = (comb.log_factorial(n_atoms) - comb.log_factorial(i) - comb.log_factorial(j)
            - comb.log_factorial(to_zero)
            + log_power(_log_abs(xi[0]), i) + log_power(_log_abs(xi[1]), j)
            + log_power(_log_abs(xi[2]), to_zero))
    signs = _sign_power(xi[0], i) * _sign_power(xi[1], j) * _sign_power(xi[2], to_zero)
    finite = logs[np.isfinite(logs)]
    if finite.size == 0:
        return np.zeros(i.size), 0.0
    offset = float(finite.max())
    return signed_log_to_linear(signs, logs - offset), offset


def _multinomial_amplitudes(sector: SectorSpec, params: CouplingParams, n0_max: int) -> np.ndarray:
    """Expand both multinomials and rotate each n0 slice to the +- basis."""
    n1_init, n2_init, n_tot = sector.n1, sector.n2, sector.n_tot
    if n_tot > config.MULTINOMIAL_WARN_N:
        logger.warning(f"Multinomial expansion at N_tot={n_tot} is slow; consider alpha = pi/4")
    xi = mode_coefficients(params)
    comb = log_combinatorics(n_tot)
    base = -0.5 * (comb.log_factorial(n1_init) + comb.log_factorial(n2_init))
    amps = np.zeros((n_tot + 1, n0_max + 1), dtype=np.complex128)

    for n0 in range(n0_max + 1):
        remaining = n_tot - n0
        n1 = np.arange(remaining + 1)
        log_weight = base + 0.5 * (comb.log_factorial(n1) + comb.log_factorial(remaining - n1)
                                   + comb.log_factorial(n0))
        number_amps = np.zeros(remaining + 1)
        for k in range(max(0, n0 - n2_init), min(n0, n1_init) + 1):
            terms_1, offset_1 = _factor_terms(n1_init, k, xi[0], comb)
            terms_2, offset_2 = _factor_terms(n2_init, n0 - k, xi[1], comb)
            number_amps += np.convolve(terms_1, terms_2) * np.exp(offset_1 + offset_2 + log_weight)
        amps[:remaining + 1, n0] = plusminus_matrix(remaining) @ number_amps
        logger.debug(f"n0={n0}: slice weight {np.sum(number_amps ** 2):.6g}")
    return amps


def evolve_general_alpha(sector: SectorSpec, params: CouplingParams, n0_max: Optional[int] = None,
                         method: str = "auto", enforce_undepleted: bool = True) -> JointState:
    """Evolve |N1, N2, 0> through the pulse and expand over (n+, n0).

    Args:
        sector: Initial atom numbers of levels 1 and 2.
        params: Pulse parameters.
        n0_max: Truncation of the level-0 occupation (default: default_n0_max).
        method: "auto" picks "symmetric" for alpha = pi/4 and "multinomial" otherwise.
        enforce_undepleted: Raise when <n0> is not small against min(N1, N2).
            The expansion itself is exact, so oracle comparisons at tiny N turn it off.

    Raises:
        UndepletedAssumptionViolated: If the undepleted check fails.
        TruncationError: If the state has weight 1e-10 or more at n0 = n0_max.
    """
    mean, variance = exact_n0_moments(sector, params)
    if enforce_undepleted:
        check_undepleted(sector, mean)
    if n0_max is None:
        n0_max = default_n0_max(sector, params)
    n0_max = int(n0_max)
    if not 0 <= n0_max <= sector.n_tot:
        raise ValueError(f"n0_max must lie in [0, {sector.n_tot}], got {n0_max}")

    if method == "auto":
        method = "symmetric" if params.is_symmetric else "multinomial"
    if method == "symmetric":
        if not params.is_symmetric:
            raise FormulaScopeError("the beam-splitter path needs alpha = pi/4")
        amps = _symmetric_amplitudes(sector, params.theta, n0_max)
    elif method == "multinomial":
        amps = _multinomial_amplitudes(sector, params, n0_max)
    else:
        raise ValueError(f"unknown method {method!r}")

    state = JointState(sector, n0_max, amps, params)
    tail = float(state.n0_probabilities[-1])
    if n0_max < sector.n_tot and tail >= config.N0_TAIL_BOUND:
        raise TruncationError(f"P(n0 = {n0_max}) = {tail:.3g}; raise n0_max")
    norm = state.norm()
    if abs(norm - 1.0) > config.JOINT_NORM_TOL:
        raise TruncationError(f"joint state norm {norm:.12g} after truncation at n0_max={n0_max}")
    logger.info(f"Evolved sector ({sector.n1}, {sector.n2}) to Vt={params.theta:.6g} "
                f"via {method}: <n0>={mean:.6g}, var={variance:.6g}, n0_max={n0_max}")
    return state


def closed_form_amplitudes(n_atoms: int, vt: float, n0_max: int) -> np.ndarray:
    """Closed-form joint coefficients for N1 = N2 = n_atoms and equal Rabi frequencies.

    Coefficient of |n+ = 2j - n0> |n0> is
    a_j sqrt(C(2j, n0)) cos^(2j - n0)(Vt) sin^n0(Vt) with
    a_j = (-1)^j sqrt((2j)! (2N - 2j)!) / (j! (N - j)! 2^N).
    These differ from evolve_general_alpha by the global sign (-1)^N.
    """
    n_tot = 2 * n_atoms
    comb = log_combinatorics(n_tot)
    j = np.arange(n_atoms + 1)
    log_a = (0.5 * (comb.log_factorial(2 * j) + comb.log_factorial(n_tot - 2 * j))
             - comb.log_factorial(j) - comb.log_factorial(n_atoms - j) - n_atoms * math.log(2.0))
    sign_a = np.where(j % 2 == 0, 1.0, -1.0)

    signs = np.zeros((n_tot + 1, n0_max + 1))
    logs = np.full((n_tot + 1, n0_max + 1), -np.inf)
    cos_t, sin_t = math.cos(vt), math.sin(vt)
    for n0 in range(n0_max + 1):
        jj = j[2 * j >= n0]
        remaining = 2 * jj - n0
        logs[remaining, n0] = (log_a[jj] + 0.5 * comb.log_binomial(2 * jj, n0)
                               + log_power(_log_abs(cos_t), remaining) + log_power(_log_abs(sin_t), n0))
        signs[remaining, n0] = sign_a[jj] * _sign_power(cos_t, remaining) * _sign_power(sin_t, n0)
    return signed_log_to_linear(signs, logs)


def n0_distribution(state: JointState) -> CountHistogram:
    """Marginal P0(n0) of the level-0 population."""
    weights = state.n0_probabilities
    metadata = {"n1": state.sector.n1, "n2": state.sector.n2, "alpha": state.params.alpha,
                "V": state.params.V, "t": state.params.t, "n0_max": state.n0_max}
    return CountHistogram.from_weights(np.arange(state.n0_max + 1), weights, label="n0", metadata=metadata)


def project_on_n0(state: JointState, n0: int) -> Tuple[PlusMinusState, float]:
    """State of levels 1, 2 after the snapshot count returned n0.

    Returns:
        Tuple of (normalized state in the depleted sector, probability P0(n0)).

    Raises:
        ZeroProbabilityOutcome: If P0(n0) < 1e-30.
    """
    if not 0 <= n0 <= state.n0_max:
        raise ValueError(f"n0 must lie in [0, {state.n0_max}], got {n0}")
    column = state.amps[:, n0]
    probability = float(np.sum(np.abs(column) ** 2))
    if probability < config.ZERO_PROBABILITY:
        raise ZeroProbabilityOutcome(f"P0({n0}) = {probability:.3g}")
    sector = state.depleted_sector(n0)
    remaining = column[:sector.n_tot + 1]
    return PlusMinusState.from_unnormalized(sector, remaining), probability


def n0_moments(sector: SectorSpec, params: CouplingParams, exact: bool = True) -> Tuple[float, float]:
    """Mean N sin^2(Vt) and dispersion of n0 for N1 = N2 = N, alpha = pi/4.

    The default is the dispersion of the generated distribution,
    N s^2 c^2 + N^2 s^4 / 2 + N s^4 / 2. exact=False returns the large-N
    closed form without the last term (479.1 at N = 1000, <n0> = 30).

    Raises:
        FormulaScopeError: Outside equal Rabi frequencies and balanced levels.
    """
    if not params.is_symmetric or not sector.is_symmetric:
        raise FormulaScopeError("n0 moment formulas hold for alpha = pi/4 and N1 = N2 only")
    if exact:
        return exact_n0_moments(sector, params)
    n = sector.n1
    s2 = math.sin(params.theta) ** 2
    return n * s2, n * s2 * (1.0 - s2) + 0.5 * n * n * s2 * s2


def level0_population_rate(sector: SectorSpec, params: CouplingParams, cos_phi: float) -> float:
    """Short-time level-0 population for a definite relative phase.

    (V1^2 N1 + V2^2 N2 + 2 V1 V2 sqrt(N1 N2) cos(phi)) t^2
    """
    v1, v2 = params.v1, params.v2
    return (v1 * v1 * sector.n1 + v2 * v2 * sector.n2
            + 2.0 * v1 * v2 * math.sqrt(sector.n1 * sector.n2) * cos_phi) * params.t ** 2
