"""
Quantum Trajectory Module

Continuous observation of the outcoupled atoms (V << gamma). After level 0
is eliminated, each detection applies the jump operator sqrt(W)(b1 + b2)
= sqrt(2W) b+, and between detections the no-jump evolution damps the
amplitude of n+ by exp(-W n+ t). Both are diagonal or shifts in the +-
basis, so waiting times are drawn exactly from the multi-exponential
survival function.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq
from scipy.special import gammaln, logsumexp

import config
from coherent.evolution import check_undepleted
from errors import DarkStateStall, ZeroProbabilityOutcome
from fock.states import PlusMinusState, SectorSpec
from fock.transforms import cosphi_expectation

logger = logging.getLogger(__name__)

_SEED_LIMIT = 2 ** 64


@dataclass(frozen=True)
class ContinuousParams:
    """Continuous-observation parameters.

    Attributes:
        W: One-atom outcoupling rate V^2 / gamma.
        nu: Number of detections to simulate.
        seed: Master seed (64-bit unsigned).
    """

    W: float = config.DEFAULT_W
    nu: int = config.DEFAULT_NU
    seed: int = config.DEFAULT_SEED

    def __post_init__(self) -> None:
        if not self.W > 0:
            raise ValueError(f"W must be positive, got {self.W}")
        if int(self.nu) != self.nu or self.nu < 1:
            raise ValueError(f"nu must be a positive integer, got {self.nu}")
        if int(self.seed) != self.seed or not 0 <= self.seed < _SEED_LIMIT:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "nu", int(self.nu))
        object.__setattr__(self, "seed", int(self.seed))


def cosphi_label(state: PlusMinusState) -> float:
    """<cos phi> of a conditional state, as reported in detection records.

    Sectors far from balance have eigenvalues beyond 1 at the spectrum edges;
    the reported value stays in [-1, 1].
    """
    return float(np.clip(cosphi_expectation(state), -1.0, 1.0))


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One simulated detection record.

    Attributes:
        taus: Intervals between consecutive detections (the first one from t = 0).
        cosphi_history: <cos phi> right after each detection.
        final_state: Conditional state at the end of the record.
        index: Trajectory index within its ensemble.
        seed: Master seed the trajectory stream was derived from.
        elapsed: Total simulated time (differs from sum(taus) only with a fixed window).
    """

    taus: List[float]
    cosphi_history: List[float]
    final_state: PlusMinusState
    index: int = 0
    seed: int = 0
    elapsed: float = 0.0

    def __post_init__(self) -> None:
        if len(self.taus) != len(self.cosphi_history):
            raise ValueError("taus and cosphi_history must have equal length")
        if any(not tau > 0 for tau in self.taus):
            raise ValueError("waiting times must be positive")
        if any(abs(c) > 1.0 for c in self.cosphi_history):
            raise ValueError("cos(phi) history left [-1, 1]")

    @property
    def mean_tau(self) -> float:
        return float(np.mean(self.taus))

    @property
    def final_cosphi(self) -> float:
        return cosphi_label(self.final_state)


@dataclass(frozen=True)
class JumpOperator:
    """Detection channel of the adiabatically eliminated level 0.

    Attributes:
        rates: No-jump decay rate 2W n+ of each basis state.
        amplitudes: Jump amplitude sqrt(2W n+) for n+ -> n+ - 1.
    """

    rates: np.ndarray
    amplitudes: np.ndarray

    def total_rate(self, state: PlusMinusState) -> float:
        return float(np.dot(self.rates, state.probabilities))

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """Unnormalized b+ jump; the result is one entry shorter."""
        return self.amplitudes[1:] * amps[1:]


def effective_jump_operator(sector: SectorSpec, W: float = config.DEFAULT_W) -> JumpOperator:
    """Jump operator sqrt(W)(b1 + b2) of a sector, in the +- basis."""
    n_plus = np.arange(sector.n_tot + 1, dtype=float)
    return JumpOperator(rates=2.0 * W * n_plus, amplitudes=np.sqrt(2.0 * W * n_plus))


def check_nu(sector: SectorSpec, nu: int) -> None:
    check_undepleted(sector, nu, what="nu")


def log_survival(log_probs: np.ndarray, rates: np.ndarray, t: float) -> float:
    """ln S(t) with S(t) = sum |a|^2 exp(-rate t)."""
    return float(logsumexp(log_probs - rates * t))


def _draw_waiting_time(probs: np.ndarray, rates: np.ndarray, u: float) -> Optional[float]:
    """Solve S(tau) = u; None when u lies below the dark weight S(infinity)."""
    dark = float(probs[rates == 0].sum())
    if u <= dark:
        return None
    with np.errstate(divide="ignore"):
        log_probs = np.log(probs)
    target = math.log(u)
    if log_survival(log_probs, rates, 0.0) <= target:
        return np.finfo(float).tiny
    total = float(np.dot(rates, probs))
    high = 1.0 / total
    while log_survival(log_probs, rates, high) > target:
        high *= 2.0
    return brentq(lambda t: log_survival(log_probs, rates, t) - target, 0.0, high,
                  rtol=config.BRENTQ_RTOL)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Independent PCG64 stream for trajectory `index` of master seed `seed`."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def run_trajectory(sector: SectorSpec, params: ContinuousParams, initial: PlusMinusState,
                   index: int = 0, t_final: Optional[float] = None,
                   enforce_undepleted: bool = True) -> TrajectoryRecord:
    """Simulate one detection record.

    Args:
        sector: Initial sector of levels 1 and 2.
        params: Rate, detection count and master seed.
        initial: Initial state in the +- basis of `sector`.
        index: Trajectory index, selects the random stream.
        t_final: If given, evolve for this fixed time window instead of
            stopping after params.nu detections; every atom may be
            detected, after which the vacuum waits out the window.
        enforce_undepleted: Check nu against min(N1, N2).

    Raises:
        DarkStateStall: If the state stops emitting before nu detections.
        ValueError: If nu exceeds the atoms in the sector.
    """
    if initial.sector != sector:
        raise ValueError("initial state belongs to a different sector")
    if enforce_undepleted:
        check_nu(sector, params.nu)
    rng = trajectory_rng(params.seed, index)
    if t_final is None and params.nu > sector.n_tot:
        raise ValueError(f"cannot detect {params.nu} atoms from a sector of {sector.n_tot}")

    amps = np.array(initial.amps)
    current = sector
    taus: List[float] = []
    history: List[float] = []
    elapsed = 0.0

    while True:
        jump = effective_jump_operator(current, params.W)
        probs = np.abs(amps) ** 2
        if t_final is None:
            if len(taus) == params.nu:
                break
            if float(np.dot(jump.rates, probs)) < config.DARK_RATE:
                raise DarkStateStall(f"trajectory {index} went dark after {len(taus)} detections")
        remaining = None if t_final is None else t_final - elapsed
        tau = _draw_waiting_time(probs, jump.rates, rng.random())

        # the vacuum and every other dark outcome sit out the rest of the window
        if remaining is not None and (tau is None or tau >= remaining):
            amps = amps * np.exp(-0.5 * jump.rates * remaining)
            amps = amps / np.linalg.norm(amps)
            elapsed = t_final
            break
        if tau is None:
            raise DarkStateStall(f"trajectory {index} drew a dark outcome after {len(taus)} detections")

        amps = jump.apply(amps * np.exp(-0.5 * jump.rates * tau))
        amps = amps / np.linalg.norm(amps)
        elapsed += tau
        current = sector.depleted(len(taus) + 1)
        taus.append(float(tau))
        history.append(cosphi_label(PlusMinusState(current, amps)))
        logger.debug(f"Trajectory {index}: jump {len(taus)} after tau={tau:.6g}, <cos phi>={history[-1]:.6g}")

    final_state = PlusMinusState(current, amps)
    return TrajectoryRecord(taus, history, final_state, index=index, seed=params.seed, elapsed=elapsed)


def record_state(initial: PlusMinusState, nu: int, total_time: float,
                 W: float = config.DEFAULT_W) -> PlusMinusState:
    """State after nu detections spread over a total time T.

    Jumps and no-jump factors commute up to scalars, so the conditional state
    depends on the record only through nu and T: b+^nu exp(-W n+ T) psi0.

    Raises:
        ZeroProbabilityOutcome: If the record has zero probability.
    """
    if nu < 0 or nu > initial.sector.n_tot:
        raise ValueError(f"nu must lie in [0, {initial.sector.n_tot}], got {nu}")
    n_plus = np.arange(nu, initial.sector.n_tot + 1)
    source = np.array(initial.amps)[nu:]
    with np.errstate(divide="ignore"):
        # b+^nu |n> = sqrt(n! / (n - nu)!) |n - nu>
        logs = (np.log(np.abs(source)) - W * n_plus * total_time
                + 0.5 * (gammaln(n_plus + 1.0) - gammaln(n_plus - nu + 1.0)))
    if not np.any(np.isfinite(logs)):
        raise ZeroProbabilityOutcome(f"record with nu={nu}, T={total_time:.6g} has zero probability")
    phases = np.exp(1j * np.angle(source))
    shifted = phases * np.exp(logs - np.max(logs))
    return PlusMinusState(initial.sector.depleted(nu), shifted / np.linalg.norm(shifted))


def conditioned_final_state(initial: PlusMinusState, nu: int, target_cos: float,
                            W: float = config.DEFAULT_W) -> Tuple[PlusMinusState, float]:
    """Final state of a nu-detection record whose <cos phi> equals target_cos.

    <cos phi> of record_state decreases with T, so T is found by bracketing.

    Returns:
        Tuple of (state, total_time).

    Raises:
        ZeroProbabilityOutcome: If no T reaches the target.
    """
    def offset(total_time: float) -> float:
        return cosphi_expectation(record_state(initial, nu, total_time, W)) - target_cos

    if offset(0.0) < 0:
        raise ZeroProbabilityOutcome(f"<cos phi> = {target_cos} lies above every record with nu={nu}")
    high = 1.0 / (W * initial.sector.n_tot)
    for _ in range(200):
        if offset(high) < 0:
            break
        high *= 2.0
    else:
        raise ZeroProbabilityOutcome(f"<cos phi> = {target_cos} lies below every record with nu={nu}")
    total_time = brentq(offset, 0.0, high, rtol=config.BRENTQ_RTOL)
    return record_state(initial, nu, total_time, W), float(total_time)
