"""
Interference Ensemble Module

Ensembles of post-measurement states tagged with their initial atom
numbers, and the number-difference statistics pooled over them: the
centered difference Delta N_12 = N1^f - N2^f - (N1 - N2), the raw
difference Delta N^f, and the map of final against initial difference.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, List, Sequence, Tuple

import numpy as np
from scipy import stats

import config
from errors import DarkStateStall, ZeroProbabilityOutcome
from fock.histogram import CountHistogram
from fock.states import PlusMinusState, SectorSpec
from fock.transforms import fock_in_plusminus
from interference.fringes import FringeReport, fringe_report
from interference.histogram import DetectionModel, final_number_distribution, smear
from trajectories.qmc import ContinuousParams, conditioned_final_state, run_trajectory

logger = logging.getLogger(__name__)

CONDITIONING_MODES = ("exact", "rejection")


@dataclass(frozen=True, eq=False)
class EnsembleMember:
    """Post-measurement state with the initial numbers it started from."""

    n1: int
    n2: int
    final_state: PlusMinusState
    weight: float = 1.0


@lru_cache(maxsize=4096)
def _conditioned_state(n1: int, n2: int, nu: int, target_cos: float, W: float) -> PlusMinusState:
    sector = SectorSpec(n1, n2)
    state, _ = conditioned_final_state(fock_in_plusminus(sector), nu, target_cos, W)
    return state


def _rejection_state(n1: int, n2: int, nu: int, target_cos: float, W: float, seed: int, first_index: int,
                     window: float, max_tries: int) -> Tuple[PlusMinusState, int]:
    """Run trajectories until the final <cos phi> falls inside the window.

    A trajectory that goes dark before nu detections counts as a failed try.
    """
    sector = SectorSpec(n1, n2)
    params = ContinuousParams(W=W, nu=nu, seed=seed)
    initial = fock_in_plusminus(sector)
    for attempt in range(max_tries):
        try:
            record = run_trajectory(sector, params, initial, index=first_index + attempt)
        except DarkStateStall:
            continue
        if abs(record.final_cosphi - target_cos) <= window:
            return record.final_state, attempt + 1
    raise ZeroProbabilityOutcome(f"no trajectory of ({n1}, {n2}) reached <cos phi> = {target_cos} "
                                 f"+- {window} in {max_tries} tries")


def _initial_numbers(model: DetectionModel, size: int, rng: np.random.Generator) -> List[Tuple[int, int]]:
    if model.initial_number_model == "fixed":
        return [(int(model.mean1), int(model.mean2))] * size
    n1 = rng.poisson(model.mean1, size)
    n2 = rng.poisson(model.mean2, size)
    return [(int(a), int(b)) for a, b in zip(n1, n2)]


def build_ensemble(model: DetectionModel, nu: int, target_cos: float = config.DEFAULT_TARGET_COSPHI,
                   size: int = config.INTERFERENCE_ENSEMBLE_SIZE, seed: int = config.DEFAULT_SEED,
                   conditioning: str = "exact", W: float = config.DEFAULT_W,
                   window: float = config.CONDITIONING_WINDOW,
                   max_tries: int = config.REJECTION_MAX_TRIES) -> Iterator[EnsembleMember]:
    """Yield `size` members with sampled initial numbers, conditioned on <cos phi>.

    Args:
        model: Initial-number model (fixed or Poissonian).
        nu: Number of detected atoms.
        target_cos: Conditioning value of <cos phi>.
        size: Number of members.
        seed: Seed of the initial-number draw and of the trajectory streams.
        conditioning: "exact" picks the record time that hits target_cos;
            "rejection" keeps simulated records within +-window of it.
    """
    if conditioning not in CONDITIONING_MODES:
        raise ValueError(f"conditioning must be one of {CONDITIONING_MODES}, got {conditioning!r}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    next_index = 0
    for n1, n2 in _initial_numbers(model, size, rng):
        if conditioning == "exact":
            state = _conditioned_state(n1, n2, nu, float(target_cos), float(W))
        else:
            state, used = _rejection_state(n1, n2, nu, target_cos, W, seed, next_index, window, max_tries)
            next_index += used
        yield EnsembleMember(n1, n2, state)


def poisson_weighted_ensemble(model: DetectionModel, nu: int, target_cos: float = config.DEFAULT_TARGET_COSPHI,
                              W: float = config.DEFAULT_W,
                              tail_sigmas: float = config.POISSON_GRID_SIGMAS) -> Iterator[EnsembleMember]:
    """Members on a grid of initial numbers weighted by their Poisson probabilities.

    Deterministic counterpart of build_ensemble with exact conditioning; members
    are yielded in order of total atom number so transform matrices are reused.
    """
    if model.initial_number_model == "fixed":
        n1, n2 = int(model.mean1), int(model.mean2)
        yield EnsembleMember(n1, n2, _conditioned_state(n1, n2, nu, float(target_cos), float(W)))
        return
    grids = []
    for mean in (model.mean1, model.mean2):
        half = tail_sigmas * math.sqrt(mean)
        grid = np.arange(max(1, int(math.floor(mean - half))), int(math.ceil(mean + half)) + 1)
        grids.append((grid, stats.poisson.pmf(grid, mean)))
    (grid1, pmf1), (grid2, pmf2) = grids
    pairs = sorted(((int(a), int(b)) for a in grid1 for b in grid2), key=lambda p: (p[0] + p[1], p[0]))
    weight1 = dict(zip(grid1.tolist(), pmf1))
    weight2 = dict(zip(grid2.tolist(), pmf2))
    for n1, n2 in pairs:
        state = conditioned_final_state(fock_in_plusminus(SectorSpec(n1, n2)), nu, target_cos, W)[0]
        yield EnsembleMember(n1, n2, state, weight=float(weight1[n1] * weight2[n2]))


class _Accumulator:
    """Weighted sum of histograms on a growing integer window."""

    def __init__(self) -> None:
        self.origin = 0
        self.weights = np.zeros(0)

    def add(self, values: np.ndarray, probabilities: np.ndarray, weight: float) -> None:
        low, high = int(values[0]), int(values[-1])
        if self.weights.size == 0:
            self.origin, self.weights = low, np.zeros(high - low + 1)
        if low < self.origin:
            self.weights = np.concatenate([np.zeros(self.origin - low), self.weights])
            self.origin = low
        top = self.origin + self.weights.size - 1
        if high > top:
            self.weights = np.concatenate([self.weights, np.zeros(high - top)])
        np.add.at(self.weights, values - self.origin, weight * probabilities)

    def histogram(self, label: str, metadata: dict) -> CountHistogram:
        values = self.origin + np.arange(self.weights.size)
        keep = self.weights > 0
        return CountHistogram.from_weights(values[keep], self.weights[keep], label=label, metadata=metadata)


def pooled_differences(ensemble: Iterable[EnsembleMember]) -> Tuple[CountHistogram, CountHistogram]:
    """Pool Delta N_12 and the raw Delta N^f over the ensemble in one pass.

    Returns:
        Tuple of (centered, uncentered) histograms, unsmeared.
    """
    centered, raw = _Accumulator(), _Accumulator()
    weight_sum = 0.0
    members = 0
    for member in ensemble:
        histogram = final_number_distribution(member.final_state)
        centered.add(histogram.values - (member.n1 - member.n2), histogram.probabilities, member.weight)
        raw.add(histogram.values, histogram.probabilities, member.weight)
        weight_sum += member.weight
        members += 1
    if members == 0:
        raise ValueError("ensemble is empty")
    logger.info(f"Pooled {members} members (total weight {weight_sum:.6g})")
    return (centered.histogram("delta_n12", {"members": members}),
            raw.histogram("delta_n_final", {"members": members}))


def centered_difference_distribution(ensemble: Iterable[EnsembleMember], model: DetectionModel) -> FringeReport:
    """Pool Delta N_12 over the ensemble, smear with the detector error and analyse the fringes."""
    centered, _ = pooled_differences(ensemble)
    return fringe_report(smear(centered, model.sigma))


def uncentered_difference_distribution(ensemble: Iterable[EnsembleMember], model: DetectionModel) -> FringeReport:
    """Same as centered_difference_distribution for the raw Delta N^f."""
    _, raw = pooled_differences(ensemble)
    return fringe_report(smear(raw, model.sigma))


@dataclass(frozen=True, eq=False)
class InitialFinalMap:
    """P(Delta N^f | Delta N) on a common grid of final differences.

    Attributes:
        initial: Initial differences N1 - N2 (rows).
        final: Final differences N1^f - N2^f (columns).
        probabilities: Row-normalized matrix.
    """

    initial: np.ndarray
    final: np.ndarray
    probabilities: np.ndarray

    def row(self, delta_n: int) -> CountHistogram:
        index = int(np.flatnonzero(self.initial == delta_n)[0])
        probs = self.probabilities[index]
        keep = probs > 0
        return CountHistogram.from_weights(self.final[keep], probs[keep], label="delta_n_final")

    def centroids(self) -> np.ndarray:
        return self.probabilities @ self.final


def split_initial(n_mean: int, delta_n: int) -> Tuple[int, int]:
    """Initial numbers around n_mean with N1 - N2 = delta_n."""
    n2 = n_mean - delta_n // 2
    return n2 + delta_n, n2


def initial_vs_final_map(n_mean: int, nu: int, target_cos: float = config.DEFAULT_TARGET_COSPHI,
                         delta_range: Sequence[int] = config.MAP_DELTA_N_RANGE,
                         W: float = config.DEFAULT_W, conditioning: str = "exact",
                         size: int = 1, seed: int = config.DEFAULT_SEED) -> InitialFinalMap:
    """Final-difference distribution for every initial difference in delta_range.

    With exact conditioning each row is the distribution of one conditioned
    state; with rejection each row averages `size` accepted trajectories.
    """
    low, high = delta_range
    initial = np.arange(low, high + 1)
    rows: List[CountHistogram] = []
    for index, delta_n in enumerate(initial):
        n1, n2 = split_initial(n_mean, int(delta_n))
        fixed = DetectionModel(sigma=0.0, initial_number_model="fixed", mean1=n1, mean2=n2)
        members = build_ensemble(fixed, nu, target_cos, size=size, seed=seed + index,
                                 conditioning=conditioning, W=W)
        rows.append(pooled_differences(members)[1])
    final = np.arange(min(r.values[0] for r in rows), max(r.values[-1] for r in rows) + 1)
    matrix = np.zeros((initial.size, final.size))
    for i, row in enumerate(rows):
        matrix[i, row.values - final[0]] = row.probabilities
    logger.info(f"Initial-vs-final map: {initial.size} rows x {final.size} columns")
    return InitialFinalMap(initial, final, matrix)
