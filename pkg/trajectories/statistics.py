"""
Waiting-Time Statistics Module

Checks an ensemble of detection records against the mean-interval law
tau_bar = 1 / (W (N_tot + 2 sqrt(N1 N2) <cos phi>)), which is
[2WN(1 + <cos phi>)]^-1 for N1 = N2 = N, and against exponential
(Poissonian) interval statistics.
"""

import logging
from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
from scipy import stats

from fock.states import SectorSpec
from trajectories.qmc import TrajectoryRecord

logger = logging.getLogger(__name__)

KS_P_THRESHOLD = 0.01


@dataclass(frozen=True)
class EnsembleSummary:
    """Per-trajectory pairs and the checks derived from them.

    Attributes:
        mean_taus: tau_bar of each record.
        final_cosphi: <cos phi> after the last detection of each record.
        predicted_taus: Mean-interval law evaluated at final_cosphi.
        residual_rms: RMS of (tau_bar - predicted) / predicted.
        fitted_prefactor: a minimizing sum((tau_bar / predicted - a)^2), 1 for the exact law.
        ks_statistic: KS distance of pooled tau / tau_bar from the unit exponential.
        ks_pvalue: p-value of the pooled test.
        trajectory_pvalues: p-value of the same test for each record alone.
    """

    mean_taus: np.ndarray
    final_cosphi: np.ndarray
    predicted_taus: np.ndarray
    residual_rms: float
    fitted_prefactor: float
    ks_statistic: float
    ks_pvalue: float
    trajectory_pvalues: np.ndarray

    @property
    def passing_fraction(self) -> float:
        """Share of records whose own KS test gives p > 0.01."""
        return float(np.mean(self.trajectory_pvalues > KS_P_THRESHOLD))


def predicted_mean_tau(sector: SectorSpec, W: float, cos_phi) -> np.ndarray:
    """Mean waiting time for a given <cos phi> in the initial sector."""
    rate = W * (sector.n_tot + sector.cos_phi_scale * np.asarray(cos_phi, dtype=float))
    with np.errstate(divide="ignore"):
        return 1.0 / rate


def ensemble_statistics(records: Sequence[TrajectoryRecord], sector: SectorSpec, W: float) -> EnsembleSummary:
    """Compare the ensemble with the mean-interval law and the exponential law.

    Args:
        records: At least two detection records of the same sector.
        sector: Initial sector of the records.
        W: One-atom outcoupling rate used to generate them.
    """
    if len(records) < 2:
        raise ValueError(f"ensemble statistics need at least two records, got {len(records)}")
    mean_taus = np.array([record.mean_tau for record in records])
    final_cos = np.array([record.cosphi_history[-1] for record in records])
    predicted = predicted_mean_tau(sector, W, final_cos)

    finite = np.isfinite(predicted)
    relative = (mean_taus[finite] - predicted[finite]) / predicted[finite]
    residual_rms = float(np.sqrt(np.mean(relative ** 2)))
    # fit on relative residuals
    prefactor = float(np.mean(mean_taus[finite] / predicted[finite]))

    normalized: List[np.ndarray] = [np.asarray(record.taus) / record.mean_tau for record in records]
    pooled = stats.kstest(np.concatenate(normalized), stats.expon.cdf)
    pvalues = np.array([stats.kstest(taus, stats.expon.cdf).pvalue for taus in normalized])

    logger.info(f"Ensemble statistics over {len(records)} records: residual RMS={residual_rms:.4f}, "
                f"prefactor={prefactor:.4f}, KS D={pooled.statistic:.4f} (p={pooled.pvalue:.3g})")
    return EnsembleSummary(mean_taus, final_cos, predicted, residual_rms, prefactor,
                           float(pooled.statistic), float(pooled.pvalue), pvalues)


def history_convergence(records: Sequence[TrajectoryRecord], early: int, late: int) -> float:
    """Median |<cos phi>_late - <cos phi>_early| over records (1-based detection counts)."""
    diffs = [abs(record.cosphi_history[late - 1] - record.cosphi_history[early - 1]) for record in records]
    return float(np.median(diffs))
