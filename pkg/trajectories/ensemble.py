"""
Trajectory Ensemble Module

Runs independent trajectories, serially or on a process pool, and merges
them by index so the output does not depend on the worker count.
"""

import concurrent.futures as cf
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import config
from errors import DarkStateStall
from fock.states import PlusMinusState, SectorSpec
from fock.transforms import fock_in_plusminus
from trajectories.qmc import ContinuousParams, TrajectoryRecord, check_nu, run_trajectory

logger = logging.getLogger(__name__)


@dataclass
class EnsembleResult:
    """Completed trajectories in index order plus the indices that went dark."""

    records: List[TrajectoryRecord]
    stalled: List[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.records) + len(self.stalled)


def _worker_one(args: Tuple) -> Tuple[int, Optional[TrajectoryRecord]]:
    sector, params, initial, index, t_final = args
    try:
        return index, run_trajectory(sector, params, initial, index=index, t_final=t_final,
                                     enforce_undepleted=False)
    except DarkStateStall:
        return index, None


class TrajectoryEnsemble:
    """Seeded ensemble of detection records for one sector.

    Trajectory i draws from the stream SeedSequence(seed, spawn_key=(i,)),
    so any subset of indices can be reproduced on its own.
    """

    def __init__(self,
                 sector: SectorSpec,
                 params: ContinuousParams,
                 initial: Optional[PlusMinusState] = None,
                 workers: int = config.WORKERS) -> None:
        """Initialize the ensemble.

        Args:
            sector: Initial sector of levels 1 and 2.
            params: Rate, detection count and master seed.
            initial: Initial state (default: the Fock state |N1, N2>).
            workers: Processes to use; 1 runs in the calling process.
        """
        if workers < 1:
            raise ValueError(f"workers must be at least 1, got {workers}")
        self.sector = sector
        self.params = params
        self.initial = initial if initial is not None else fock_in_plusminus(sector)
        self.workers = int(workers)
        logger.debug(f"TrajectoryEnsemble initialized: sector=({sector.n1}, {sector.n2}), "
                     f"W={params.W}, nu={params.nu}, seed={params.seed}, workers={workers}")

    def run(self, size: int, t_final: Optional[float] = None, start: int = 0) -> EnsembleResult:
        """Run trajectories start .. start + size - 1.

        Stalled trajectories are logged and excluded from the records.
        """
        if size < 1:
            raise ValueError(f"ensemble size must be at least 1, got {size}")
        if t_final is None:
            check_nu(self.sector, self.params.nu)
        jobs = [(self.sector, self.params, self.initial, index, t_final)
                for index in range(start, start + size)]

        if self.workers == 1:
            results = [_worker_one(job) for job in jobs]
        else:
            chunksize = max(1, size // (4 * self.workers))
            with cf.ProcessPoolExecutor(max_workers=self.workers) as ex:
                results = list(ex.map(_worker_one, jobs, chunksize=chunksize))

        results.sort(key=lambda item: item[0])
        records = [record for _, record in results if record is not None]
        stalled = [index for index, record in results if record is None]
        if stalled:
            logger.warning(f"{len(stalled)} of {size} trajectories went dark and were dropped: {stalled[:10]}")
        logger.info(f"Ensemble finished: {len(records)} records, {len(stalled)} stalled")
        return EnsembleResult(records, stalled)


def run_ensemble(sector: SectorSpec, params: ContinuousParams, size: int = config.ENSEMBLE_SIZE,
                 workers: int = config.WORKERS, initial: Optional[PlusMinusState] = None,
                 t_final: Optional[float] = None) -> EnsembleResult:
    """Convenience wrapper around TrajectoryEnsemble.run."""
    return TrajectoryEnsemble(sector, params, initial, workers).run(size, t_final=t_final)
