"""
Simulation Runner Module

Orchestrates one run per mode, writes its declared output files and
builds the one-line summary.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List

import numpy as np

import config
from cli.export import OutputWriter
from cli.run_config import RunConfig, validate
from coherent.evolution import CouplingParams, evolve_general_alpha, n0_distribution
from coherent.phase import conditional_phase_distribution, default_phi_grid, gaussian_phase_approx, phase_peaks_resolved
from collapse.kernel import (DetectorKernel, MeasuredFunction, Wavefunction1D, collapse, find_roots,
                             peaks_resolved, two_peak_approximation)
from errors import AcceptanceFailure, ConfigError, DarkStateStall, SimulationError
from fock.states import SectorSpec
from fock.transforms import cosphi_eigenvalues, fock_in_plusminus, plusminus_matrix, plusminus_to_number
from interference.ensemble import (build_ensemble, initial_vs_final_map, poisson_weighted_ensemble,
                                   pooled_differences)
from interference.fringes import fringe_report
from interference.histogram import DetectionModel, smear
from oracle.dense import (DenseFockSpace, dense_conditioned_state, dense_joint_amplitudes, dense_n0_marginal,
                          dense_plusminus_transform, dense_unitary_evolve, phase_aligned_distance, sector_hopping)
from oracle.lindblad import detection_block_mask, fock_density_matrix, lindblad_evolve, trajectory_density_matrix
from trajectories.ensemble import TrajectoryEnsemble
from trajectories.qmc import ContinuousParams, record_state
from trajectories.statistics import ensemble_statistics, predicted_mean_tau

logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    """Outcome of a run: the summary line, the key numbers and the files written."""

    mode: str
    line: str
    metrics: Dict[str, object] = field(default_factory=dict)
    files: List[Path] = field(default_factory=list)


def coupling_params(run: RunConfig, sector: SectorSpec) -> CouplingParams:
    if run.t is not None:
        return CouplingParams(V=run.V, alpha=run.alpha, t=run.t)
    mean = run.mean_n0 if run.mean_n0 is not None else config.DEFAULT_MEAN_N0
    return CouplingParams.for_mean_n0(sector, mean, V=run.V, alpha=run.alpha)


class SimulationRunner:
    """Runs one configured mode end to end."""

    def __init__(self, run: RunConfig) -> None:
        """Initialize the runner.

        Args:
            run: Run configuration; it is validated before anything is simulated.

        Raises:
            ConfigError: If validation reports any problem.
        """
        report = validate(run)
        if not report.ok:
            raise ConfigError("invalid run configuration:\n" + report.render())
        self.run_config = run
        self.writer = OutputWriter(run.output_dir, run.to_dict(), run.output_format)
        self._modes = {
            "coherent": self._run_coherent,
            "trajectories": self._run_trajectories,
            "interference": self._run_interference,
            "oracle-check": self._run_oracle_check,
            "collapse-demo": self._run_collapse_demo,
        }
        logger.debug(f"SimulationRunner initialized: mode={run.mode}, seed={run.seed}, out={run.output_dir}")

    def run(self) -> RunSummary:
        """Run the configured mode.

        Raises:
            SimulationError: Any model or acceptance failure, logged with context.
        """
        mode = self.run_config.mode
        logger.info(f"Running mode {mode}")
        try:
            summary = self._modes[mode]()
        except SimulationError as e:
            logger.error(f"Mode {mode} failed ({e.category}): {e}", exc_info=True)
            raise
        summary.files = list(self.writer.written)
        logger.info(f"Mode {mode} finished: {summary.line}")
        return summary

    # ------------------------------------------------------------------ coherent
    def _run_coherent(self) -> RunSummary:
        run = self.run_config
        sector = SectorSpec(run.n1, run.n2)
        params = coupling_params(run, sector)
        state = evolve_general_alpha(sector, params, n0_max=run.n0_max)
        histogram = n0_distribution(state)
        self.writer.write_histogram(config.N0_DISTRIBUTION_FILE, histogram)

        mean, variance = histogram.mean(), histogram.variance()
        n0_observed = min(max(1, int(round(mean))), state.n0_max)
        phi_grid = default_phi_grid(run.phi_grid_size)
        exact = conditional_phase_distribution(state, n0_observed, phi_grid)
        approx = gaussian_phase_approx(sector, params, n0_observed, phi_grid)
        self.writer.write_table(config.PHASE_DISTRIBUTION_FILE, ["phi", "exact", "gaussian"],
                                np.column_stack([phi_grid, exact.phi_density, approx.phi_density]))

        fano = variance / mean if mean > 0 else math.nan
        metrics = {"mean": mean, "variance": variance, "fano": fano, "n0_observed": n0_observed,
                   "phase_total_variation": exact.total_variation(approx),
                   "phase_peaks_resolved": phase_peaks_resolved(exact)}
        line = f"mode=coherent N1={run.n1} N2={run.n2} mean={mean:.6g} variance={variance:.6g} fano={fano:.6g}"
        return RunSummary("coherent", line, metrics)

    # -------------------------------------------------------------- trajectories
    def _run_trajectories(self) -> RunSummary:
        run = self.run_config
        sector = SectorSpec(run.n1, run.n2)
        params = ContinuousParams(W=run.W, nu=run.nu, seed=run.seed)
        result = TrajectoryEnsemble(sector, params, workers=run.workers).run(run.ensemble_size)
        records = result.records
        if len(records) < 2:
            raise DarkStateStall(f"only {len(records)} of {result.size} trajectories completed")

        self.writer.write_jsonl(config.TRAJECTORIES_FILE, (
            {"index": r.index, "seed": r.seed, "taus": r.taus, "cosphi_history": r.cosphi_history}
            for r in records))
        summary = ensemble_statistics(records, sector, run.W)
        indices = np.array([r.index for r in records], dtype=float)
        self.writer.write_table(config.TAU_VS_COSPHI_FILE, ["index", "final_cosphi", "mean_tau", "predicted_tau"],
                                np.column_stack([indices, summary.final_cosphi, summary.mean_taus,
                                                 summary.predicted_taus]),
                                formats=["%d"] + [config.FLOAT_FORMAT] * 3)
        history_rows = [(r.index, k + 1, c) for r in records for k, c in enumerate(r.cosphi_history)]
        self.writer.write_table(config.COSPHI_HISTORIES_FILE, ["index", "detection", "cosphi"],
                                np.array(history_rows, dtype=float),
                                formats=["%d", "%d", config.FLOAT_FORMAT])

        tau_bar = float(np.mean(summary.mean_taus))
        metrics = {"records": len(records), "stalled": len(result.stalled), "tau_bar": tau_bar,
                   "tau_bar_at_zero": float(predicted_mean_tau(sector, run.W, 0.0)),
                   "residual_rms": summary.residual_rms, "fitted_prefactor": summary.fitted_prefactor,
                   "ks_statistic": summary.ks_statistic, "ks_pvalue": summary.ks_pvalue,
                   "ks_passing_fraction": summary.passing_fraction}
        line = (f"mode=trajectories records={len(records)} tau_bar={tau_bar:.6g} "
                f"residual_rms={summary.residual_rms:.4f} ks_p={summary.ks_pvalue:.4g}")
        return RunSummary("trajectories", line, metrics)

    # -------------------------------------------------------------- interference
    def _run_interference(self) -> RunSummary:
        run = self.run_config
        mean1, mean2 = run.initial_means
        model = DetectionModel(run.sigma, run.initial_number_model, mean1, mean2)
        if run.conditioning == "exact":
            members = poisson_weighted_ensemble(model, run.nu, run.target_cosphi, W=run.W)
        else:
            members = build_ensemble(model, run.nu, run.target_cosphi, size=run.ensemble_size, seed=run.seed,
                                     conditioning="rejection", W=run.W)
        centered, raw = pooled_differences(members)
        centered_report = fringe_report(smear(centered, model.sigma))
        raw_report = fringe_report(smear(raw, model.sigma))
        self.writer.write_histogram(config.CENTERED_DISTRIBUTION_FILE, centered_report.histogram)

        n_mean = int(round(0.5 * (mean1 + mean2)))
        size = 1 if run.conditioning == "exact" else run.ensemble_size
        final_map = initial_vs_final_map(n_mean, run.nu, run.target_cosphi, config.MAP_DELTA_N_RANGE, W=run.W,
                                         conditioning=run.conditioning, size=size, seed=run.seed)
        columns = ["initial_delta_n"] + [str(int(v)) for v in final_map.final]
        self.writer.write_table(config.INITIAL_FINAL_MAP_FILE, columns,
                                np.column_stack([final_map.initial, final_map.probabilities]),
                                formats=["%d"] + [config.FLOAT_FORMAT] * final_map.final.size)

        self.writer.write_json(config.FRINGE_REPORT_FILE, {
            "centered": centered_report.to_dict(),
            "uncentered": raw_report.to_dict(),
            "map_centroids": final_map.centroids().tolist(),
            "map_initial": final_map.initial.tolist(),
        })
        metrics = {"visibility": centered_report.visibility, "peak_spacing": centered_report.peak_spacing,
                   "uncentered_visibility": raw_report.visibility}
        line = (f"mode=interference nu={run.nu} sigma={run.sigma:g} visibility={centered_report.visibility:.4f} "
                f"spacing={centered_report.peak_spacing}")
        return RunSummary("interference", line, metrics)

    # -------------------------------------------------------------- oracle-check
    def _run_oracle_check(self) -> RunSummary:
        run = self.run_config
        checks = []

        def record(name: str, error: float, tolerance: float) -> None:
            checks.append({"name": name, "error": float(error), "tolerance": float(tolerance),
                           "passed": bool(error <= tolerance)})

        n = config.ORACLE_COHERENT_N
        for n_tot in range(1, 4 * n + 1):
            error = np.max(np.abs(plusminus_matrix(n_tot) - dense_plusminus_transform(n_tot)))
            record(f"plusminus_transform n_tot={n_tot}", error, config.ORACLE_AMPLITUDE_TOL)
        for atoms in range(1, 2 * n + 1):
            sector = SectorSpec(atoms, atoms)
            hopping = sector_hopping(sector.n_tot)
            dense = np.linalg.eigvalsh((hopping + hopping.T) / sector.cos_phi_scale)
            error = np.max(np.abs(np.sort(cosphi_eigenvalues(sector)) - dense))
            record(f"cosphi_spectrum N={atoms}", error, config.ORACLE_SPECTRUM_TOL)

        sector = SectorSpec(n, n)
        for alpha in config.ORACLE_ALPHAS:
            params = CouplingParams(V=1.0, alpha=alpha, t=config.ORACLE_VT)
            joint = evolve_general_alpha(sector, params, n0_max=sector.n_tot, enforce_undepleted=False)
            space, dense_state = dense_unitary_evolve(n, n, params.v1, params.v2, params.t)
            dense_amps = dense_joint_amplitudes(space, dense_state, sector.n_tot)
            record(f"coherent_amplitudes alpha={alpha:.6g}", phase_aligned_distance(joint.amps, dense_amps),
                   config.ORACLE_AMPLITUDE_TOL)
            marginal = dense_n0_marginal(space, dense_state)
            record(f"n0_marginal alpha={alpha:.6g}", np.max(np.abs(joint.n0_probabilities - marginal)),
                   config.ORACLE_AMPLITUDE_TOL)

        conditioned = record_state(fock_in_plusminus(sector), config.ORACLE_RECORD_NU, config.ORACLE_RECORD_TIME, run.W)
        dense_conditioned = dense_conditioned_state(n, n, config.ORACLE_RECORD_NU, run.W, config.ORACLE_RECORD_TIME)
        record("record_state", phase_aligned_distance(plusminus_to_number(conditioned).amps, dense_conditioned),
               config.ORACLE_AMPLITUDE_TOL)

        checks.append(self._lindblad_check())
        self.writer.write_json(config.ORACLE_REPORT_FILE, {"checks": checks})

        failed = [c["name"] for c in checks if not c["passed"]]
        line = f"mode=oracle-check checks={len(checks)} failed={len(failed)}"
        if failed:
            raise AcceptanceFailure(f"oracle comparisons failed: {', '.join(failed)}")
        return RunSummary("oracle-check", line, {"checks": len(checks)})

    def _lindblad_check(self) -> Dict[str, object]:
        run = self.run_config
        atoms = config.ORACLE_LINDBLAD_N
        sector = SectorSpec(atoms, atoms)
        t_final = config.ORACLE_LINDBLAD_WT / run.W
        space = DenseFockSpace((sector.n_tot, sector.n_tot))
        rho = lindblad_evolve(fock_density_matrix(space, atoms, atoms), run.W, t_final, space)

        params = ContinuousParams(W=run.W, nu=1, seed=run.seed)
        result = TrajectoryEnsemble(sector, params, workers=run.workers).run(config.ORACLE_TRAJECTORIES,
                                                                             t_final=t_final)
        averaged = trajectory_density_matrix((r.final_state for r in result.records), space)
        mask = detection_block_mask(space, sector.n_tot, config.ORACLE_LINDBLAD_MAX_DETECTIONS)
        error = averaged.worst_deviation(rho, mask)
        passed = not result.stalled and averaged.agrees_with(rho, config.ORACLE_LINDBLAD_SIGMAS, mask)
        logger.info(f"Trajectory average vs master equation: worst element {error:.3g} s.e. over "
                    f"{averaged.samples} trajectories")
        return {"name": f"lindblad N={atoms} Wt={config.ORACLE_LINDBLAD_WT:g} "
                        f"nu<={config.ORACLE_LINDBLAD_MAX_DETECTIONS}", "error": error,
                "tolerance": config.ORACLE_LINDBLAD_SIGMAS, "passed": bool(passed)}

    # ------------------------------------------------------------- collapse-demo
    def _run_collapse_demo(self) -> RunSummary:
        run = self.run_config
        grid = np.linspace(-math.pi, math.pi, run.grid_points)
        psi_in = Wavefunction1D.flat(grid)
        f = MeasuredFunction.from_callable(grid, np.cos, lambda x: -np.sin(x))
        g = DetectorKernel(center=run.collapse_outcome, width=run.kernel_width)

        psi_out = collapse(psi_in, f, g)
        roots = find_roots(f, g.center, grid)
        approx = two_peak_approximation(psi_in, f, g, roots)
        resolved = peaks_resolved(psi_out, g, roots, f) if len(roots) >= 2 else False
        self.writer.write_table(config.COLLAPSE_DEMO_FILE, ["x", "psi_in", "psi_out", "psi_two_peak"],
                                np.column_stack([grid, psi_in.density, psi_out.density, approx.density]))

        distance = psi_out.l2_distance(approx)
        metrics = {"roots": roots, "resolved": resolved, "l2_distance": distance}
        line = (f"mode=collapse-demo roots={len(roots)} resolved={resolved} "
                f"l2_distance={distance:.4g}")
        return RunSummary("collapse-demo", line, metrics)


def run(run_config: RunConfig) -> RunSummary:
    """Validate, run and export one configuration."""
    return SimulationRunner(run_config).run()
