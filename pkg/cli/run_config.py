"""
Run Configuration Module

Flat JSON run configuration, its scale profiles, and the pre-run
validation that reports every violated precondition at once.

All physical quantities are dimensionless: pulse times in units of 1/V,
detection times in units of 1/W.
"""

import json
import logging
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import List, Optional

import config
from errors import ConfigError, SimulationError

logger = logging.getLogger(__name__)

MODES = ("coherent", "trajectories", "interference", "oracle-check", "collapse-demo")
OUTPUT_FORMATS = ("csv", "json")
SCALES = ("custom", "desk", "full")


@dataclass(frozen=True)
class RunConfig:
    """One simulator run.

    Either `t` or `mean_n0` fixes the coherent pulse; when both are None the
    default <n0> is used. mean1/mean2 default to n1/n2.
    """

    mode: str = "coherent"
    # physical
    n1: int = config.DEFAULT_N1
    n2: int = config.DEFAULT_N2
    alpha: float = config.DEFAULT_ALPHA
    V: float = config.DEFAULT_V
    t: Optional[float] = None
    mean_n0: Optional[float] = None
    W: float = config.DEFAULT_W
    nu: int = config.DEFAULT_NU
    target_cosphi: float = config.DEFAULT_TARGET_COSPHI
    # detection
    sigma: float = config.DEFAULT_SIGMA
    initial_number_model: str = "poissonian"
    mean1: Optional[float] = None
    mean2: Optional[float] = None
    conditioning: str = "exact"
    # numerical
    n0_max: Optional[int] = None
    phi_grid_size: int = config.PHI_GRID_SIZE
    ensemble_size: int = config.ENSEMBLE_SIZE
    seed: int = config.DEFAULT_SEED
    workers: int = config.WORKERS
    kernel_width: float = config.COLLAPSE_DEMO_WIDTH
    collapse_outcome: float = config.COLLAPSE_DEMO_OUTCOME
    grid_points: int = config.COLLAPSE_DEMO_POINTS
    scale: str = "custom"
    # output
    output_dir: str = config.OUTPUT_DIR
    output_format: str = config.OUTPUT_FORMAT

    @property
    def initial_means(self):
        return (self.mean1 if self.mean1 is not None else float(self.n1),
                self.mean2 if self.mean2 is not None else float(self.n2))

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        """Build a config from a flat dictionary.

        Raises:
            ConfigError: On unknown keys or values of the wrong type.
        """
        if not isinstance(data, dict):
            raise ConfigError("run configuration must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {', '.join(unknown)}")
        values = {}
        for name, value in data.items():
            default = getattr(cls, name, None)
            values[name] = _coerce(name, value, default)
        return cls(**values)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path, "r", encoding="utf-8") as handle:
                data = json.load(handle)
        except FileNotFoundError as e:
            raise ConfigError(f"configuration file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigError(f"configuration file {path} is not valid JSON: {e}") from e
        logger.info(f"Loaded run configuration from {path}")
        return cls.from_dict(data)

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _coerce(name: str, value, default):
    """Check a JSON value against the type of the field default."""
    if value is None:
        return None
    if isinstance(default, bool) or isinstance(value, bool):
        raise ConfigError(f"{name}: booleans are not accepted")
    if isinstance(default, int) or name in ("n0_max",):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        if not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float) or name in ("t", "mean_n0", "mean1", "mean2"):
        if not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if not isinstance(value, str):
        raise ConfigError(f"{name}: expected a string, got {value!r}")
    return value


def nearest_even(value: float) -> int:
    """Nearest even integer, at least 2."""
    return max(2, 2 * int(math.floor(value / 2.0 + 0.5)))


def apply_scale(run: RunConfig, scale: str) -> RunConfig:
    """Apply a scale profile.

    "desk" sets N1 = N2 = 100 and scales nu and <n0> by N/1000 (nu rounded
    to the nearest even number for interference runs); "full" sets
    N1 = N2 = 1000 and the standard nu; "custom" leaves the config unchanged.
    """
    if scale not in SCALES:
        raise ConfigError(f"scale must be one of {SCALES}, got {scale!r}")
    if scale == "custom":
        return run
    if scale == "full":
        n = config.FULL_SCALE_N
        nu = config.DEFAULT_NU_INTERFERENCE if run.mode == "interference" else run.nu
        return replace(run, n1=n, n2=n, mean1=float(n), mean2=float(n), nu=nu, scale=scale)
    n = config.DESK_SCALE_N
    factor = n / config.FULL_SCALE_N
    if run.mode == "interference":
        # odd nu moves the fringe centre off the even-count lattice
        nu = nearest_even(config.DEFAULT_NU_INTERFERENCE * factor)
    else:
        nu = max(1, int(round(run.nu * factor)))
    mean_n0 = run.mean_n0 if run.mean_n0 is not None else config.DEFAULT_MEAN_N0
    return replace(run, n1=n, n2=n, mean1=float(n), mean2=float(n), nu=nu,
                   mean_n0=mean_n0 * factor, t=None, scale=scale)


@dataclass
class ValidationReport:
    """Every violated precondition of a config, one line each."""

    problems: List[str]

    @property
    def ok(self) -> bool:
        return not self.problems

    def render(self) -> str:
        if self.ok:
            return "configuration OK"
        return "\n".join(f"- {p}" for p in self.problems)


def _check(problems: List[str], action) -> None:
    try:
        action()
    except SimulationError as e:
        problems.append(f"{type(e).__name__}: {e}")
    except ValueError as e:
        problems.append(f"ValueError: {e}")


def validate(run: RunConfig) -> ValidationReport:
    """Re-run every module precondition that the config touches, without simulating."""
    # imported here: the model packages import config only, never the cli
    from coherent.evolution import CouplingParams, check_undepleted, exact_n0_moments
    from fock.states import SectorSpec
    from interference.histogram import DetectionModel
    from trajectories.qmc import ContinuousParams, check_nu

    problems: List[str] = []
    if run.mode not in MODES:
        problems.append(f"ConfigError: mode must be one of {MODES}, got {run.mode!r}")
    if run.output_format not in OUTPUT_FORMATS:
        problems.append(f"ConfigError: output_format must be one of {OUTPUT_FORMATS}, got {run.output_format!r}")
    if run.scale not in SCALES:
        problems.append(f"ConfigError: scale must be one of {SCALES}, got {run.scale!r}")
    if run.conditioning not in ("exact", "rejection"):
        problems.append(f"ConfigError: conditioning must be 'exact' or 'rejection', got {run.conditioning!r}")
    if run.ensemble_size < 2:
        problems.append(f"ConfigError: ensemble_size must be at least 2, got {run.ensemble_size}")
    if run.workers < 1:
        problems.append(f"ConfigError: workers must be at least 1, got {run.workers}")
    if run.phi_grid_size < 2 or run.phi_grid_size % 2:
        problems.append(f"ConfigError: phi_grid_size must be a positive even number, got {run.phi_grid_size}")
    if run.t is not None and run.mean_n0 is not None:
        problems.append("ConfigError: give either t or mean_n0, not both")

    sector = None
    try:
        sector = SectorSpec(run.n1, run.n2)
    except ValueError as e:
        problems.append(f"ValueError: {e}")

    if sector is not None and run.mode == "coherent":
        def coherent_checks():
            if run.t is not None:
                params = CouplingParams(V=run.V, alpha=run.alpha, t=run.t)
            else:
                mean = run.mean_n0 if run.mean_n0 is not None else config.DEFAULT_MEAN_N0
                params = CouplingParams.for_mean_n0(sector, mean, V=run.V, alpha=run.alpha)
            check_undepleted(sector, exact_n0_moments(sector, params)[0])
        _check(problems, coherent_checks)
    if sector is not None and run.mode in ("trajectories", "interference"):
        _check(problems, lambda: ContinuousParams(W=run.W, nu=run.nu, seed=run.seed))
        _check(problems, lambda: check_nu(sector, run.nu))
    if run.mode == "interference":
        mean1, mean2 = run.initial_means
        _check(problems, lambda: DetectionModel(run.sigma, run.initial_number_model, mean1, mean2))
        if not -1.0 <= run.target_cosphi <= 1.0:
            problems.append(f"ConfigError: target_cosphi must lie in [-1, 1], got {run.target_cosphi}")
    if run.mode == "collapse-demo" and not run.kernel_width > 0:
        problems.append(f"ConfigError: kernel_width must be positive, got {run.kernel_width}")

    report = ValidationReport(problems)
    logger.info(f"Validation found {len(problems)} problem(s)")
    return report


def validate_file(path) -> ValidationReport:
    return validate(RunConfig.load(path))
