"""
Error Hierarchy

All failures raised by the simulator. The CLI maps the three top-level
categories to exit codes (config 2, model 3, acceptance 4).
"""


class SimulationError(Exception):
    """Base class for every simulator error."""

    category = "simulation"
    exit_code = 1


class ConfigError(SimulationError, ValueError):
    """Run configuration is malformed or violates a precondition."""

    category = "config"
    exit_code = 2


class ModelError(SimulationError):
    """A model operation could not be carried out for the given inputs."""

    category = "model"
    exit_code = 3


class AcceptanceFailure(SimulationError):
    """A built-in self-check did not reproduce its expected value."""

    category = "acceptance"
    exit_code = 4


# ============================================================================
# COLLAPSE KERNEL
# ============================================================================
class ZeroOverlap(ModelError):
    """Measurement outcome is incompatible with the input state."""

    category = "zero_overlap"


class KernelUnderresolved(ModelError):
    """Detector kernel is not wider than two grid spacings."""

    category = "kernel_underresolved"


class DegenerateRoot(ModelError):
    """Root of f(x) = f0 has vanishing slope; linearization is invalid."""

    category = "degenerate_root"


class GridTooSmall(ModelError):
    """Output amplitude does not vanish at the grid boundary."""

    category = "grid_too_small"


# ============================================================================
# COHERENT REGIME
# ============================================================================
class UndepletedAssumptionViolated(ModelError):
    """Outcoupled atom number is not small against the trapped populations."""

    category = "undepleted_assumption_violated"


class TruncationError(ModelError):
    """Probability in the last retained n0 slice exceeds the tail bound."""

    category = "truncation"


class ZeroProbabilityOutcome(ModelError):
    """Requested detector outcome has (numerically) zero probability."""

    category = "zero_probability_outcome"


class FormulaScopeError(ModelError):
    """Closed-form expression requested outside the case it was derived for."""

    category = "formula_scope"


# ============================================================================
# TRAJECTORIES / ORACLE
# ============================================================================
class DarkStateStall(ModelError):
    """Trajectory reached the dark state before all detections happened."""

    category = "dark_state_stall"


class DimensionCap(ModelError):
    """Dense reference computation would exceed the dimension cap."""

    category = "dimension_cap"


class StepControlFailure(ModelError):
    """Adaptive integrator did not reach the requested final time."""

    category = "step_control_failure"
