"""
Configuration file for the MQS measurement simulator
Contains all magic numbers, defaults, tolerances and output names
"""

import math

# ============================================================================
# PHYSICAL DEFAULTS (hbar = 1, dimensionless)
# ============================================================================
DEFAULT_N1 = 1000
DEFAULT_N2 = 1000
DEFAULT_ALPHA = math.pi / 4  # equal Rabi frequencies
DEFAULT_V = 1.0  # composite Rabi frequency; times are in units of 1/V
DEFAULT_MEAN_N0 = 30.0  # <n0> = N sin^2(Vt)
DEFAULT_W = 1.0  # one-atom outcoupling rate V^2/gamma; times in units of 1/W
DEFAULT_NU = 30  # atoms detected one by one
DEFAULT_NU_INTERFERENCE = 26  # outcoupled atoms before the interference readout
DEFAULT_TARGET_COSPHI = 0.0
DEFAULT_SEED = 20240521

# ============================================================================
# VALIDITY CHECKS
# ============================================================================
UNDEPLETED_MAX_RATIO = 0.1  # <n0>/min(N1, N2) and nu/min(N1, N2)
SECTOR_ASYMMETRY_WARN_RATIO = 0.1  # |N1 - N2| / N1 above this only warns

# ============================================================================
# COLLAPSE KERNEL
# ============================================================================
KERNEL_SHAPES = ("gaussian", "boxcar")
NORM_TOL = 1e-10
GRID_UNIFORMITY_TOL = 1e-9  # max relative deviation of any grid step
ZERO_OVERLAP_THRESHOLD = 1e-30
KERNEL_MIN_GRID_SPACINGS = 2.0
DEGENERATE_SLOPE = 1e-9
PEAK_RESOLUTION_RATIO = 0.01  # g[x0 f'(x0)] / g(0) below this means "resolved"
GRID_BOUNDARY_RATIO = 1e-8
COLLAPSE_DEMO_POINTS = 4001
COLLAPSE_DEMO_WIDTH = 0.05
COLLAPSE_DEMO_OUTCOME = 0.5

# ============================================================================
# FOCK ALGEBRA
# ============================================================================
LOG_UNDERFLOW = math.log(1e-300)  # log-magnitudes below this are flushed to zero
STATE_NORM_TOL = 1e-10

# ============================================================================
# COHERENT REGIME
# ============================================================================
N0_TAIL_SIGMAS = 10.0  # n0_max = ceil(<n0> + 10 sqrt(var))
N0_TAIL_BOUND = 1e-10
JOINT_NORM_TOL = 1e-9
ZERO_PROBABILITY = 1e-30
PHI_GRID_SIZE = 2048
PHASE_VALLEY_RATIO = 0.5  # dip between the +-phi maxima, relative to the lower one
PHASE_SUPPORT_FLOOR = 1e-20  # relative weight below which a cos(phi) level counts as unoccupied
SYMMETRIC_ALPHA_TOL = 1e-12
MULTINOMIAL_WARN_N = 60  # general-alpha expansion is O(N^2 n0^2)

# ============================================================================
# TRAJECTORIES
# ============================================================================
BRENTQ_RTOL = 1e-10
DARK_RATE = 1e-300
ENSEMBLE_SIZE = 200
WORKERS = 1

# ============================================================================
# INTERFERENCE / DETECTION
# ============================================================================
DEFAULT_SIGMA = 1.0
CONDITIONING_WINDOW = 0.05  # |<cos phi> - target| accepted by rejection
REJECTION_MAX_TRIES = 200  # tries per accepted member
INTERFERENCE_ENSEMBLE_SIZE = 10_000
GAUSSIAN_KERNEL_HALF_WIDTH_SIGMAS = 6.0
VISIBILITY_PERSISTS = 0.1
VISIBILITY_DISAPPEARS = 0.05
FRINGE_PEAK_MIN_RATIO = 1e-3  # peaks below this fraction of max are ignored
MAP_DELTA_N_RANGE = (-10, 10)
POISSON_GRID_SIGMAS = 3.0  # initial-number grid half-width in Poisson standard deviations

# ============================================================================
# SCALE PROFILES
# ============================================================================
FULL_SCALE_N = 1000
DESK_SCALE_N = 100

# ============================================================================
# ORACLE
# ============================================================================
DENSE_DIMENSION_CAP = 1_000_000
LINDBLAD_RTOL = 1e-10
LINDBLAD_ATOL = 1e-12
LINDBLAD_TRACE_TOL = 1e-9
LINDBLAD_POSITIVITY_TOL = 1e-9
ORACLE_AMPLITUDE_TOL = 1e-10
ORACLE_SPECTRUM_TOL = 1e-12
ORACLE_COHERENT_N = 2  # atoms per level in the three-mode comparison
ORACLE_VT = 0.5
ORACLE_ALPHAS = (math.pi / 4, 0.3)
ORACLE_RECORD_NU = 2
ORACLE_RECORD_TIME = 0.3
ORACLE_LINDBLAD_N = 3
ORACLE_LINDBLAD_WT = 0.3
ORACLE_LINDBLAD_MAX_DETECTIONS = 2  # density-matrix blocks compared
ORACLE_TRAJECTORIES = 100_000
ORACLE_LINDBLAD_SIGMAS = 3.0
ORACLE_LINDBLAD_ATOL = 1e-8  # integration error of the master equation

# ============================================================================
# OUTPUT
# ============================================================================
OUTPUT_DIR = "output"
OUTPUT_FORMAT = "csv"
N0_DISTRIBUTION_FILE = "n0_distribution.csv"
PHASE_DISTRIBUTION_FILE = "phase_distribution.csv"
TRAJECTORIES_FILE = "trajectories.jsonl"
TAU_VS_COSPHI_FILE = "tau_vs_cosphi.csv"
COSPHI_HISTORIES_FILE = "cosphi_histories.csv"
FRINGE_REPORT_FILE = "fringe_report.json"
CENTERED_DISTRIBUTION_FILE = "centered_difference.csv"
INITIAL_FINAL_MAP_FILE = "initial_vs_final_map.csv"
COLLAPSE_DEMO_FILE = "collapse_demo.csv"
ORACLE_REPORT_FILE = "oracle_report.json"
FLOAT_FORMAT = "%.17g"

# ============================================================================
# LOGGING CONFIGURATION
# ============================================================================
LOG_LEVEL = "INFO"  # DEBUG, INFO, WARNING, ERROR, CRITICAL
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_FILE = "mqs_sim.log"
LOG_TO_CONSOLE = True
LOG_TO_FILE = False
