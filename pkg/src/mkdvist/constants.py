"""Shared numeric constants and centralized defaults.

Every tunable referenced in the module specs lives here so that the CLI can
dump a single authoritative default set (--print-defaults).
"""
import numpy as np

# Pauli matrices
SIGMA1 = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA2 = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
SIGMA3 = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
I2 = np.eye(2, dtype=complex)

# Branch-point exclusion radius, as a multiple of q_plus
EPS_BP_FACTOR = 1e-6

# Denominator floor for reflection coefficients rho = s21/s11, etc.
RHO_DENOM_FLOOR = 1e-12

# |rho| floor below which 1/rho jump entries are flagged
RHO_INV_FLOOR = 1e-8

# Potential tail tolerance: |q(+-L) - q_pm| must be below this
TAU_TAIL = 1e-10

# Jost ODE accuracy target (spectral-equation residual)
ODE_TOL = 1e-10

# Matching abscissa for Wronskians
X_MATCH = 0.0

# Real-line / ray truncation for RH contours, as a multiple of q_minus
K_INF_FACTOR = 12.0

# Discrete-spectrum search box half-width, as a multiple of q_minus
K_SEARCH_FACTOR = 3.0

# Root tolerance for discrete eigenvalues
ROOT_TOL = 1e-10

# Default smoothed-step profile width and half-domain
PROFILE_WIDTH = 1.2
PROFILE_HALF_DOMAIN = 15.0

# Default Jost integrator step
JOST_STEP = 0.01

# RH solver: per-panel oscillation / growth budgets driving adaptive splits
PHASE_BUDGET_RE = 18.0
PHASE_BUDGET_IM = 2.5

# RH solver: resolved-contour extension factor beyond the data support and
# outer cutoff for the oscillatory parametrix tail moment
K_TAIL_FACTOR = 2.5
RATIO_TAIL_KMAX = 1200.0

# Target truncation error of the first-order tail closure; sets how far the
# collocated contour extends near the stationary regime (small |x|, |t|)
RATIO_TAIL_TARGET = 1.5e-4

# RH solver: a-posteriori panel split threshold (trailing Legendre
# coefficients of the jump deviation, relative to its leading scale)
PANEL_SPLIT_TOL = 1e-4

# RH solver: Chebyshev samples per data piece, panel/node guards
N_DATA_SAMPLES = 48
MAX_PANELS = 1000
COND_MAX = 1e12

# Sigma0 segments shorter than this fraction of q_minus are dropped
# (near-symmetric collapse; contribution is O(length))
SIGMA0_DROP_FRACTION = 1e-4

# t != 0 lens deformation (ratio method): exponent budget defining the slab
# half-width 2|t| (|Im f_-| + |Im f_+|) <= LENS_BUDGET on the boundary
# curves, the width cap, the half-width of the vertical funnel arms that
# enclose the focusing cuts, the extra clearance of the arm lid above the
# top branch point, and the largest boundary-jump magnitude accepted before
# declaring the (x, t) point outside the supported deformation region
LENS_BUDGET = 3.0
LENS_WIDTH_MAX = 0.3
LENS_ARM_HALFWIDTH = 0.8
LENS_LID_MARGIN = 0.6
LENS_JUMP_MAX = 1e4

# Scalar outer-line tail (t != 0): target absolute error of the moment
# closure; sets how far the collocated scalar segments extend
SCALAR_TAIL_MOMENT_TOL = 5e-5

DEFAULTS = {
    "regime": "focusing",
    "q_minus": 2.0,
    "q_plus": 1.0,
    "profile": {"name": "tanh_step", "width": PROFILE_WIDTH,
                "half_domain": PROFILE_HALF_DOMAIN, "step": JOST_STEP},
    "x_grid": {"min": -20.0, "max": 20.0, "n": 161},
    "t_list": [0.0],
    "contour": {"k_inf_factor": K_INF_FACTOR, "nodes_per_panel": 12},
    "tolerances": {"ode": ODE_TOL, "rhp_residual": 1e-6, "root": ROOT_TOL,
                   "tau_tail": TAU_TAIL},
    "eps_bp_factor": EPS_BP_FACTOR,
    "out_dir": "out",
    "verbose": False,
}
