# Matrix JSON keys
MATRIX_DIM = "n"
MATRIX_REAL = "re"
MATRIX_IMAG = "im"

# Precondition tolerances
HERMITIAN_TOL = 1e-12
SYMMETRIC_TOL = 1e-12
COMMUTATOR_TOL = 1e-10
NORMALITY_TOL = 1e-10
NORMALIZATION_TOL = 1e-12
RANK_TOL = 1e-10
SCALAR_IDENTITY_TOL = 1e-9

# Residual contracts
UNITARY_TOL = 1e-12
RECONSTRUCTION_TOL = 1e-10
REP_RECONSTRUCTION_TOL = 1e-9
ALPHA_ASYMMETRY_TOL = 1e-8
Z_MATCH_ANGLE = 1e-6
NEAR_DEPENDENCE_ANGLE = 1e-8
DEGENERACY_TOL = 1e-12

# Named tolerances overridable from the command line (--tol name=value)
TOL_FORMULA = "formula"
TOL_INEQUALITY = "inequality"
TOL_SANDWICH = "sandwich"
TOL_AMPLIFICATION = "amplification"
TOL_RESIDUAL = "residual"
TOLERANCES = {
    TOL_FORMULA: 1e-5,
    TOL_INEQUALITY: 1e-9,
    TOL_SANDWICH: 1e-6,
    TOL_AMPLIFICATION: 1e-6,
    TOL_RESIDUAL: 1e-6,
}

# Optimizer budgets
DEFAULT_SEED = 0
DEFAULT_BUDGET = 64
DEFAULT_TRIALS = 1000
ASCENT_STEPS = 500
ASCENT_STALL_TOL = 1e-15
HAAGERUP_STARTS_PER_BUDGET = 16
HAAGERUP_SMOOTHING = (1e-2, 1e-4, 1e-6)
HAAGERUP_NM_RESTARTS = 3
COND_BARRIER = 1e6

# Variational formulas
LOG_GRID_POINTS = 1000
LOG_GRID_BOUNDS = (1e-6, 1e6)
P_MAX = 50.0
P_GRID_POINTS = 120
THETA_GRID_POINTS = 120
P_MAX_DOUBLINGS = 2

# Geometry
HYPERBOLA_GRID = 10_000
ELLIPSE_REPORT_GRID = 1024
FLAT_ELLIPSE_BETA = 1e-8
FLAT_ELLIPSE_RESIDUAL_CAP = 1e-4

# Compression to dimension 2
COMPRESSION_EPS = 1e-6
COMPRESSION_DIM = 4

# CLI
THREADS_ENV = "JEMO_THREADS"
CSV_FLOAT_FORMAT = ".17g"
CSV_HEADER = ("omega", "x", "y", "four_xy", "residual")
EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
