PULSE_THREADS = "PULSE_THREADS"
PULSE_CONFIG = "PULSE_CONFIG"
PULSE_LOG_LEVEL = "PULSE_LOG_LEVEL"
PULSE_AJR_DATA = "PULSE_AJR_DATA"

DEFAULT_CONFIG_PATH = "config.yaml"
DEFAULT_AJR_DATA = "data/ajr.csv"

# Gram matrices with min/max singular value below this are treated as singular.
RCOND_THRESHOLD = 1e-12
# Eigenvalues of A'A below EIG_CLAMP * max eigenvalue are clamped before inversion.
EIG_CLAMP = 1e-14
# kappa in (1 - KAPPA_ONE_BAND, 1) is routed through the kappa = 1 branch.
KAPPA_ONE_BAND = 1e-8
# Upper cap for the bracket growth of the lambda binary search.
LAMBDA_CAP = 1e30
# l_OLS below ZERO_RESIDUAL * ||y||^2 / n counts as a zero residual.
ZERO_RESIDUAL = 1e-14
# Matrices with smallest eigenvalue >= -PSD_SLACK * trace count as PSD.
PSD_SLACK = 1e-9
# Spectral radius margin for stationarity of a SEM.
STATIONARITY_MARGIN = 1e-8

DEFAULT_P_MIN = 0.05
DEFAULT_PRECISION = 2**20
T_STAR_ITERATIONS = 60
# Slack for the non-increasing check on test statistics evaluated along the search, relative to the threshold.
MONOTONE_SLACK = 1e-9
# Default degree of the Fuller fallback used by PULSE+.
DEFAULT_FALLBACK = "fuller:4"
