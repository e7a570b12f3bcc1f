# src/constants.py
SCHEMA_VERSION = 1
SOFTWARE_VERSION = "0.4.0"

# Квадратуры
DEFAULT_REL_TOL = 1e-6
DEFAULT_ABS_TOL = 1e-12
DEFAULT_MAX_EVALS = 5_000_000
MIN_MAX_EVALS = 1_000
DEFAULT_TAIL_CUTOFF = 8.0
TANH_SINH_LEVEL = 3
TIME_FACTOR_LEVEL = 5
STABLE_TABLE_NODES = 1200

# Матрицы Грама
MAX_GRAM_POINTS = 2000
PSD_TOLERANCE = 1e-8
PINV_RCOND = 1e-10
GRAM_CHUNK_PAIRS = 4096

# Сэмплер
JITTER_START = 1e-12
JITTER_MAX = 1e-6
JITTER_FACTOR = 10.0
PATH_CHUNK_SIZE = 1024
RECONSTRUCTION_TOLERANCE = 1e-8
ENSEMBLE_MAGIC = b"GRFENS01"

# Оценщики
MAX_LEVEL_RADIUS = 0.1
MIN_SMALL_BALL_PATHS = 1_000
BALL_RESOLUTION_WARNING = 50
MAX_UNIFORM_PAIRS = 1_000_000
MIN_TAIL_SAMPLES = 10_000
TAIL_CHECK_LEVELS = (1.0, 2.0, 3.0)
KS_FLAG_LEVEL = 0.01
KS_FAIL_LEVEL = 0.001
WILSON_CONFIDENCE = 0.95
MIN_SLOPE_POINTS = 4
