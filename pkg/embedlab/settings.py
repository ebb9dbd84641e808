import os


# Simple runtime settings

# Concurrent matrix workers in a distinguisher run
MAX_WORKERS = 4

# Per-run report directories live under here
RESULTS_DIR = os.path.join(os.getcwd(), "results")

# Chi-square threshold used when a config does not set one
DEFAULT_SIGNIFICANCE = 0.01

# Refuse runs whose estimated matrix memory exceeds this (override per config)
MEMORY_LIMIT_MB = 2048

# Baseline Monte Carlo trials per observed matrix
BASELINE_FACTOR = 20

# Elimination tuning
M4RI_STRIP_BITS = 8
M4RI_MIN_ROWS = 256
M4RI_CHUNK_ROWS = 4096
SMALL_RANK_MAX_COLS = 64

# Largest log2|V| accepted for exhaustive enumeration of a state space
EXHAUSTIVE_MAX_BITS = 20

# Largest log2|V| for exhaustive s-extendibility checks
EXTEND_MAX_BITS = 8
