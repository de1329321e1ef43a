"""Data-parallel CFR solving engine for two-player zero-sum poker subgames."""

import os

# The kernel thread pool is sized once, when numba first initializes its
# threading layer.  Reserve enough slots that worker counts up to 8 can be
# requested later even on machines whose core count is lower (results are
# worker-count independent; oversubscription only affects timing).
os.environ.setdefault("NUMBA_NUM_THREADS", "8")
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")

__version__ = "0.1.0"
