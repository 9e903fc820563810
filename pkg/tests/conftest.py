import os

# pick a threading layer that exists in this environment before numba loads
os.environ.setdefault("NUMBA_THREADING_LAYER", "omp")
