"""Kernel backend selection.

The decode search kernels exist twice: a numba @njit version and a pure-numpy
version. The active one is picked once at import time from the environment:

    TAMARC_BACKEND=numba   use numba if importable (default), error if not
    TAMARC_BACKEND=numpy   force the pure-numpy path

`benchmarks/bench_kernels.py` times both on the same workloads.
"""

import os

_requested = os.environ.get("TAMARC_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(f"TAMARC_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

HAVE_NUMBA = False
if _requested != "numpy":
    try:
        import numba  # noqa: F401

        HAVE_NUMBA = True
    except ImportError:
        if _requested == "numba":
            raise

USE_NUMBA = HAVE_NUMBA and _requested != "numpy"


def active_backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_num_threads(k: int) -> None:
    """Thread count for the parallel kernels; a no-op on the numpy path."""
    if USE_NUMBA and k > 0:
        import numba

        numba.set_num_threads(k)
