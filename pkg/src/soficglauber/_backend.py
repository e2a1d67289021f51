"""Kernel backend selection.

Set ``SOFICGLAUBER_BACKEND=numpy`` to force the pure numpy/Python kernels;
the default is ``numba`` whenever numba imports cleanly.
"""
import os

_requested = os.environ.get("SOFICGLAUBER_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"SOFICGLAUBER_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

BACKEND = "numba" if (_requested == "numba" and HAVE_NUMBA) else "numpy"
