"""Dispatch to the compiled or pure kernels according to ``_backend.BACKEND``."""
from . import _kernels_numpy
from ._backend import BACKEND

if BACKEND == "numba":
    from . import _kernels_numba as _impl
else:
    _impl = _kernels_numpy

glauber_run = _impl.glauber_run
ball_defect_mask = _impl.ball_defect_mask
brute_mcut = _impl.brute_mcut
swap_descent = _impl.swap_descent

__all__ = ["BACKEND", "glauber_run", "ball_defect_mask", "brute_mcut", "swap_descent"]
