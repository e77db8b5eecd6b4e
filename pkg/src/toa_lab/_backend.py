"""Select the compiled kernels when available, else the numpy fallback.

Set ``TOA_LAB_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py as python_kernels

try:
    if os.environ.get("TOA_LAB_PURE_PYTHON"):
        raise ImportError("pure-python backend requested")
    from . import _kernels as compiled_kernels
except ImportError:
    compiled_kernels = None

if compiled_kernels is not None:
    BACKEND = "cython"
    quadratic_phase_sum = compiled_kernels.quadratic_phase_sum
else:
    BACKEND = "python"
    quadratic_phase_sum = python_kernels.quadratic_phase_sum

if compiled_kernels is not None:
    rk4_diag_rank1 = compiled_kernels.rk4_diag_rank1
else:
    rk4_diag_rank1 = python_kernels.rk4_diag_rank1
