"""Kernel backend chosen at import: compiled extension if built, else pure Python.

Set ``GROUPSEL_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("GROUPSEL_PURE_PYTHON") != "1":
    try:
        from . import _kernels as compiled_backend
    except ImportError:
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

intersect_intervals = active.intersect_intervals
quadratic_nonneg = active.quadratic_nonneg
quadratic_region = active.quadratic_region
fslice_value = active.fslice_value
fslice_nonneg = active.fslice_nonneg
fslice_region = active.fslice_region
refine_root = active.refine_root
