"""Stencil kernel selection.

The compiled extension is used when it was built; otherwise, or when
``FBPLAB_PURE_PYTHON=1`` is set, the numpy implementation is used. The
two emit triplets in different orders but assemble to the same matrix.
"""

import os

from . import _kernels_py

BACKEND = "python"
if os.environ.get("FBPLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
else:
    _impl = _kernels_py

metric_coefficients = _impl.metric_coefficients
interior_triplets = _impl.interior_triplets

__all__ = ["BACKEND", "metric_coefficients", "interior_triplets"]
