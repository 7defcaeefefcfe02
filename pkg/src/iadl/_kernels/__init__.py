"""Projection kernel selection.

The compiled extension is preferred when it imported cleanly; otherwise the
pure-NumPy implementation takes over. Set ``IADL_PURE_PYTHON=1`` to force
the NumPy path (the benchmark uses this to compare the two).
"""

import os

from . import _wl1_numpy

if os.environ.get("IADL_PURE_PYTHON"):
    _impl = _wl1_numpy
    BACKEND = "numpy"
else:
    try:
        from . import _wl1 as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _wl1_numpy
        BACKEND = "numpy"

project_rows = _impl.project_rows

__all__ = ["BACKEND", "project_rows"]
