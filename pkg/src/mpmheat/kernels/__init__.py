"""Particle-grid transfer kernels with a compiled core and a pure-NumPy fallback.

The numba backend is preferred when numba imports cleanly; set
``MPMHEAT_BACKEND=numpy`` or ``=numba`` to force a choice. Both backends
accumulate in a fixed particle order, so results are deterministic and
independent of thread count.
"""

from __future__ import annotations

import os

from . import numpy_backend

_requested = os.environ.get("MPMHEAT_BACKEND", "auto").lower()

if _requested == "numpy":
    _impl = numpy_backend
elif _requested in ("auto", "numba"):
    try:
        from . import numba_backend as _impl
    except ImportError:
        if _requested == "numba":
            raise
        _impl = numpy_backend
else:
    raise ValueError(f"unknown MPMHEAT_BACKEND={_requested!r}")

BACKEND = _impl.NAME

scatter_fields = _impl.scatter_fields
gather_fields = _impl.gather_fields
gather_grad = _impl.gather_grad
scatter_div = _impl.scatter_div
scatter_div_masked = _impl.scatter_div_masked
scatter_weighted = _impl.scatter_weighted
scatter_gradsq = _impl.scatter_gradsq
cell_volumes = _impl.cell_volumes

__all__ = [
    "BACKEND",
    "scatter_fields",
    "gather_fields",
    "gather_grad",
    "scatter_div",
    "scatter_div_masked",
    "scatter_weighted",
    "scatter_gradsq",
    "cell_volumes",
    "numpy_backend",
]
