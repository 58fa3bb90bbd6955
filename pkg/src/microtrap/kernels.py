"""Backend selection for the hot field kernels.

The numba implementation is the default.  Set ``MICROTRAP_BACKEND=numpy`` to
force the pure-numpy path (e.g. on platforms where numba is unavailable or
for the backend benchmark).  Selection happens once at import time.
"""

import os
import warnings

from . import _corner_numpy

MU0_OVER_4PI = _corner_numpy.MU0_OVER_4PI
SURFACE_CLEARANCE = _corner_numpy.SURFACE_CLEARANCE

_VALID = ("numba", "numpy")


def _select():
    requested = os.environ.get("MICROTRAP_BACKEND", "numba").strip().lower()
    if requested not in _VALID:
        raise ValueError(
            f"MICROTRAP_BACKEND must be one of {_VALID}, got {requested!r}"
        )
    if requested == "numba":
        try:
            from . import _corner_numba
            return "numba", _corner_numba
        except ImportError as exc:
            warnings.warn(
                f"numba backend unavailable ({exc}); falling back to numpy"
            )
            return "numpy", _corner_numpy
    return "numpy", _corner_numpy


BACKEND, _impl = _select()

channel_fields = _impl.channel_fields
channel_gradients = _impl.channel_gradients
channel_hessians = _impl.channel_hessians


def implementation(name):
    """Return a specific backend module (for cross-checks and benchmarks)."""
    if name == "numpy":
        return _corner_numpy
    if name == "numba":
        from . import _corner_numba
        return _corner_numba
    raise ValueError(f"unknown backend {name!r}")
