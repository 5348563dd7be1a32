"""Numeric kernel backend selection.

The compiled Cython kernels are used when available; set PIHSIM_PURE_PYTHON=1
to force the pure-Python reference implementation. Both expose the same
functions (see reference.py for the contracts).
"""

import os

from . import reference

if os.environ.get("PIHSIM_PURE_PYTHON", "") not in ("", "0"):
    _impl = reference
else:
    try:
        from . import _fastkern as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = reference

BACKEND = _impl.backend_name()

obb_obb_overlap = _impl.obb_obb_overlap
segment_obb_distance = _impl.segment_obb_distance
segment_segment_distance = _impl.segment_segment_distance
resolve_contact = _impl.resolve_contact

CONTOUR_CIRCLE = reference.CONTOUR_CIRCLE
CONTOUR_RECT = reference.CONTOUR_RECT
CONTOUR_TRAPEZOID = reference.CONTOUR_TRAPEZOID
