"""Kernel selection: compiled extension when available, else pure Python.

Set ``FIELDXFER_PURE_PYTHON=1`` to force the fallback (used by the
equivalence tests and the kernel benchmark).
"""

import os

from . import _fallback

if os.environ.get("FIELDXFER_PURE_PYTHON", ""):
    _impl = _fallback
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _fallback

IMPLEMENTATION = _impl.IMPLEMENTATION
clip_polygon_box = _impl.clip_polygon_box
cut_cell_quadrature = _impl.cut_cell_quadrature
