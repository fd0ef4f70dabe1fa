"""Kernel backend selection.

The compiled ``_core`` extension is used when it imports; otherwise, or
when ``CEFURA_PURE_PYTHON`` is set, the numpy versions in ``_core_py``.
"""
import os

from . import _core_py

if os.environ.get("CEFURA_PURE_PYTHON"):
    _impl = _core_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _core_py

BACKEND = "compiled" if _impl is not _core_py else "python"
polar_transform = _impl.polar_transform
scl_decode_paths = _impl.scl_decode_paths
