"""Kernel backend selection.

The compiled extension is used when importable; set ``ATTRGAME_PURE_PYTHON=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("ATTRGAME_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
indicator_matrix = _impl.indicator_matrix
fictitious_play = _impl.fictitious_play

__all__ = ["BACKEND", "indicator_matrix", "fictitious_play", "_kernels_py"]
