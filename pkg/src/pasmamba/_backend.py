"""Kernel backend selection.

The compiled Cython kernels are used when importable; set
``PASM_BACKEND=python`` to force the numpy fallback.
"""
import os

import numpy as np

from . import _fallback


def _contiguous(fn):
    def wrapped(*arrays):
        return fn(*(np.ascontiguousarray(a, dtype=np.float64) for a in arrays))

    wrapped.__name__ = fn.__name__
    wrapped.__doc__ = fn.__doc__
    return wrapped


BACKEND = "python"
scan_lanes = _contiguous(_fallback.scan_lanes)
selective_scan = _contiguous(_fallback.selective_scan)

if os.environ.get("PASM_BACKEND", "").lower() not in ("python", "numpy", "fallback"):
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        scan_lanes = _contiguous(_kernels.scan_lanes)
        selective_scan = _contiguous(_kernels.selective_scan)


def kernels(name=None):
    """Return ``(scan_lanes, selective_scan)`` for backend ``name`` (default: active)."""
    if name is None:
        return scan_lanes, selective_scan
    if name == "python":
        return _contiguous(_fallback.scan_lanes), _contiguous(_fallback.selective_scan)
    if name == "cython":
        from . import _kernels

        return _contiguous(_kernels.scan_lanes), _contiguous(_kernels.selective_scan)
    raise ValueError(f"unknown backend {name!r}")
