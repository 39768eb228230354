"""Pick the compiled kernels when available, else the numpy fallback.

Set ``BINSPIKE_PURE_PYTHON=1`` to force the fallback.
"""
import importlib
import os

from . import _fallback


def load(name=None):
    """Return the kernel module called ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _fallback
    if name == "cython":
        return importlib.import_module("binspike._kernels")
    if name is not None:
        raise ValueError(f"unknown backend {name!r}")
    if os.environ.get("BINSPIKE_PURE_PYTHON"):
        return _fallback
    try:
        return importlib.import_module("binspike._kernels")
    except ImportError:
        return _fallback


kernels = load()
BACKEND = kernels.NAME
