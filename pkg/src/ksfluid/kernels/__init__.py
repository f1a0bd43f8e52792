"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is used.  ``KSFLUID_BACKEND=python`` forces the fallback.
"""
import os

from . import _pykernels as python_backend

try:
    from . import _ckernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

_choice = os.environ.get("KSFLUID_BACKEND", "auto").lower()
if _choice == "compiled" and compiled_backend is None:
    raise ImportError("KSFLUID_BACKEND=compiled but ksfluid.kernels._ckernels is not built")
if _choice == "python" or compiled_backend is None:
    active = python_backend
else:
    active = compiled_backend


def use(name):
    """Switch the active backend at runtime ('python' or 'compiled')."""
    global active
    if name == "python":
        active = python_backend
    elif name == "compiled":
        if compiled_backend is None:
            raise RuntimeError("compiled kernels are not available")
        active = compiled_backend
    else:
        raise ValueError(f"unknown backend {name!r}")
    return active


def get():
    return active
