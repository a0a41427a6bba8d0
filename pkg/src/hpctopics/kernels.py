"""Kernel backend selection.

The compiled extension is used when importable; set the environment variable
``HPCTOPICS_PURE_PYTHON=1`` (before import) to force the numpy fallback.
Both backends expose the same four functions with identical semantics.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("HPCTOPICS_PURE_PYTHON"):
    _impl = _kernels_py
else:
    try:
        from . import _fastkernels as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME

rate_logpost_grad = _impl.rate_logpost_grad
rate_trajectory = _impl.rate_trajectory
affinity_logpost_grad = _impl.affinity_logpost_grad
affinity_trajectory = _impl.affinity_trajectory


def available_backends():
    """Names of the kernel backends importable in this environment."""
    names = ["python"]
    try:
        from . import _fastkernels  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the kernel module for ``name`` ("compiled" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "compiled":
        from . import _fastkernels

        return _fastkernels
    raise ValueError(f"unknown kernel backend {name!r}")
