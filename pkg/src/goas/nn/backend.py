"""Kernel backend selection.

The hot inner loops (conv/pool forward and backward) exist twice: a numba
@njit implementation and a pure-numpy im2col fallback. The active backend is
chosen once, from the GOAS_BACKEND environment variable:

    GOAS_BACKEND=auto    use numba if importable, else numpy (default)
    GOAS_BACKEND=numba   require numba; ImportError if missing
    GOAS_BACKEND=numpy   force the fallback

set_backend() overrides the choice at runtime (used by tests and the kernel
benchmark).
"""

from __future__ import annotations

import os

_KERNELS = None
_NAME = None

_FUNCS = (
    "conv2d_forward",
    "conv2d_backward_input",
    "conv2d_backward_weight",
    "dwconv2d_forward",
    "dwconv2d_backward_input",
    "dwconv2d_backward_weight",
    "maxpool2_forward",
    "maxpool2_backward",
)


def _load(name: str):
    if name == "numba":
        from goas.nn import kernels_numba as mod
    elif name == "numpy":
        from goas.nn import kernels_numpy as mod
    else:
        raise ValueError(f"unknown backend {name!r}; expected 'auto', 'numba' or 'numpy'")
    return mod


def set_backend(name: str) -> str:
    """Select the kernel backend ('auto', 'numba' or 'numpy'). Returns the
    resolved name."""
    global _KERNELS, _NAME
    if name == "auto":
        try:
            mod = _load("numba")
            name = "numba"
        except ImportError:
            mod = _load("numpy")
            name = "numpy"
    else:
        mod = _load(name)
    _KERNELS = mod
    _NAME = name
    return name


def active_backend() -> str:
    if _NAME is None:
        set_backend(os.environ.get("GOAS_BACKEND", "auto"))
    return _NAME


def kernels():
    if _KERNELS is None:
        active_backend()
    return _KERNELS


def __getattr__(attr):
    if attr in _FUNCS:
        return getattr(kernels(), attr)
    raise AttributeError(attr)
