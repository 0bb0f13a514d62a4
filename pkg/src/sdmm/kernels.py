"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``SDMM_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy fallback is used. Both backends are bitwise identical.

Attributes
----------
BACKEND : str
    ``"cython"`` or ``"python"``.
"""

import os

from . import _kernels_py

_force_pure = os.environ.get("SDMM_PURE_PYTHON", "") not in ("", "0")

if _force_pure:
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

cmatmul = _impl.cmatmul
poly_eval = _impl.poly_eval


def get_backend(name):
    """Return the kernel module for ``name`` (``"cython"`` or ``"python"``)."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown kernel backend {name!r}")
