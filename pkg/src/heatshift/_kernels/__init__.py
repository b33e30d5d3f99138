"""Kernel backend selection.

The compiled extension (Cython) is preferred; the NumPy fallback is used
when it is missing. HEATSHIFT_KERNELS=c forces the extension (import error
if absent), HEATSHIFT_KERNELS=py forces the fallback.
"""

import os

_choice = os.environ.get("HEATSHIFT_KERNELS", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ImportError(f"HEATSHIFT_KERNELS must be 'auto', 'c' or 'py', got {_choice!r}")

if _choice == "py":
    from . import _slow as _impl
    BACKEND = "py"
elif _choice == "c":
    from . import _fast as _impl
    BACKEND = "c"
else:
    try:
        from . import _fast as _impl
        BACKEND = "c"
    except ImportError:
        from . import _slow as _impl
        BACKEND = "py"

IDENTITY = _impl.IDENTITY
RELU = _impl.RELU
SIGMOID = _impl.SIGMOID

dense_forward = _impl.dense_forward
dense_backward = _impl.dense_backward
gae_scan = _impl.gae_scan
tank_step = _impl.tank_step
