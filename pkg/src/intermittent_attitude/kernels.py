"""Backend selection for the plant integration kernel.

The compiled ``_ckernel`` extension is used when it was built; otherwise the
numpy implementation in ``_pykernel`` is used. Setting the environment
variable ``INTERMITTENT_ATTITUDE_PURE_PYTHON=1`` forces the fallback.
"""

import os

from . import _pykernel

try:
    from . import _ckernel
except ImportError:
    _ckernel = None

_BACKENDS = {"python": _pykernel}
if _ckernel is not None:
    _BACKENDS["cython"] = _ckernel

if os.environ.get("INTERMITTENT_ATTITUDE_PURE_PYTHON", "") not in ("", "0") or _ckernel is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

rk4_plant_step = _BACKENDS[BACKEND].rk4_plant_step


def available() -> list[str]:
    return sorted(_BACKENDS)


def set_backend(name: str) -> str:
    """Switch the active backend at runtime; returns the previous name."""
    global BACKEND, rk4_plant_step
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} not available (have {available()})")
    previous = BACKEND
    BACKEND = name
    rk4_plant_step = _BACKENDS[name].rk4_plant_step
    return previous


__all__ = ["BACKEND", "available", "rk4_plant_step", "set_backend"]
