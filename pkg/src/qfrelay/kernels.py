"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``QFRELAY_PURE_PYTHON`` is set, the numpy fallback is used.
"""
import os
from types import ModuleType

from . import _kernels_py

__all__ = ["BACKEND", "available_backends", "get_backend", "grid_search"]

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS: dict[str, ModuleType] = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = BACKEND
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}") from None


if os.environ.get("QFRELAY_PURE_PYTHON") or _compiled is None:
    BACKEND = "python"
else:
    BACKEND = "cython"

grid_search = get_backend().grid_search
