"""JSON encoding with standards-compliant infinities.

Non-finite floats become ``null``; inside a dict the key also gets a
sibling ``<key>_inf`` flag (``true`` for +inf, ``"-inf"``/``"nan"``
otherwise) so the value can be restored.
"""
from __future__ import annotations

import json
import math

import numpy as np

__all__ = ["jsonable", "dumps"]


def _flag(x: float):
    if x == math.inf:
        return True
    return "-inf" if x == -math.inf else "nan"


def jsonable(obj):
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if isinstance(v, (float, np.floating)) and not math.isfinite(v):
                out[k] = None
                out[f"{k}_inf"] = _flag(float(v))
                continue
            out[k] = jsonable(v)
            if isinstance(v, (list, tuple, np.ndarray)):
                arr = np.asarray(v, dtype=object).ravel()
                bad = [isinstance(x, (float, np.floating)) and not math.isfinite(x) for x in arr]
                if any(bad):
                    out[f"{k}_inf"] = [_flag(float(x)) if b else False for x, b in zip(arr, bad)]
        return out
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, allow_nan=False) + "\n"
