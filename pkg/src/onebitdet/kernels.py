"""Backend selection for the simulation kernels.

The compiled extension is used when it was built; otherwise the NumPy
fallback.  ``use_backend`` switches explicitly (tests and the benchmark use it).
"""

from __future__ import annotations

import math
from types import ModuleType

import numpy as np

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    _BACKENDS["cython"] = _ckernels

_active: ModuleType = _BACKENDS.get("cython", _pykernels)


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def backend() -> str:
    return "cython" if _active is _ckernels and _ckernels is not None else "python"


def use_backend(name: str) -> None:
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} is not available (have {available_backends()})")
    _active = _BACKENDS[name]


def h1_bits(params, u, w, v) -> np.ndarray:
    innov = params.sigma1 * math.sqrt(1.0 - params.corr * params.corr)
    return _active.h1_bits(np.ascontiguousarray(u), np.ascontiguousarray(w),
                           np.ascontiguousarray(v), params.p10_init, params.p01, params.p10,
                           params.sigma0, params.sigma1, params.corr, innov, params.noise_std)


def h0_bits(params, v) -> np.ndarray:
    return _active.h0_bits(np.ascontiguousarray(v), params.noise_std)


def scores(bits, gain_agree, gain_disagree) -> np.ndarray:
    return _active.scores(np.ascontiguousarray(bits, dtype=np.int8),
                          np.ascontiguousarray(np.atleast_2d(gain_agree), dtype=float),
                          np.ascontiguousarray(np.atleast_2d(gain_disagree), dtype=float))
