"""Hot geometry kernels with a numba path and a pure-numpy fallback.

``BATCHTRAJ_BACKEND`` selects the default (``numba`` or ``numpy``); numba is
used when importable. ``BATCHTRAJ_THREADS`` caps numba's thread pool.
"""

from __future__ import annotations

import os
from types import ModuleType

import numpy as np

from . import numpy_impl

BACKENDS = ("numba", "numpy")

_numba_impl: ModuleType | None = None


def _load_numba() -> ModuleType | None:
    global _numba_impl
    if _numba_impl is None:
        try:
            from . import numba_impl
        except ImportError:
            return None
        threads = os.environ.get("BATCHTRAJ_THREADS")
        if threads:
            import numba

            numba.set_num_threads(max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS)))
        _numba_impl = numba_impl
    return _numba_impl


def default_backend() -> str:
    name = os.environ.get("BATCHTRAJ_BACKEND", "numba").strip().lower()
    if name not in BACKENDS:
        raise ValueError(f"BATCHTRAJ_BACKEND must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and _load_numba() is None:
        return "numpy"
    return name


class Kernels:
    """Bound set of kernels for one backend; inputs are coerced to contiguous float64."""

    def __init__(self, backend: str | None = None):
        backend = backend or default_backend()
        if backend == "numba":
            impl = _load_numba()
            if impl is None:
                raise ImportError("numba backend requested but numba is not importable")
        elif backend == "numpy":
            impl = numpy_impl
        else:
            raise ValueError(f"unknown backend {backend!r}")
        self.backend = backend
        self._impl = impl

    def polar_collision(self, x, y, cpsi, spsi, xo, yo, a, b, r, scaled=False, out=None):
        """``out`` optionally supplies four C-contiguous float64 (L, n, m, q) arrays to write into."""
        args = [_f(v) for v in (x, y, cpsi, spsi, xo, yo, a, b, r)]
        if out is None:
            return self._impl.polar_collision(*args, bool(scaled))
        shape = (args[0].shape[0], args[4].shape[0], args[8].shape[0], args[0].shape[1])
        for o in out:
            if o.shape != shape or o.dtype != np.float64 or not o.flags.c_contiguous:
                raise ValueError(f"out arrays must be C-contiguous float64 of shape {shape}")
        self._impl.polar_collision_into(*args, bool(scaled), *out)
        return tuple(out)

    def collision_targets(self, x, y, c, s, cpsi, spsi, xo, yo, a, b, r, cos_a, sin_a, d):
        args = [_f(v) for v in (x, y, c, s, cpsi, spsi, xo, yo, a, b, r, cos_a, sin_a, d)]
        return self._impl.collision_targets(*args)

    def collision_penalty(self, x, y, cpsi, spsi, xo, yo, a, b, r):
        args = [_f(v) for v in (x, y, cpsi, spsi, xo, yo, a, b, r)]
        return self._impl.collision_penalty(*args)


def _f(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def get_kernels(backend: str | None = None) -> Kernels:
    return Kernels(backend)
