"""Backend selection for the series-evaluation hot loop.

The compiled extension is used when it imported successfully; otherwise the
numpy fallback.  ``SOBFIT_BACKEND`` forces a choice ("ext" or "py"),
``FIT_THREADS`` caps how many threads may share a large batch.  Work is split
by point ranges only, so results are identical for any thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _series_np

try:
    from . import _series as _ext
except ImportError:  # pragma: no cover - depends on the build environment
    _ext = None

HAVE_EXT = _ext is not None

_MIN_PARALLEL_WORK = 1 << 22  # points * terms below this run single-threaded


def _selected():
    mode = os.environ.get("SOBFIT_BACKEND", "auto")
    if mode == "py":
        return _series_np
    if mode == "ext":
        if _ext is None:
            raise RuntimeError("SOBFIT_BACKEND=ext but the compiled extension is unavailable")
        return _ext
    return _ext if _ext is not None else _series_np


def backend_name() -> str:
    return "ext" if _selected() is _ext else "py"


def thread_count() -> int:
    env = os.environ.get("FIT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(4, os.cpu_count() or 1)


def cosine_series(points: np.ndarray, freqs: np.ndarray, coeffs: np.ndarray) -> np.ndarray:
    """sum_j coeffs[j] * cos(2*pi * freqs[j] . x) for every point x."""
    points = np.ascontiguousarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points.reshape(1, -1)
    freqs = np.ascontiguousarray(freqs, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)
    if freqs.shape[0] != coeffs.shape[0] or freqs.shape[1] != points.shape[1]:
        raise ValueError("points, freqs and coeffs shapes are inconsistent")
    impl = _selected()
    n_points = points.shape[0]
    out = np.zeros(n_points)
    threads = thread_count()
    if (
        impl is _ext
        and threads > 1
        and n_points >= 2 * threads
        and n_points * freqs.shape[0] >= _MIN_PARALLEL_WORK
    ):
        bounds = np.linspace(0, n_points, threads + 1, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(impl.eval_range, points, freqs, coeffs, out, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            for fut in futures:
                fut.result()
    else:
        impl.eval_range(points, freqs, coeffs, out, 0, n_points)
    return out
