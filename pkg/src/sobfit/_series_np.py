"""Pure-numpy fallback for the cosine-series inner loop.

Blocked over both points and series terms to bound the size of the phase
matrix; block boundaries are fixed so the reduction order (and hence the
result, bit for bit) does not depend on input size or thread settings.
"""

from __future__ import annotations

import numpy as np

TWO_PI = 2.0 * np.pi

_POINT_BLOCK = 256
_TERM_BLOCK = 16384


def eval_range(points, freqs, coeffs, out, start, stop):
    """Same contract as the compiled kernel: fill out[start:stop]."""
    for i0 in range(start, stop, _POINT_BLOCK):
        i1 = min(i0 + _POINT_BLOCK, stop)
        block = points[i0:i1]
        acc = np.zeros(i1 - i0)
        for j0 in range(0, freqs.shape[0], _TERM_BLOCK):
            j1 = min(j0 + _TERM_BLOCK, freqs.shape[0])
            phases = TWO_PI * (block @ freqs[j0:j1].T)
            acc += np.cos(phases) @ coeffs[j0:j1]
        out[i0:i1] = acc
