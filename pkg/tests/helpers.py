"""Independent oracles: direct summation, no FFT, no library shortcuts."""

import numpy as np


def signed_freq(index: int, n: int) -> int:
    """FFT-order index -> signed frequency, matching fftfreq for even n."""
    return index if index < n // 2 else index - n


def slow_series_coeffs(values: np.ndarray) -> np.ndarray:
    """Fourier-series coefficients by explicit summation (O(size^2))."""
    shape = values.shape
    coords = [np.arange(n) / n for n in shape]
    mesh = np.meshgrid(*coords, indexing="ij")
    out = np.zeros(shape, dtype=complex)
    for lidx in np.ndindex(shape):
        l = [signed_freq(i, n) for i, n in zip(lidx, shape)]
        phase = sum(li * mi for li, mi in zip(l, mesh))
        out[lidx] = np.sum(values * np.exp(-2j * np.pi * phase)) / values.size
    return out


def brute_multiplier(lidx, shape, k, scale) -> float:
    """q(l) = sum_i (scale*l_i)^(2k) from FFT-order indices."""
    return sum((scale * signed_freq(i, n)) ** (2 * k) for i, n in zip(lidx, shape))


def brute_objective(values: np.ndarray, entries: dict, k: int, lam: float, scale: float) -> float:
    """Direct-sum objective: Riemann L2, coefficient penalty, per-cell misfit."""
    l2 = float(np.sum(values**2)) / values.size
    coeffs = slow_series_coeffs(values)
    penalty = 0.0
    for lidx in np.ndindex(values.shape):
        penalty += brute_multiplier(lidx, values.shape, k, scale) * abs(coeffs[lidx]) ** 2
    misfit = 0.0
    flat = values.reshape(-1)
    for idx, entry in entries.items():
        val = entry[0] if isinstance(entry, tuple) else entry
        misfit += (flat[idx] - val) ** 2
    return l2 + lam * penalty + misfit


def central_difference_gradient(fun, v: np.ndarray, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function, every coordinate."""
    g = np.zeros_like(v, dtype=float)
    flat = v.reshape(-1)
    for i in range(flat.size):
        vp = flat.copy()
        vm = flat.copy()
        vp[i] += step
        vm[i] -= step
        g.reshape(-1)[i] = (fun(vp.reshape(v.shape)) - fun(vm.reshape(v.shape))) / (2 * step)
    return g


def brute_kernel_value(x, k: int, lam: float, scale: float, radius: int) -> float:
    """Truncated kernel by direct full-lattice summation."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    m = x.size
    total = 0.0
    for eta in np.ndindex(*((2 * radius + 1,) * m)):
        e = np.array(eta) - radius
        w = 1.0 + lam * np.sum((scale * e) ** (2 * k))
        total += np.cos(2 * np.pi * float(e @ x)) / w
    return total
