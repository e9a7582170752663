"""Closed-form kernel solution: dual weights on data points, off-grid evaluation.

The reproducing kernel is the even, 1-periodic cosine series

    g(x) = sum_eta  cos(2*pi * eta . x) / w(eta),   w(eta) = 1 + lam * sum_i (s*eta_i)^(2k)

truncated to the box ||eta||_inf <= R.  Every term has a nonnegative
coefficient, so truncated Gram matrices are positive semidefinite by
construction.  The fitted function is f(x) = sum_i c_i g(x - p_i) with
(G + I) c = a.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .data import Dataset
from .grid import GridSpec
from .spectral import FrequencyWeight


def _check_embedding(fw: FrequencyWeight, m: int) -> None:
    if 2 * fw.k <= m:
        raise ValueError(
            f"kernel series requires k > m/2 for absolute convergence (k={fw.k}, m={m})"
        )


def default_truncation(grid: GridSpec | None = None) -> int:
    """Default box radius: 4x the largest axis sample count, at least 8."""
    if grid is None:
        return 64
    return max(8, 4 * max(grid.samples))


def series_terms(m: int, fw: FrequencyWeight, radius: int) -> tuple[np.ndarray, np.ndarray]:
    """Half-lattice frequencies and their cosine coefficients.

    Exploits evenness: the zero frequency is kept once with coefficient 1/w(0),
    every pair (eta, -eta) collapses to its lexicographically positive member
    with a doubled coefficient.
    """
    if radius < 1:
        raise ValueError("truncation radius must be >= 1")
    axis = np.arange(-radius, radius + 1, dtype=np.int64)
    mesh = np.meshgrid(*([axis] * m), indexing="ij")
    lattice = np.stack([g.ravel() for g in mesh], axis=1)
    sign = np.zeros(lattice.shape[0], dtype=np.int8)
    undecided = np.ones(lattice.shape[0], dtype=bool)
    for d in range(m):
        newly = undecided & (lattice[:, d] != 0)
        sign[newly] = np.sign(lattice[newly, d]).astype(np.int8)
        undecided &= ~newly
    keep = undecided | (sign > 0)
    half = lattice[keep].astype(np.float64)
    doubling = np.where(undecided[keep], 1.0, 2.0)
    w = 1.0 + fw.lam * np.sum((fw.scale * half) ** (2 * fw.k), axis=1)
    return half, doubling / w


def series_tail_bound(fw: FrequencyWeight, radius: int, m: int) -> float:
    """Upper estimate of the mass dropped by the box truncation.

    Bounds sum over ||eta||_inf > R of 1/(lam * sum (s*eta_i)^(2k)) by shells:
    each shell t has fewer than 2m(2t+1)^(m-1) points, each with denominator
    at least lam*(s*t)^(2k).  Finite for 2k > m.
    """
    _check_embedding(fw, m)
    t = np.arange(radius + 1, radius + 200_001, dtype=np.float64)
    shells = 2 * m * (2 * t + 1) ** (m - 1) / (fw.lam * (fw.scale * t) ** (2 * fw.k))
    head = float(np.sum(shells))
    big_t = float(t[-1])
    power = 2 * fw.k - m
    remainder = (2.0**m * m / (fw.lam * fw.scale ** (2 * fw.k))) * big_t ** (-power) / power
    return head + remainder


def kernel_value(x, fw: FrequencyWeight, radius: int) -> float:
    """Evaluate the truncated kernel at one point (even, 1-periodic per axis)."""
    point = np.atleast_1d(np.asarray(x, dtype=np.float64))
    m = point.size
    _check_embedding(fw, m)
    freqs, coeffs = series_terms(m, fw, radius)
    return float(backend.cosine_series(point.reshape(1, m), freqs, coeffs)[0])


@dataclass(frozen=True)
class KernelModel:
    """Dual-weight representation f(x) = sum_i weights[i] * g(x - centers[i])."""

    fw: FrequencyWeight
    radius: int
    centers: np.ndarray
    weights: np.ndarray
    gram: np.ndarray
    dual_residual: float
    tail_bound: float

    @property
    def n(self) -> int:
        return int(self.weights.size)

    @property
    def m(self) -> int:
        return int(self.centers.shape[1])


def gram_matrix(points: np.ndarray, fw: FrequencyWeight, radius: int) -> np.ndarray:
    """Kernel Gram matrix g(p_i - p_j); symmetric by the kernel's evenness."""
    pts = np.asarray(points, dtype=np.float64)
    n, m = pts.shape
    _check_embedding(fw, m)
    freqs, coeffs = series_terms(m, fw, radius)
    iu, ju = np.triu_indices(n)
    diffs = pts[iu] - pts[ju]
    vals = backend.cosine_series(diffs, freqs, coeffs)
    gram = np.zeros((n, n))
    gram[iu, ju] = vals
    gram[ju, iu] = vals
    return gram


def solve_kernel(dataset: Dataset, fw: FrequencyWeight, radius: int) -> KernelModel:
    """Solve the dual system (G + I) c = a on the dataset points."""
    _check_embedding(fw, dataset.m)
    if dataset.n == 0:
        empty = np.zeros((0, max(dataset.m, 1)))
        return KernelModel(
            fw, radius, empty, np.zeros(0), np.zeros((0, 0)), 0.0,
            series_tail_bound(fw, radius, max(dataset.m, 1)),
        )
    gram = gram_matrix(dataset.points, fw, radius)
    system = gram + np.eye(dataset.n)
    weights = np.linalg.solve(system, dataset.values)
    residual = float(np.linalg.norm(system @ weights - dataset.values))
    return KernelModel(
        fw=fw,
        radius=radius,
        centers=dataset.points.copy(),
        weights=weights,
        gram=gram,
        dual_residual=residual,
        tail_bound=series_tail_bound(fw, radius, dataset.m),
    )


def kernel_predict(model: KernelModel, x) -> float:
    """Closed-form evaluation at an arbitrary point."""
    point = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if model.n == 0:
        return 0.0
    freqs, coeffs = series_terms(model.m, model.fw, model.radius)
    vals = backend.cosine_series(point.reshape(1, -1) - model.centers, freqs, coeffs)
    return float(vals @ model.weights)


def kernel_predict_many(model: KernelModel, points: np.ndarray) -> np.ndarray:
    """Vectorized prediction for an (n_points, m) batch."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if model.n == 0:
        return np.zeros(pts.shape[0])
    freqs, coeffs = series_terms(model.m, model.fw, model.radius)
    diffs = (pts[:, None, :] - model.centers[None, :, :]).reshape(-1, model.m)
    vals = backend.cosine_series(diffs, freqs, coeffs).reshape(pts.shape[0], model.n)
    return vals @ model.weights
