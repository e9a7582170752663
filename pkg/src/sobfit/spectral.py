"""Fourier multiplier weights, norms, the fitting objective and its gradient.

The regularized objective on a periodic grid is

    C(f) = mean(f^2) + lam * sum_l q(l) |f_hat(l)|^2
           + sum_cells (f(cell) - a_cell)^2

where ``q(l) = sum_i (s * l_i)^(2k)`` penalizes the pure k-th derivative
along every axis through its Fourier multiplier, ``s`` being either ``2*pi``
(calculus convention, the default) or ``1``.  All integrals are uniform
Riemann sums, exact for band-limited integrands under the chosen DFT
normalization.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .grid import GriddedData, GridSpec, SpectralField

TWO_PI = 2.0 * np.pi

_SCALE_FACTORS = {"2pi": TWO_PI, "1": 1.0}


@dataclass(frozen=True)
class FrequencyWeight:
    """Smoothness order ``k``, penalty strength ``lam`` and multiplier scale.

    ``scale_mode`` selects the factor applied to integer frequencies inside
    the multiplier: "2pi" gives (2*pi*l)^(2k), "1" gives l^(2k).  The two
    differ by a reparametrization of ``lam``.
    """

    k: int
    lam: float
    scale_mode: str = "2pi"

    def __post_init__(self):
        if int(self.k) < 1:
            raise ValueError(f"smoothness order k must be a positive integer, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.scale_mode not in _SCALE_FACTORS:
            raise ValueError(f"scale_mode must be one of {sorted(_SCALE_FACTORS)}, got {self.scale_mode!r}")

    @property
    def scale(self) -> float:
        return _SCALE_FACTORS[self.scale_mode]

    def with_lambda(self, lam: float) -> "FrequencyWeight":
        return replace(self, lam=float(lam))

    def warn_if_subcritical(self, m: int) -> None:
        """Warn when k <= m/2: the continuum sup-norm control is lost."""
        if 2 * self.k <= m:
            warnings.warn(
                f"smoothness order k={self.k} does not exceed m/2={m / 2}; the discrete "
                "problem stays well posed but continuum uniform-convergence guarantees do not apply",
                stacklevel=3,
            )


def frequency_weight(l, fw: FrequencyWeight) -> float:
    """Multiplier w(l) = 1 + lam * sum_i (s*l_i)^(2k) for one frequency tuple."""
    arr = np.atleast_1d(np.asarray(l, dtype=np.float64))
    return float(1.0 + fw.lam * np.sum((fw.scale * arr) ** (2 * fw.k)))


def penalty_multipliers(grid: GridSpec, fw: FrequencyWeight) -> np.ndarray:
    """Array q(l) = sum_i (s*l_i)^(2k) over the grid's frequency lattice."""
    q = np.zeros(grid.samples)
    for axis, freqs in enumerate(grid.freqs):
        axis_term = (fw.scale * freqs.astype(np.float64)) ** (2 * fw.k)
        shape = [1] * grid.m
        shape[axis] = len(freqs)
        q = q + axis_term.reshape(shape)
    return q


def weight_array(grid: GridSpec, fw: FrequencyWeight) -> np.ndarray:
    """Array w(l) = 1 + lam * q(l); always >= 1 with w(0) = 1."""
    return 1.0 + fw.lam * penalty_multipliers(grid, fw)


def l2_norm_sq(f: SpectralField) -> float:
    """Squared L2 norm over the unit cube as a uniform Riemann sum."""
    return float(np.mean(f.values**2))


def l2_norm_sq_freq(f: SpectralField) -> float:
    """Same quantity summed over coefficients; equals l2_norm_sq by Plancherel."""
    return float(np.sum(np.abs(f.coeffs) ** 2))


def kgrad_norm_sq(f: SpectralField, fw: FrequencyWeight) -> float:
    """Squared L2 norm of the pure k-th derivative vector (lam not applied)."""
    q = penalty_multipliers(f.grid, fw)
    return float(np.sum(q * np.abs(f.coeffs) ** 2))


def _check_same_grid(f: SpectralField, data: GriddedData) -> None:
    if f.grid != data.grid:
        raise ValueError(f"field grid {f.grid.samples} does not match data grid {data.grid.samples}")


def objective(f: SpectralField, data: GriddedData, fw: FrequencyWeight) -> float:
    """C(f): regularized squared norm plus squared data misfit."""
    _check_same_grid(f, data)
    misfit = 0.0
    if data.n:
        misfit = float(np.sum((f.flat[data.indices] - data.values) ** 2))
    return l2_norm_sq(f) + fw.lam * kgrad_norm_sq(f, fw) + misfit


def objective_gradient(f: SpectralField, data: GriddedData, fw: FrequencyWeight) -> SpectralField:
    """Gradient of C with respect to the real space samples of ``f``.

    The norm terms contribute (2/size) * Re ifftn(w * fftn(values)); the data
    term adds 2*(f(cell) - a_cell) at each occupied cell.
    """
    _check_same_grid(f, data)
    w = weight_array(f.grid, fw)
    g = (2.0 / f.grid.size) * np.fft.ifftn(w * np.fft.fftn(f.values)).real
    if data.n:
        flat = g.reshape(-1)
        flat[data.indices] += 2.0 * (f.flat[data.indices] - data.values)
    return SpectralField(f.grid, g)


def el_residual(f: SpectralField, data: GriddedData, fw: FrequencyWeight, phi: SpectralField) -> float:
    """Weak-form first-order optimality residual against a test function.

    Returns lam * <D^k phi, D^k f> + <phi, f> + sum_cells (f - a) * phi(cell);
    this vanishes (to solver tolerance) exactly when ``f`` minimizes C.
    """
    _check_same_grid(f, data)
    if phi.grid != f.grid:
        raise ValueError("test function must live on the same grid")
    q = penalty_multipliers(f.grid, fw)
    grad_term = fw.lam * float(np.sum(q * (phi.coeffs * np.conj(f.coeffs)).real))
    mass_term = float(np.mean(phi.values * f.values))
    point_term = 0.0
    if data.n:
        point_term = float(np.sum((f.flat[data.indices] - data.values) * phi.flat[data.indices]))
    return grad_term + mass_term + point_term


def sup_norm_bound_constant(k: int, m: int, radius: int) -> float:
    """Partial-sum embedding constant K(R) = sqrt(sum_{|l_i|<=R} (1+|l|^2)^(-k)).

    Monotone nondecreasing in R and convergent as R grows iff 2k > m, which is
    therefore required.
    """
    if 2 * k <= m:
        raise ValueError(f"need k > m/2 for a finite embedding constant (k={k}, m={m})")
    if radius < 0:
        raise ValueError("truncation radius must be >= 0")
    axis = np.arange(-radius, radius + 1, dtype=np.float64) ** 2
    sq = np.zeros(1)
    for _ in range(m):
        sq = sq[..., None] + axis
    return float(np.sqrt(np.sum((1.0 + sq) ** (-k))))


def mixed_sobolev_norm_sq(f: SpectralField, k: int) -> float:
    """Full H^k squared norm: L2 plus every mixed k-th derivative via multipliers.

    Sums Pi_i (2*pi*l_i)^(2*alpha_i) over all multi-indices |alpha| = k, each
    counted once.  The pure-derivative seminorm used by the objective is a
    subset of these terms, so it can never exceed this quantity.
    """
    power = np.abs(f.coeffs) ** 2
    total = float(np.sum(power))
    scaled = [(TWO_PI * fr.astype(np.float64)) for fr in f.grid.freqs]
    m = f.grid.m
    for alpha in itertools.product(range(k + 1), repeat=m):
        if sum(alpha) != k:
            continue
        mult = np.ones(f.grid.samples)
        for axis, a in enumerate(alpha):
            if a == 0:
                continue
            shape = [1] * m
            shape[axis] = len(scaled[axis])
            mult = mult * (scaled[axis] ** (2 * a)).reshape(shape)
        total += float(np.sum(mult * power))
    return total


def bessel_sobolev_norm(f: SpectralField, k: int) -> float:
    """Bessel-potential H^k norm sqrt(sum (1+|l|^2)^k |f_hat|^2)."""
    sq = np.zeros(f.grid.samples)
    for axis, fr in enumerate(f.grid.freqs):
        shape = [1] * f.grid.m
        shape[axis] = len(fr)
        sq = sq + (fr.astype(np.float64) ** 2).reshape(shape)
    return float(np.sqrt(np.sum((1.0 + sq) ** k * np.abs(f.coeffs) ** 2)))
