"""Uniform periodic grids and real-valued fields with cached DFT coefficients."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Equispaced sampling of the periodic unit cube (0, 1)^m.

    ``samples[i]`` is the number of samples along axis ``i``.  Counts must be
    even and at least 2 so that every nonzero frequency pairs with its
    negation (the lone Nyquist mode is self-paired).
    """

    samples: tuple[int, ...]

    def __post_init__(self):
        if isinstance(self.samples, (int, np.integer)):
            samples = (int(self.samples),)
        else:
            samples = tuple(int(s) for s in self.samples)
        if len(samples) < 1:
            raise ValueError("grid needs at least one axis")
        for s in samples:
            if s < 2 or s % 2 != 0:
                raise ValueError(f"per-axis sample counts must be even and >= 2, got {s}")
        object.__setattr__(self, "samples", samples)

    @property
    def m(self) -> int:
        """Spatial dimension."""
        return len(self.samples)

    @property
    def size(self) -> int:
        """Total number of grid cells."""
        return int(np.prod(self.samples))

    @cached_property
    def freqs(self) -> tuple[np.ndarray, ...]:
        """Signed integer DFT frequencies per axis, in FFT ordering."""
        return tuple(
            np.fft.fftfreq(s, d=1.0 / s).astype(np.int64) for s in self.samples
        )

    @property
    def max_bandwidth(self) -> int:
        """Largest representable |frequency| over all axes (the Nyquist index)."""
        return max(s // 2 for s in self.samples)

    def frequency_matrix(self) -> np.ndarray:
        """(size, m) array: signed frequency tuple of every cell, flat C order."""
        mesh = np.meshgrid(*self.freqs, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)

    def cell_coordinates(self, flat_index: int) -> tuple[float, ...]:
        """Coordinates in [0, 1)^m of the cell with the given flat index."""
        multi = np.unravel_index(int(flat_index), self.samples)
        return tuple(float(i) / s for i, s in zip(multi, self.samples))

    def coordinate_matrix(self) -> np.ndarray:
        """(size, m) array of cell coordinates in [0, 1)^m, flat C order."""
        axes = [np.arange(s, dtype=np.float64) / s for s in self.samples]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


@dataclass(frozen=True)
class SpectralField:
    """A real function sampled on a :class:`GridSpec`.

    Space samples are the source of truth; DFT coefficients are cached on
    first use.  Coefficients follow the Fourier-series convention
    ``coeffs = fftn(values) / grid.size`` so that
    ``sum |coeffs|^2 == mean(values**2)`` exactly (discrete Plancherel) and
    ``f(x) = sum_l coeffs[l] * exp(2*pi*i*l.x)`` at grid points.
    """

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64).reshape(self.grid.samples)
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def zero(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.samples))

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "SpectralField":
        return cls(grid, np.asarray(values, dtype=np.float64))

    @classmethod
    def from_coeffs(cls, grid: GridSpec, coeffs: np.ndarray) -> "SpectralField":
        """Build a field from series coefficients, checking Hermitian symmetry."""
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(grid.samples)
        vals = np.fft.ifftn(coeffs) * grid.size
        scale = np.max(np.abs(vals)) or 1.0
        if np.max(np.abs(vals.imag)) > 1e-10 * scale:
            raise ValueError("coefficients are not Hermitian-symmetric (field not real)")
        return cls(grid, vals.real)

    @cached_property
    def coeffs(self) -> np.ndarray:
        """Fourier-series coefficients on the signed frequency lattice."""
        c = np.fft.fftn(self.values) / self.grid.size
        c.setflags(write=False)
        return c

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True)
class GriddedData:
    """Point data after binning: one averaged value per occupied grid cell.

    ``indices`` are unique flat cell indices; ``values`` the collision-averaged
    data values and ``counts`` how many raw points fell into each cell.  The
    count-weighted value sum is zero for data produced by the binning pipeline
    (plain construction does not enforce it, so that single-cell test
    instances remain expressible).
    """

    grid: GridSpec
    indices: np.ndarray
    values: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).reshape(-1)
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        cnts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if not (idx.shape == vals.shape == cnts.shape):
            raise ValueError("indices, values and counts must have equal length")
        if idx.size:
            order = np.argsort(idx)
            idx, vals, cnts = idx[order], vals[order], cnts[order]
            if np.any(np.diff(idx) == 0):
                raise ValueError("duplicate cell index in gridded data")
            if idx[0] < 0 or idx[-1] >= self.grid.size:
                raise ValueError("cell index out of range")
            if np.any(cnts < 1):
                raise ValueError("cell counts must be positive")
        for name, arr in (("indices", idx), ("values", vals), ("counts", cnts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_entries(cls, grid: GridSpec, entries: dict) -> "GriddedData":
        """Build from a mapping ``flat index -> value`` or ``-> (value, count)``."""
        idx, vals, cnts = [], [], []
        for i, entry in entries.items():
            value, count = entry if isinstance(entry, tuple) else (entry, 1)
            idx.append(i)
            vals.append(value)
            cnts.append(count)
        return cls(grid, np.array(idx, dtype=np.int64), np.array(vals), np.array(cnts, dtype=np.int64))

    @classmethod
    def empty(cls, grid: GridSpec) -> "GriddedData":
        return cls(grid, np.array([], dtype=np.int64), np.array([]), np.array([], dtype=np.int64))

    @property
    def entries(self) -> dict[int, tuple[float, int]]:
        return {int(i): (float(v), int(c)) for i, v, c in zip(self.indices, self.values, self.counts)}

    @property
    def n(self) -> int:
        return int(self.indices.size)

    def weighted_value_sum(self) -> float:
        """Count-weighted value total; zero (to roundoff) for binned zero-mean data."""
        return float(np.sum(self.values * self.counts))


def negate_frequencies(coeffs: np.ndarray) -> np.ndarray:
    """Return ``c`` re-indexed from l to -l (mod the grid) on every axis."""
    out = coeffs
    for axis in range(coeffs.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


def random_band_limited_field(
    grid: GridSpec, max_freq: int, rng: np.random.Generator, scale: float = 1.0
) -> SpectralField:
    """Random real field whose coefficients vanish for ||l||_inf > max_freq.

    The band must fit strictly inside the grid (max_freq < N/2 on every axis)
    so the result is free of Nyquist ambiguity.
    """
    if max_freq >= min(s // 2 for s in grid.samples):
        raise ValueError("band must be strictly inside the grid's Nyquist range")
    raw = rng.standard_normal(grid.samples) + 1j * rng.standard_normal(grid.samples)
    sym = 0.5 * (raw + np.conj(negate_frequencies(raw)))
    mesh = np.meshgrid(*grid.freqs, indexing="ij")
    band = np.ones(grid.samples, dtype=bool)
    for g in mesh:
        band &= np.abs(g) <= max_freq
    sym = np.where(band, sym, 0.0)
    vals = np.fft.ifftn(sym * grid.size).real
    return SpectralField(grid, scale * vals)
