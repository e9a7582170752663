"""Point-data ingestion, zero-mean handling, grid binning and symmetric extension."""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import GriddedData, GridSpec


class DataFormatError(ValueError):
    """Raised for malformed input files or out-of-domain coordinates."""


@dataclass(frozen=True)
class Dataset:
    """Scattered points strictly inside (0,1)^m with zero-mean values.

    ``mean_offset`` records the constant subtracted upstream to reach zero
    mean, so that raw values can be reconstructed as value + mean_offset.
    """

    points: np.ndarray
    values: np.ndarray
    mean_offset: float = 0.0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        if pts.ndim != 2:
            raise ValueError("points must be an (n, m) array")
        vals = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if vals.shape[0] != pts.shape[0]:
            raise ValueError("points and values must have equal length")
        if pts.size and (np.min(pts) <= 0.0 or np.max(pts) >= 1.0):
            raise ValueError("all point components must lie strictly inside (0, 1)")
        if vals.size:
            scale = max(1.0, float(np.max(np.abs(vals))))
            if abs(float(np.sum(vals))) > 1e-9 * scale:
                raise ValueError(
                    "values must sum to zero; use Dataset.from_raw to subtract the mean"
                )
        pts.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "mean_offset", float(self.mean_offset))

    @classmethod
    def from_raw(cls, points, raw_values) -> "Dataset":
        """Zero-mean the values, recording the subtracted offset."""
        vals = np.asarray(raw_values, dtype=np.float64).reshape(-1)
        offset = float(np.mean(vals)) if vals.size else 0.0
        return cls(points, vals - offset, mean_offset=offset)

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def m(self) -> int:
        return int(self.points.shape[1]) if self.points.ndim == 2 else 1

    def to_json_dict(self) -> dict:
        return {
            "m": self.m,
            "points": self.points.tolist(),
            "values": self.values.tolist(),
            "mean_offset": self.mean_offset,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "Dataset":
        points = np.asarray(d["points"], dtype=np.float64).reshape(-1, d["m"])
        return cls(points, d["values"], mean_offset=float(d.get("mean_offset", 0.0)))


@dataclass(frozen=True)
class ExtensionSpec:
    """How a dataset was mapped into the periodic cube.

    ``mode`` is "none" or "even-symmetric"; ``original_bounds`` keeps the
    per-axis (min, max) of the coordinates before they were mapped into
    (0,1)^m, purely as provenance.
    """

    mode: str = "none"
    original_bounds: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.mode not in ("none", "even-symmetric"):
            raise ValueError(f"unknown extension mode {self.mode!r}")
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.original_bounds)
        for lo, hi in bounds:
            if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
                raise ValueError(f"invalid axis bounds ({lo}, {hi})")
        object.__setattr__(self, "original_bounds", bounds)


def _expected_header(m: int) -> list[str]:
    return [f"x{i + 1}" for i in range(m)] + ["a"]


def load_csv(source) -> Dataset:
    """Read a point dataset from CSV with header ``x1,...,xm,a``.

    Values are zero-meaned automatically; the subtracted offset is recorded on
    the returned dataset.  Coordinates must lie strictly inside (0, 1).
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_csv(fh)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("no data rows: file is empty") from None
    header = [h.strip() for h in header]
    m = len(header) - 1
    if m < 1 or header != _expected_header(m):
        raise DataFormatError(
            f"expected header x1,...,xm,a; got {','.join(header) or '(blank)'}"
        )
    points, raw = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != m + 1:
            raise DataFormatError(f"line {lineno}: expected {m + 1} fields, got {len(row)}")
        try:
            nums = [float(x) for x in row]
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: non-numeric field ({exc})") from None
        if any(not (0.0 < c < 1.0) for c in nums[:m]):
            raise DataFormatError(
                f"line {lineno}: point {tuple(nums[:m])} is on or outside the boundary of (0,1)^{m}"
            )
        points.append(nums[:m])
        raw.append(nums[m])
    if not points:
        raise DataFormatError("no data rows")
    return Dataset.from_raw(np.array(points), np.array(raw))


def save_csv(dataset: Dataset, target) -> None:
    """Write a dataset in the ``x1,...,xm,a`` CSV layout (zero-mean values)."""
    if isinstance(target, (str, Path)):
        with open(target, "w", newline="", encoding="utf-8") as fh:
            save_csv(dataset, fh)
            return
    writer = csv.writer(target)
    writer.writerow(_expected_header(dataset.m))
    for p, a in zip(dataset.points, dataset.values):
        writer.writerow([repr(float(c)) for c in p] + [repr(float(a))])


def dataset_to_json(dataset: Dataset, target) -> None:
    if isinstance(target, (str, Path)):
        Path(target).write_text(json.dumps(dataset.to_json_dict(), indent=2), encoding="utf-8")
    else:
        json.dump(dataset.to_json_dict(), target, indent=2)


def dataset_from_json(source) -> Dataset:
    if isinstance(source, (str, Path)):
        return Dataset.from_json_dict(json.loads(Path(source).read_text(encoding="utf-8")))
    return Dataset.from_json_dict(json.load(source))


def nearest_cell_indices(points: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Flat index of the nearest grid sample per point, ties toward lower index.

    Per axis the map is ceil(p*N - 1/2) mod N, which rounds to the nearest
    sample, sends exact half-way ties to the lower cell, and wraps points near
    1.0 to cell 0 (the periodically nearest sample).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    multi = []
    for axis, n_ax in enumerate(grid.samples):
        k = np.ceil(pts[:, axis] * n_ax - 0.5).astype(np.int64) % n_ax
        multi.append(k)
    return np.ravel_multi_index(multi, grid.samples)


def bin_to_grid(dataset: Dataset, grid: GridSpec) -> GriddedData:
    """Map points to their nearest cells, averaging values on collisions."""
    if dataset.m != grid.m:
        raise ValueError(f"dataset dimension {dataset.m} does not match grid dimension {grid.m}")
    if dataset.n == 0:
        return GriddedData.empty(grid)
    flat = nearest_cell_indices(dataset.points, grid)
    uniq, inverse, counts = np.unique(flat, return_inverse=True, return_counts=True)
    sums = np.zeros(uniq.size)
    np.add.at(sums, inverse, dataset.values)
    return GriddedData(grid, uniq, sums / counts, counts)


def even_extension(dataset: Dataset, ext: ExtensionSpec) -> Dataset:
    """Reflect the domain and data across every axis midpoint.

    Each point p spawns its 2^m mirror images, value copied unchanged, and
    the doubled domain is rescaled back into (0,1)^m: along every axis the
    images of coordinate x are x/2 and 1 - x/2.  Zero mean is preserved since
    every value is replicated the same number of times.
    """
    if ext.mode != "even-symmetric":
        raise ValueError(f"even_extension requires mode 'even-symmetric', got {ext.mode!r}")
    if dataset.n == 0:
        return dataset
    m = dataset.m
    halves = dataset.points / 2.0
    out_pts = []
    out_vals = []
    for flips in np.ndindex(*(2,) * m):
        img = halves.copy()
        for axis, flip in enumerate(flips):
            if flip:
                img[:, axis] = 1.0 - halves[:, axis]
        out_pts.append(img)
        out_vals.append(dataset.values)
    pts = np.concatenate(out_pts, axis=0)
    vals = np.concatenate(out_vals)
    on_edge = (pts <= 0.0) | (pts >= 1.0)
    if np.any(on_edge):
        warnings.warn("reflected point landed on the domain boundary; nudging inward", stacklevel=2)
        eps = 1e-9
        pts = np.where(pts <= 0.0, eps, pts)
        pts = np.where(pts >= 1.0, 1.0 - eps, pts)
    return Dataset(pts, vals, mean_offset=dataset.mean_offset)


def dataset_from_rows(rows: list[str]) -> Dataset:
    """Convenience: parse CSV content given as a list of text lines."""
    return load_csv(io.StringIO("\n".join(rows)))
