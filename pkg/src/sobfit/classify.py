"""Binary classification by sign of a fitted field on a quantized feature grid.

Pipeline: per-feature normalization to [-1, 1], PCA rotation, per-axis
quantization counts proportional to the standard deviation along each
principal axis (product close to a requested budget, each count even and at
least 2), affine mapping of scores into the open unit cube with a half-cell
inset, then the usual bin-and-fit machinery.  Prediction reads the fitted
field at the query's cell: strictly positive means the positive class.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, bin_to_grid, nearest_cell_indices
from .grid import GridSpec, SpectralField
from .solvers import FitReport, solve_linear
from .spectral import FrequencyWeight


@dataclass(frozen=True)
class FeatureTransform:
    """Normalization, PCA basis and quantization geometry of the feature space."""

    means: np.ndarray          # (d,) per raw feature
    scales: np.ndarray         # (d,) max absolute deviation per raw feature
    basis: np.ndarray          # (d, r) orthonormal principal directions, variance descending
    eigenvalues: np.ndarray    # (r,) covariance eigenvalues, descending
    counts: tuple[int, ...]    # per-axis quantization steps, even and >= 2
    quant_scale: float         # multiplier t with counts ~ sqrt(eigenvalue) * t
    score_min: np.ndarray      # (r,) training score range per axis
    score_max: np.ndarray

    @property
    def r(self) -> int:
        return len(self.counts)

    def normalized(self, features: np.ndarray) -> np.ndarray:
        return (features - self.means) / self.scales

    def scores(self, features: np.ndarray) -> np.ndarray:
        return self.normalized(features) @ self.basis

    def cube_coordinates(self, features: np.ndarray, clamp: bool = True) -> np.ndarray:
        """Map features into (0,1)^r; out-of-range scores clamp to the edge cells."""
        s = self.scores(np.atleast_2d(np.asarray(features, dtype=np.float64)))
        if clamp:
            outside = (s < self.score_min) | (s > self.score_max)
            if np.any(outside):
                warnings.warn(
                    "feature outside the training range; clamping to the boundary cell",
                    stacklevel=2,
                )
            s = np.clip(s, self.score_min, self.score_max)
        span = np.where(self.score_max > self.score_min, self.score_max - self.score_min, 1.0)
        inset = 0.5 / np.asarray(self.counts, dtype=np.float64)
        frac = (s - self.score_min) / span
        return inset + frac * (1.0 - 2.0 * inset)


def _even_count(x: float) -> int:
    return max(2, int(2 * round(x / 2.0)))


def fit_transform(features: np.ndarray, quant_budget: int) -> FeatureTransform:
    """Learn normalization, PCA and quantization counts from raw features."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2 or x.shape[1] < 1:
        raise ValueError("features must be an (n >= 2, d >= 1) matrix")
    if not np.all(np.isfinite(x)):
        raise ValueError("features must be finite")
    if quant_budget < 2:
        raise ValueError("quant_budget must be at least 2")
    means = x.mean(axis=0)
    dev = x - means
    scales = np.max(np.abs(dev), axis=0)
    flat_features = scales == 0
    if np.any(flat_features):
        warnings.warn(
            f"{int(np.sum(flat_features))} zero-variance feature(s); using unit scale",
            stacklevel=2,
        )
        scales = np.where(flat_features, 1.0, scales)
    z = dev / scales
    cov = (z.T @ z) / z.shape[0]
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]
    eigvals = np.maximum(eigvals, 0.0)
    keep = eigvals > max(eigvals[0], 0.0) * 1e-12
    if not np.any(keep):
        raise ValueError("feature covariance is identically zero")
    if not np.all(keep):
        warnings.warn(
            f"dropping {int(np.sum(~keep))} principal axis/axes with zero variance",
            stacklevel=2,
        )
    eigvals = eigvals[keep]
    basis = eigvecs[:, keep]
    sigma = np.sqrt(eigvals)
    t = float((quant_budget / np.prod(sigma)) ** (1.0 / sigma.size))
    counts = tuple(_even_count(s * t) for s in sigma)
    scores = z @ basis
    return FeatureTransform(
        means=means,
        scales=scales,
        basis=basis,
        eigenvalues=eigvals,
        counts=counts,
        quant_scale=t,
        score_min=scores.min(axis=0),
        score_max=scores.max(axis=0),
    )


@dataclass(frozen=True)
class ClassifierModel:
    """A fitted sign classifier: transform, grid, field and the label offset."""

    transform: FeatureTransform
    grid: GridSpec
    field: SpectralField
    fw: FrequencyWeight
    label_mean_offset: float


def _binary_labels(labels) -> np.ndarray:
    arr = np.asarray(labels)
    if arr.dtype == bool:
        return arr
    return arr.astype(np.float64) > 0.5


def train(
    features: np.ndarray,
    labels,
    fw: FrequencyWeight,
    quant_budget: int,
) -> tuple[ClassifierModel, FitReport]:
    """Fit the decision field from binary labels (positive -> +1, negative -> 0).

    Label values are zero-meaned before fitting; prediction only consumes the
    sign of the field, which the offset shifts so that both classes are
    nonzero with opposite signs.
    """
    pos = _binary_labels(labels)
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] != pos.size:
        raise ValueError("features and labels must have equal length")
    if pos.all() or not pos.any():
        raise ValueError("training needs at least one example of each class")
    transform = fit_transform(x, quant_budget)
    grid = GridSpec(transform.counts)
    cube = transform.cube_coordinates(x, clamp=False)
    dataset = Dataset.from_raw(cube, pos.astype(np.float64))
    binned = bin_to_grid(dataset, grid)
    field, report = solve_linear(binned, fw)
    model = ClassifierModel(
        transform=transform,
        grid=grid,
        field=field,
        fw=fw,
        label_mean_offset=dataset.mean_offset,
    )
    return model, report


def predict(model: ClassifierModel, feature) -> bool:
    """True for the positive class: fitted field strictly positive at the cell."""
    return bool(predict_many(model, np.atleast_2d(np.asarray(feature, dtype=np.float64)))[0])


def predict_many(model: ClassifierModel, features: np.ndarray) -> np.ndarray:
    cube = model.transform.cube_coordinates(features, clamp=True)
    cells = nearest_cell_indices(cube, model.grid)
    return model.field.flat[cells] > 0.0


def training_metrics(model: ClassifierModel, features: np.ndarray, labels) -> dict:
    """Accuracy and confusion counts of the model on the given examples."""
    truth = _binary_labels(labels)
    pred = predict_many(model, np.asarray(features, dtype=np.float64))
    tp = int(np.sum(pred & truth))
    tn = int(np.sum(~pred & ~truth))
    fp = int(np.sum(pred & ~truth))
    fn = int(np.sum(~pred & truth))
    total = int(truth.size)
    return {
        "accuracy": 100.0 * (tp + tn) / total if total else 0.0,
        "correct": tp + tn,
        "total": total,
        "confusion": {"tp": tp, "tn": tn, "fp": fp, "fn": fn},
    }


def extract_line_profile(
    model: ClassifierModel, axis_index: int, anchor_cell
) -> list[tuple[float, float]]:
    """Field values along the grid line through ``anchor_cell`` parallel to an axis."""
    grid = model.grid
    if not 0 <= axis_index < grid.m:
        raise ValueError(f"axis_index {axis_index} out of range for dimension {grid.m}")
    anchor = tuple(int(c) for c in np.atleast_1d(anchor_cell))
    if len(anchor) != grid.m:
        raise ValueError("anchor cell must have one index per axis")
    for c, s in zip(anchor, grid.samples):
        if not 0 <= c < s:
            raise ValueError(f"anchor cell {anchor} outside grid {grid.samples}")
    indexer = list(anchor)
    indexer[axis_index] = slice(None)
    line = model.field.values[tuple(indexer)]
    n = grid.samples[axis_index]
    return [(i / n, float(val)) for i, val in enumerate(line)]


def save_model(model: ClassifierModel, path) -> None:
    t = model.transform
    payload = {
        "transform": {
            "means": t.means.tolist(),
            "scales": t.scales.tolist(),
            "basis": t.basis.tolist(),
            "eigenvalues": t.eigenvalues.tolist(),
            "counts": list(t.counts),
            "quant_scale": t.quant_scale,
            "score_min": t.score_min.tolist(),
            "score_max": t.score_max.tolist(),
        },
        "grid": {"samples": list(model.grid.samples)},
        "field_values": model.field.flat.tolist(),
        "fw": {"k": model.fw.k, "lambda": model.fw.lam, "scale_mode": model.fw.scale_mode},
        "label_mean_offset": model.label_mean_offset,
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_model(path) -> ClassifierModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    t = payload["transform"]
    transform = FeatureTransform(
        means=np.asarray(t["means"]),
        scales=np.asarray(t["scales"]),
        basis=np.asarray(t["basis"]),
        eigenvalues=np.asarray(t["eigenvalues"]),
        counts=tuple(int(c) for c in t["counts"]),
        quant_scale=float(t["quant_scale"]),
        score_min=np.asarray(t["score_min"]),
        score_max=np.asarray(t["score_max"]),
    )
    grid = GridSpec(tuple(int(s) for s in payload["grid"]["samples"]))
    field = SpectralField(grid, np.asarray(payload["field_values"]).reshape(grid.samples))
    fw = FrequencyWeight(
        k=payload["fw"]["k"], lam=payload["fw"]["lambda"], scale_mode=payload["fw"]["scale_mode"]
    )
    return ClassifierModel(
        transform=transform,
        grid=grid,
        field=field,
        fw=fw,
        label_mean_offset=float(payload["label_mean_offset"]),
    )
