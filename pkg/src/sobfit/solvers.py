"""Two routes to the unique minimizer of the discrete objective.

``solve_gd`` runs plain gradient descent on the real space samples (the DFT
coefficients follow by the unitary transform), ``solve_linear`` solves the
stationarity system exactly.  The stationarity condition in space domain is

    (1/size) * ifftn(w * fftn(v)) + s * v = s * a

with ``w`` the frequency multiplier array and ``s`` the 0/1 indicator of
occupied data cells.  The left-hand operator is symmetric positive definite:
its Fourier part has eigenvalues w(l)/size >= 1/size and the data part is a
rank-n nonnegative diagonal.  Small grids assemble the equivalent dense
system in a real cosine/sine coefficient basis; large grids use conjugate
gradients with the exactly-invertible Fourier part as preconditioner.
"""

from __future__ import annotations

import json
import time
import warnings
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path

import numpy as np

from .grid import GriddedData, GridSpec, SpectralField
from .spectral import (
    FrequencyWeight,
    kgrad_norm_sq,
    l2_norm_sq,
    objective,
    penalty_multipliers,
    weight_array,
)

DENSE_GRID_LIMIT = 4096


class DivergenceError(RuntimeError):
    """Gradient descent objective increased repeatedly (learning rate too large)."""


@dataclass(frozen=True)
class GDParams:
    """Gradient descent controls.

    ``learning_rate=None`` selects half the stability limit automatically.
    ``grad_tol=None`` resolves to 1e-10 * (1 + ||data values||).
    ``objective_tol`` is a relative objective-change stop; its tiny default
    only fires once the objective is numerically stagnant, leaving the
    gradient tolerance in charge of accuracy.
    """

    learning_rate: float | None = None
    max_iters: int = 200_000
    grad_tol: float | None = None
    objective_tol: float = 1e-300

    def __post_init__(self):
        if self.learning_rate is not None and not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.grad_tol is not None and not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if not self.objective_tol > 0:
            raise ValueError("objective_tol must be positive")


@dataclass
class FitReport:
    """Solver diagnostics for one fit."""

    lam: float
    k: int
    scale_mode: str
    solver: str
    iterations: int
    converged: bool
    final_objective: float
    objective_trace: list[float]
    data_residuals: list[float]
    l2_norm: float
    kgrad_norm: float
    extras: dict = dataclass_field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "k": self.k,
            "scale_mode": self.scale_mode,
            "solver": self.solver,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_objective": self.final_objective,
            "objective_trace": list(map(float, self.objective_trace)),
            "data_residuals": list(map(float, self.data_residuals)),
            "l2_norm": self.l2_norm,
            "kgrad_norm": self.kgrad_norm,
            "extras": self.extras,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            lam=d["lambda"],
            k=d["k"],
            scale_mode=d["scale_mode"],
            solver=d["solver"],
            iterations=d["iterations"],
            converged=d["converged"],
            final_objective=d["final_objective"],
            objective_trace=list(d["objective_trace"]),
            data_residuals=list(d["data_residuals"]),
            l2_norm=d["l2_norm"],
            kgrad_norm=d["kgrad_norm"],
            extras=dict(d.get("extras", {})),
        )


def save_fit_report(report: FitReport, path) -> None:
    payload = report.to_dict()
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def load_fit_report(path) -> FitReport:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    payload.pop("timestamp", None)
    return FitReport.from_dict(payload)


class FitOperator:
    """The stationarity operator, its preconditioner and objective pieces."""

    def __init__(self, data: GriddedData, fw: FrequencyWeight):
        self.data = data
        self.fw = fw
        self.grid = data.grid
        self.size = self.grid.size
        self.weights = weight_array(self.grid, fw)
        self.indices = data.indices
        self.target = data.values

    def rhs(self) -> np.ndarray:
        b = np.zeros(self.size)
        if self.data.n:
            b[self.indices] = self.target
        return b

    def apply(self, v: np.ndarray) -> np.ndarray:
        """(1/size) * ifftn(w * fftn(v)) + s*v for a flat vector."""
        shaped = v.reshape(self.grid.samples)
        out = np.fft.ifftn(self.weights * np.fft.fftn(shaped)).real / self.size
        out = out.reshape(-1)
        if self.data.n:
            out[self.indices] += v[self.indices]
        return out

    def precondition(self, r: np.ndarray) -> np.ndarray:
        """Exact inverse of the Fourier part: size * ifftn(fftn(r) / w)."""
        shaped = r.reshape(self.grid.samples)
        return (np.fft.ifftn(np.fft.fftn(shaped) / self.weights).real * self.size).reshape(-1)

    def gradient_flat(self, v: np.ndarray, fhat: np.ndarray) -> np.ndarray:
        g = (2.0 / self.size) * np.fft.ifftn(self.weights * fhat).real
        g = g.reshape(-1)
        if self.data.n:
            g[self.indices] += 2.0 * (v[self.indices] - self.target)
        return g

    def objective_from_fhat(self, v: np.ndarray, fhat: np.ndarray) -> float:
        norm_part = float(np.sum(self.weights * np.abs(fhat) ** 2)) / self.size**2
        misfit = 0.0
        if self.data.n:
            misfit = float(np.sum((v[self.indices] - self.target) ** 2))
        return norm_part + misfit

    def hessian_upper_bound(self) -> float:
        """Upper bound on the largest Hessian eigenvalue of the objective."""
        return 2.0 * (float(np.max(self.weights)) / self.size + 1.0)


def gd_stability_limit(data: GriddedData, fw: FrequencyWeight) -> float:
    """Largest provably stable learning rate, 2 / L_max."""
    return 2.0 / FitOperator(data, fw).hessian_upper_bound()


def _finalize_report(
    field: SpectralField,
    data: GriddedData,
    fw: FrequencyWeight,
    solver: str,
    iterations: int,
    converged: bool,
    trace: list[float],
    extras: dict,
) -> FitReport:
    residuals = (field.flat[data.indices] - data.values) if data.n else np.array([])
    return FitReport(
        lam=fw.lam,
        k=fw.k,
        scale_mode=fw.scale_mode,
        solver=solver,
        iterations=iterations,
        converged=converged,
        final_objective=objective(field, data, fw),
        objective_trace=trace,
        data_residuals=residuals.tolist(),
        l2_norm=float(np.sqrt(l2_norm_sq(field))),
        kgrad_norm=float(np.sqrt(kgrad_norm_sq(field, fw))),
        extras=extras,
    )


def solve_gd(
    data: GriddedData, fw: FrequencyWeight, params: GDParams | None = None
) -> tuple[SpectralField, FitReport]:
    """Minimize the objective by fixed-step gradient descent from zero.

    Stops when the gradient norm falls below ``grad_tol`` or the relative
    objective change falls below ``objective_tol``.  Raises
    :class:`DivergenceError` after five consecutive objective increases,
    which only happens above the stability limit.
    """
    params = params or GDParams()
    fw.warn_if_subcritical(data.grid.m)
    if data.grid.size < data.n:
        raise ValueError("grid has fewer cells than data points")
    op = FitOperator(data, fw)
    limit = 2.0 / op.hessian_upper_bound()
    delta = params.learning_rate if params.learning_rate is not None else 0.5 * limit
    grad_tol = (
        params.grad_tol
        if params.grad_tol is not None
        else 1e-10 * (1.0 + float(np.linalg.norm(data.values)))
    )

    v = np.zeros(op.size)
    trace: list[float] = []
    increases = 0
    converged = False
    iterations = 0
    for it in range(params.max_iters + 1):
        fhat = np.fft.fftn(v.reshape(op.grid.samples))
        current = op.objective_from_fhat(v, fhat)
        if trace:
            if current > trace[-1] * (1.0 + 1e-12):
                increases += 1
                if increases >= 5:
                    raise DivergenceError(
                        f"objective increased 5 steps in a row with learning rate {delta:g}; "
                        f"the stability limit for this problem is {limit:g}"
                    )
            else:
                increases = 0
            if abs(current - trace[-1]) <= params.objective_tol * max(1.0, abs(current)):
                trace.append(current)
                converged = True
                iterations = it
                break
        trace.append(current)
        g = op.gradient_flat(v, fhat)
        if float(np.linalg.norm(g)) <= grad_tol:
            converged = True
            iterations = it
            break
        if it == params.max_iters:
            iterations = it
            break
        v = v - delta * g
    field = SpectralField(op.grid, v.reshape(op.grid.samples))
    extras = {"learning_rate": delta, "stability_limit": limit, "grad_tol": grad_tol}
    return field, _finalize_report(field, data, fw, "gd", iterations, converged, trace, extras)


@dataclass
class LinearSystem:
    """Dense stationarity system in a real cosine/sine coefficient basis.

    Columns are an orthonormal basis of the grid functions under the mean
    inner product: 1 and the self-paired Nyquist cosines with unit weight,
    sqrt(2)*cos / sqrt(2)*sin for every frequency pair (l, -l).  ``X`` maps
    basis coefficients to values at the occupied cells, ``M`` holds the
    multiplier penalties q(l) per column, ``L`` the data values and ``A`` the
    solved coefficients.
    """

    grid: GridSpec
    fw: FrequencyWeight
    X: np.ndarray
    M: np.ndarray
    L: np.ndarray
    pair_partner: np.ndarray
    A: np.ndarray | None = None

    def system_matrix(self) -> np.ndarray:
        sys = self.X.T @ self.X
        diag = 1.0 + self.fw.lam * self.M
        sys[np.diag_indices_from(sys)] += diag
        return sys

    def solve(self) -> np.ndarray:
        self.A = np.linalg.solve(self.system_matrix(), self.X.T @ self.L)
        return self.A

    def field(self) -> SpectralField:
        if self.A is None:
            self.solve()
        return SpectralField(self.grid, _coeff_vector_to_values(self.grid, self.A, self.pair_partner))


def _negation_permutation(grid: GridSpec) -> np.ndarray:
    """Flat index of -l (mod grid) for every flat frequency index l."""
    multi = np.unravel_index(np.arange(grid.size), grid.samples)
    neg = tuple((-ax) % n for ax, n in zip(multi, grid.samples))
    return np.ravel_multi_index(neg, grid.samples)


def build_linear_system(data: GriddedData, fw: FrequencyWeight) -> LinearSystem:
    """Assemble the dense coefficient-space system for a (small) grid."""
    grid = data.grid
    if grid.size > DENSE_GRID_LIMIT:
        raise ValueError(f"grid size {grid.size} exceeds the dense-system limit {DENSE_GRID_LIMIT}")
    partner = _negation_permutation(grid)
    freq_rows = grid.frequency_matrix().astype(np.float64)
    cells = np.array([grid.cell_coordinates(i) for i in data.indices], dtype=np.float64).reshape(
        data.n, grid.m
    )
    phases = 2.0 * np.pi * cells @ freq_rows.T
    X = np.empty((data.n, grid.size))
    own = np.arange(grid.size)
    selfpair = partner == own
    canonical = own < partner
    X[:, selfpair] = np.cos(phases[:, selfpair])
    X[:, canonical] = np.sqrt(2.0) * np.cos(phases[:, canonical])
    X[:, partner[canonical]] = np.sqrt(2.0) * np.sin(phases[:, canonical])
    q = penalty_multipliers(grid, fw).reshape(-1)
    return LinearSystem(grid=grid, fw=fw, X=X, M=q, L=data.values.copy(), pair_partner=partner)


def _coeff_vector_to_values(grid: GridSpec, A: np.ndarray, partner: np.ndarray) -> np.ndarray:
    own = np.arange(grid.size)
    coeffs = np.zeros(grid.size, dtype=np.complex128)
    selfpair = partner == own
    canonical = own < partner
    coeffs[selfpair] = A[selfpair]
    alpha = A[own[canonical]]
    beta = A[partner[canonical]]
    coeffs[own[canonical]] = (alpha - 1j * beta) / np.sqrt(2.0)
    coeffs[partner[canonical]] = (alpha + 1j * beta) / np.sqrt(2.0)
    return np.fft.ifftn(coeffs.reshape(grid.samples) * grid.size).real


def _solve_pcg(op: FitOperator) -> tuple[np.ndarray, int, float]:
    """Preconditioned conjugate gradients on the stationarity system."""
    b = op.rhs()
    bnorm = float(np.linalg.norm(b))
    x = np.zeros(op.size)
    if bnorm == 0.0:
        return x, 0, 0.0
    tol = 1e-13 * max(1.0, bnorm)
    max_iters = 10 * (op.data.n + 2) + 50
    r = b.copy()
    z = op.precondition(r)
    p = z.copy()
    rz = float(r @ z)
    res = bnorm
    it = 0
    for it in range(1, max_iters + 1):
        Ap = op.apply(p)
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        res = float(np.linalg.norm(r))
        if res <= tol:
            break
        z = op.precondition(r)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if res > tol:
        warnings.warn(f"conjugate gradients stopped at residual {res:g} (target {tol:g})", stacklevel=3)
    return x, it, res


def solve_linear(
    data: GriddedData, fw: FrequencyWeight, method: str = "auto"
) -> tuple[SpectralField, FitReport]:
    """Solve the stationarity system exactly.

    ``method`` is "dense" (coefficient-space system, grids up to
    DENSE_GRID_LIMIT cells), "cg" (operator form with multiplier
    preconditioning) or "auto".
    """
    fw.warn_if_subcritical(data.grid.m)
    if data.grid.size < data.n:
        raise ValueError("grid has fewer cells than data points")
    if method not in ("auto", "dense", "cg"):
        raise ValueError(f"unknown method {method!r}")
    if method == "auto":
        method = "dense" if data.grid.size <= DENSE_GRID_LIMIT else "cg"

    if data.n == 0:
        field = SpectralField.zero(data.grid)
        report = _finalize_report(field, data, fw, f"linear-{method}", 0, True, [0.0], {})
        return field, report

    if method == "dense":
        system = build_linear_system(data, fw)
        system.solve()
        field = system.field()
        extras = {"method": "dense", "system_size": data.grid.size}
        iterations = 1
    else:
        op = FitOperator(data, fw)
        x, iterations, res = _solve_pcg(op)
        field = SpectralField(data.grid, x.reshape(data.grid.samples))
        extras = {"method": "cg", "cg_residual": res}
    report = _finalize_report(
        field, data, fw, f"linear-{method}", iterations, True, [objective(field, data, fw)], extras
    )
    return field, report
