"""Choosing the penalty strength: the fitted solution's L2 norm vanishes at
both ends of the path (interpolation spikes for small lam, flattening for
large lam), so the preferred lam maximizes it.

Two routes are provided.  ``sweep_lambda`` solves exactly on a log grid and
takes the argmax: the reference path.  ``select_lambda_descent`` iterates a
field/penalty pair simultaneously: the field is refit by preconditioned
steepest descent (warm-started), and the penalty moves to the root of the
derivative of the refit norm, located by a local parabolic model in log(lam);
the step bracket shrinks as the iteration closes in.  Both return the same
maximizer up to grid spacing on well-behaved problems.

``norm_derivative_root`` exposes the one-step update quadratic: for a fixed
field, the norm of the hypothetical gradient step ||f - delta*grad C_lam(f)||^2
is an explicit quadratic in lam whose stationary point and bracket behavior
are reported verbatim.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np

from .grid import GriddedData, SpectralField
from .spectral import FrequencyWeight, penalty_multipliers
from .solvers import FitOperator, GDParams, solve_linear

DEFAULT_BRACKET = (1e-8, 1e8)


@dataclass(frozen=True)
class LambdaSweepResult:
    """Exact solutions along a penalty grid and the norm-maximizing choice."""

    lambdas: np.ndarray
    norms: np.ndarray
    max_residuals: np.ndarray
    lambda0: float
    field0: SpectralField
    endpoints: dict

    def to_rows(self) -> list[tuple[float, float, float]]:
        return [
            (float(l), float(n), float(r))
            for l, n, r in zip(self.lambdas, self.norms, self.max_residuals)
        ]


def log_lambda_grid(lo: float, hi: float, count: int) -> np.ndarray:
    if count < 1:
        raise ValueError("lambda grid needs at least one point")
    if not (0 < lo <= hi):
        raise ValueError("lambda bounds must be positive with lo <= hi")
    return np.geomspace(lo, hi, count)


def sweep_lambda(
    data: GriddedData, fw_template: FrequencyWeight, lambda_grid
) -> LambdaSweepResult:
    """Solve exactly at every grid lam; argmax of the L2 norms, ties to the smallest."""
    grid = np.asarray(lambda_grid, dtype=np.float64).reshape(-1)
    if grid.size == 0:
        raise ValueError("lambda grid is empty")
    if np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ValueError("lambda grid must be positive and strictly increasing")
    norms = np.zeros(grid.size)
    residuals = np.zeros(grid.size)
    best_idx = 0
    best_field: SpectralField | None = None
    for i, lam in enumerate(grid):
        try:
            field, report = solve_linear(data, fw_template.with_lambda(lam))
        except Exception as exc:
            raise RuntimeError(f"solver failed at lambda={lam:g}") from exc
        norms[i] = report.l2_norm
        residuals[i] = max((abs(r) for r in report.data_residuals), default=0.0)
        if best_field is None or norms[i] > norms[best_idx]:
            best_idx = i
            best_field = field
    top = float(np.max(norms))
    endpoints = {
        "low_norm_ratio": float(norms[0] / top) if top > 0 else 0.0,
        "high_norm_ratio": float(norms[-1] / top) if top > 0 else 0.0,
    }
    return LambdaSweepResult(
        lambdas=grid,
        norms=norms,
        max_residuals=residuals,
        lambda0=float(grid[best_idx]),
        field0=best_field,
        endpoints=endpoints,
    )


@dataclass(frozen=True)
class RootResult:
    """Outcome of the one-step-update norm quadratic on a bracket."""

    lambda0: float
    flag: str  # "vertex-max", "endpoint" or "degenerate"
    vertex: float | None
    coefficients: tuple[float, float, float]  # n(lam) = A - 2*B*lam + C*lam^2


def norm_derivative_root(
    field: SpectralField,
    data: GriddedData,
    fw_template: FrequencyWeight,
    delta: float,
    bracket: tuple[float, float],
) -> RootResult:
    """Stationary point of lam -> ||f - delta * grad C_lam(f)||^2 on a bracket.

    The gradient is affine in lam, so the squared norm is the quadratic
    A - 2*B*lam + C*lam^2 with C >= 0.  The stationary point is returned when
    it lies inside the bracket and is a maximum; otherwise the bracket
    endpoint with the larger updated norm.  A vanishing quadratic coefficient
    degenerates to the lower endpoint, flagged.
    """
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    if not delta > 0:
        raise ValueError("delta must be positive")
    op = FitOperator(data, fw_template)
    size = field.grid.size
    v = field.flat
    q = penalty_multipliers(field.grid, fw_template).reshape(-1)
    fhat = np.fft.fftn(field.values)
    # grad C_lam = g0 + lam * g1 on space samples
    g1 = (2.0 / size) * np.fft.ifftn(q.reshape(field.grid.samples) * fhat).real.reshape(-1)
    g0 = (2.0 / size) * v.copy()
    if data.n:
        g0[data.indices] += 2.0 * (v[data.indices] - data.values)
    u0 = v - delta * g0
    u1 = delta * g1
    A = float(np.mean(u0 * u0))
    B = float(np.mean(u0 * u1))
    C = float(np.mean(u1 * u1))
    scale = max(A, 1e-300)
    if C <= 1e-30 * scale:
        return RootResult(lambda0=lo, flag="degenerate", vertex=None, coefficients=(A, B, C))
    vertex = B / C
    curvature_negative = C < 0  # cannot happen for a true mean of squares
    if curvature_negative and lo <= vertex <= hi:
        return RootResult(lambda0=vertex, flag="vertex-max", vertex=vertex, coefficients=(A, B, C))
    norm_at = lambda lam: A - 2.0 * B * lam + C * lam * lam
    lambda0 = lo if norm_at(lo) >= norm_at(hi) else hi
    return RootResult(lambda0=lambda0, flag="endpoint", vertex=vertex, coefficients=(A, B, C))


@dataclass
class DescentState:
    """Progress of the simultaneous field/penalty iteration."""

    field: SpectralField
    lambda_current: float
    iterations: int
    norm_trace: list[float] = dataclass_field(default_factory=list)
    lambda_trace: list[float] = dataclass_field(default_factory=list)
    converged: bool = False
    bracket_fallback: bool = False
    refit_evaluations: int = 0


def _refit(op: FitOperator, v0: np.ndarray, grad_tol: float, max_iters: int) -> np.ndarray:
    """Preconditioned steepest descent with exact line search, warm-started."""
    v = v0.copy()
    for _ in range(max_iters):
        fhat = np.fft.fftn(v.reshape(op.grid.samples))
        g = op.gradient_flat(v, fhat)
        if float(np.linalg.norm(g)) <= grad_tol:
            break
        d = op.precondition(g)
        curvature = 2.0 * float(d @ op.apply(d))
        if curvature <= 0:
            break
        v = v - (float(g @ d) / curvature) * d
    return v


def select_lambda_descent(
    data: GriddedData,
    fw_template: FrequencyWeight,
    params: GDParams | None = None,
    lambda_init: float = 1.0,
    bracket: tuple[float, float] = DEFAULT_BRACKET,
) -> tuple[float, SpectralField, DescentState]:
    """Simultaneously iterate the field and the penalty toward the norm peak.

    Each outer iteration refits the field at the current lam by warm-started
    preconditioned steepest descent, then moves log10(lam) to the stationary
    point of a local parabola through the refit norms at three nearby lams
    (hill-climbing outward while the peak is not yet bracketed, halving the
    probe step once it is).  Stops when both lam and the field norm are
    stationary within 1e-4 / 1e-6 relative over three consecutive iterations.
    If no interior maximum exists inside the bracket, the better endpoint is
    returned with ``bracket_fallback`` set.
    """
    params = params or GDParams()
    lo, hi = bracket
    if not (0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    if not lo <= lambda_init <= hi:
        raise ValueError("lambda_init must lie inside the bracket")
    grad_tol = (
        params.grad_tol
        if params.grad_tol is not None
        else 1e-10 * (1.0 + float(np.linalg.norm(data.values)))
    )
    inner_cap = min(params.max_iters, 5000)

    log_lo, log_hi = np.log10(lo), np.log10(hi)
    x = float(np.clip(np.log10(lambda_init), log_lo, log_hi))
    h = 0.5
    v_warm = np.zeros(data.grid.size)
    cache: dict[float, tuple[float, np.ndarray]] = {}
    state = DescentState(
        field=SpectralField.zero(data.grid), lambda_current=10.0**x, iterations=0
    )

    def refit_norm(log_lam: float) -> float:
        nonlocal v_warm
        key = round(log_lam, 12)
        if key in cache:
            return cache[key][0]
        lam = 10.0**key
        op = FitOperator(data, fw_template.with_lambda(lam))
        v = _refit(op, v_warm, grad_tol, inner_cap)
        v_warm = v
        state.refit_evaluations += 1
        norm = float(np.sqrt(np.mean(v * v)))
        cache[key] = (norm, v)
        return norm

    stationary_streak = 0
    prev_norm = None
    for outer in range(1, 201):
        xl = max(x - h, log_lo)
        xr = min(x + h, log_hi)
        n_c = refit_norm(x)
        n_l = refit_norm(xl) if xl < x else n_c
        n_r = refit_norm(xr) if xr > x else n_c
        if n_l > n_c and n_l >= n_r:
            x_new = xl
        elif n_r > n_c:
            x_new = xr
        else:
            denom = n_l - 2.0 * n_c + n_r
            if denom < 0:
                vertex = x + 0.5 * h * (n_l - n_r) / denom
                vertex = float(np.clip(vertex, xl, xr))
                x_new = vertex if refit_norm(vertex) >= n_c else x
            else:
                x_new = x  # flat triple: nothing to move toward
            h *= 0.5
        x_new = float(np.clip(x_new, log_lo, log_hi))
        norm_new = refit_norm(x_new)
        state.iterations = outer
        state.lambda_trace.append(10.0**x_new)
        state.norm_trace.append(norm_new)

        lam_change = abs(10.0**x_new / 10.0**x - 1.0)
        norm_change = (
            abs(norm_new - prev_norm) / max(abs(norm_new), 1e-300)
            if prev_norm is not None
            else np.inf
        )
        x = x_new
        prev_norm = norm_new
        if lam_change <= 1e-4 and norm_change <= 1e-6:
            stationary_streak += 1
        else:
            stationary_streak = 0
        if stationary_streak >= 3 or h < 1e-7:
            state.converged = True
            break

    lambda0 = 10.0**x
    state.lambda_current = lambda0
    state.bracket_fallback = x <= log_lo + 1e-12 or x >= log_hi - 1e-12
    final_v = cache[round(x, 12)][1]
    state.field = SpectralField(data.grid, final_v.reshape(data.grid.samples))
    return lambda0, state.field, state
