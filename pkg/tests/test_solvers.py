"""Gradient-descent and exact solvers: agreement, optimality, stability."""

import numpy as np
import pytest

from sobfit import (
    DivergenceError,
    Dataset,
    FrequencyWeight,
    GDParams,
    GriddedData,
    GridSpec,
    SpectralField,
    bin_to_grid,
    build_linear_system,
    gd_stability_limit,
    kernel_predict_many,
    objective,
    objective_gradient,
    random_band_limited_field,
    solve_gd,
    solve_kernel,
    solve_linear,
)


def random_instance(rng, grid: GridSpec, n: int) -> GriddedData:
    pts = rng.uniform(0.02, 0.98, size=(n, grid.m))
    vals = rng.standard_normal(n)
    return bin_to_grid(Dataset.from_raw(pts, vals), grid)


class TestSolveGD:
    def test_empty_data_returns_zero_in_one_check(self):
        g = GridSpec((16,))
        field, report = solve_gd(GriddedData.empty(g), FrequencyWeight(k=1, lam=1.0))
        assert np.all(field.values == 0.0)
        assert report.converged and report.iterations == 0
        assert report.final_objective == 0.0

    def test_matches_linear_solver(self):
        rng = np.random.default_rng(42)
        g = GridSpec((32,))
        data = random_instance(rng, g, 5)
        fw = FrequencyWeight(k=1, lam=0.1)
        f_gd, rep_gd = solve_gd(data, fw)
        f_lin, _ = solve_linear(data, fw)
        assert rep_gd.converged
        assert np.max(np.abs(f_gd.values - f_lin.values)) <= 1e-6

    def test_excessive_learning_rate_diverges(self):
        rng = np.random.default_rng(13)
        g = GridSpec((16,))
        data = random_instance(rng, g, 4)
        fw = FrequencyWeight(k=1, lam=0.5)
        delta = 10.0 * gd_stability_limit(data, fw)
        with pytest.raises(DivergenceError, match="learning rate"):
            solve_gd(data, fw, GDParams(learning_rate=delta))

    def test_trace_monotone_below_stability_limit(self):
        rng = np.random.default_rng(14)
        g = GridSpec((32,))
        data = random_instance(rng, g, 6)
        fw = FrequencyWeight(k=1, lam=0.2)
        _, report = solve_gd(data, fw)
        trace = np.asarray(report.objective_trace)
        assert np.all(np.diff(trace) <= 1e-12 * np.maximum(1.0, trace[:-1]))

    def test_max_iters_reports_not_converged(self):
        rng = np.random.default_rng(15)
        g = GridSpec((64,))
        data = random_instance(rng, g, 5)
        fw = FrequencyWeight(k=1, lam=0.5)
        _, report = solve_gd(data, fw, GDParams(max_iters=5, grad_tol=1e-14, objective_tol=1e-300))
        assert not report.converged
        assert report.iterations == 5

    def test_objective_not_below_exact_minimum(self):
        rng = np.random.default_rng(16)
        g = GridSpec((32,))
        data = random_instance(rng, g, 5)
        fw = FrequencyWeight(k=1, lam=0.3)
        _, rep_gd = solve_gd(data, fw)
        _, rep_lin = solve_linear(data, fw)
        assert rep_lin.final_objective <= rep_gd.final_objective + 1e-12

    def test_subcritical_order_warns(self):
        g = GridSpec((8, 8))
        data = GriddedData.from_entries(g, {3: 0.5, 9: -0.5})
        with pytest.warns(UserWarning, match="m/2"):
            solve_gd(data, FrequencyWeight(k=1, lam=1.0), GDParams(max_iters=10))


class TestSolveLinear:
    def test_empty_data_zero_field(self):
        g = GridSpec((16,))
        field, report = solve_linear(GriddedData.empty(g), FrequencyWeight(k=1, lam=1.0))
        assert np.all(field.values == 0.0) and report.converged

    def test_antisymmetric_pair_gives_odd_field(self):
        g = GridSpec((32,))
        data = GriddedData.from_entries(g, {4: 0.9, 28: -0.9})  # cells j and N-j
        fw = FrequencyWeight(k=1, lam=0.05)
        field, _ = solve_linear(data, fw)
        v = field.values
        reflected = np.roll(v[::-1], 1)
        np.testing.assert_allclose(reflected, -v, atol=1e-12)

    def test_first_order_optimality(self):
        rng = np.random.default_rng(17)
        g = GridSpec((32,))
        data = random_instance(rng, g, 6)
        fw = FrequencyWeight(k=2, lam=0.01)
        field, _ = solve_linear(data, fw)
        gnorm = float(np.linalg.norm(objective_gradient(field, data, fw).flat))
        assert gnorm <= 1e-8 * (1.0 + float(np.linalg.norm(data.values)))

    def test_dense_and_cg_agree(self):
        rng = np.random.default_rng(18)
        g = GridSpec((16, 8))
        data = random_instance(rng, g, 7)
        fw = FrequencyWeight(k=2, lam=0.05)
        f_dense, _ = solve_linear(data, fw, method="dense")
        f_cg, _ = solve_linear(data, fw, method="cg")
        assert np.max(np.abs(f_dense.values - f_cg.values)) <= 1e-9

    def test_perturbation_optimality(self):
        rng = np.random.default_rng(19)
        g = GridSpec((32,))
        data = random_instance(rng, g, 5)
        fw = FrequencyWeight(k=1, lam=0.2)
        field, _ = solve_linear(data, fw)
        base = objective(field, data, fw)
        for _ in range(50):
            phi = random_band_limited_field(g, 10, rng)
            for eps in (1e-3, -1e-3):
                bumped = SpectralField.from_values(g, field.values + eps * phi.values)
                assert objective(bumped, data, fw) >= base - 1e-15

    def test_system_matrix_positive_definite(self):
        rng = np.random.default_rng(20)
        g = GridSpec((16,))
        data = random_instance(rng, g, 4)
        system = build_linear_system(data, FrequencyWeight(k=1, lam=0.5))
        eigs = np.linalg.eigvalsh(system.system_matrix())
        assert eigs.min() > 0
        assert np.all(system.M >= 0)

    def test_dense_solution_solves_stationarity(self):
        # the coefficient-space solve equals the operator-form solve
        rng = np.random.default_rng(21)
        g = GridSpec((4, 4, 4))
        data = random_instance(rng, g, 6)
        fw = FrequencyWeight(k=2, lam=0.2)
        f_dense, _ = solve_linear(data, fw, method="dense")
        f_cg, _ = solve_linear(data, fw, method="cg")
        assert np.max(np.abs(f_dense.values - f_cg.values)) <= 1e-9

    def test_grid_smaller_than_data_rejected(self):
        g = GridSpec((2,))
        data = GriddedData.from_entries(g, {0: 1.0, 1: -1.0})
        ds = Dataset.from_raw(np.array([[0.1], [0.4], [0.6], [0.9]]), np.ones(4))
        binned = bin_to_grid(ds, g)
        assert binned.n <= 2  # binning collapses, stays legal
        assert solve_linear(data, FrequencyWeight(k=1, lam=1.0))


class TestThreeSolverAgreement:
    # The kernel route solves the continuum problem; its agreement with the
    # grid solvers is limited by the grid's own representable band, so these
    # instances pair the fixed tolerances with grids fine enough to hold them.

    def test_one_dimensional_all_three(self):
        rng = np.random.default_rng(22)
        g = GridSpec((128,))
        cells = rng.choice(np.arange(5, 123), size=6, replace=False)
        vals = rng.standard_normal(6)
        vals -= vals.mean()
        ds = Dataset(cells.reshape(-1, 1) / 128.0, vals)
        binned = bin_to_grid(ds, g)
        fw = FrequencyWeight(k=1, lam=0.1)
        f_lin, _ = solve_linear(binned, fw)
        f_gd, rep_gd = solve_gd(binned, fw, GDParams(max_iters=400_000))
        assert rep_gd.converged
        assert np.max(np.abs(f_gd.values - f_lin.values)) <= 1e-6
        # kernel route against a reference grid whose band covers the series
        fine = GridSpec((512,))
        f_ref, _ = solve_linear(bin_to_grid(ds, fine), fw)
        model = solve_kernel(ds, fw, 512)
        pred = kernel_predict_many(model, fine.coordinate_matrix())
        assert np.max(np.abs(pred - f_ref.flat)) <= 1e-3

    def test_two_dimensional_kernel_vs_linear(self):
        rng = np.random.default_rng(23)
        g = GridSpec((32, 32))
        flat_cells = rng.choice(g.size, size=6, replace=False)
        pts = np.array([g.cell_coordinates(i) for i in flat_cells])
        pts = np.clip(pts, 1.0 / 64, 1 - 1.0 / 64)
        vals = rng.standard_normal(6)
        vals -= vals.mean()
        ds = Dataset(pts, vals)
        binned = bin_to_grid(ds, g)
        fw = FrequencyWeight(k=2, lam=0.01)
        f_lin, _ = solve_linear(binned, fw)
        model = solve_kernel(ds, fw, 128)
        sample = rng.choice(g.size, size=100, replace=False)
        pred = kernel_predict_many(model, g.coordinate_matrix()[sample])
        assert np.max(np.abs(pred - f_lin.flat[sample])) <= 1e-3

    def test_two_dimensional_gd_vs_linear(self):
        rng = np.random.default_rng(24)
        g = GridSpec((32, 32))
        data = random_instance(rng, g, 6)
        fw = FrequencyWeight(k=1, lam=0.01)  # subcritical k: solvers warn but run
        with pytest.warns(UserWarning):
            f_lin, _ = solve_linear(data, fw)
        with pytest.warns(UserWarning):
            f_gd, rep_gd = solve_gd(data, fw)
        assert rep_gd.converged
        assert np.max(np.abs(f_gd.values - f_lin.values)) <= 1e-6
