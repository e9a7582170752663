"""Norms, multiplier weights, objective, gradient, weak-form residual."""

import numpy as np
import pytest

from sobfit import (
    FrequencyWeight,
    GriddedData,
    GridSpec,
    SpectralField,
    bessel_sobolev_norm,
    el_residual,
    frequency_weight,
    kgrad_norm_sq,
    l2_norm_sq,
    l2_norm_sq_freq,
    mixed_sobolev_norm_sq,
    objective,
    objective_gradient,
    random_band_limited_field,
    solve_linear,
    sup_norm_bound_constant,
)
from helpers import brute_objective, central_difference_gradient

TWO_PI = 2 * np.pi


def cosine_field(grid: GridSpec, freq: int = 1) -> SpectralField:
    x = np.arange(grid.samples[0]) / grid.samples[0]
    return SpectralField.from_values(grid, np.cos(TWO_PI * freq * x))


class TestFrequencyWeight:
    def test_zero_frequency_is_one(self):
        assert frequency_weight((0, 0), FrequencyWeight(k=3, lam=7.0)) == 1.0

    def test_one_dimensional_value(self):
        fw = FrequencyWeight(k=1, lam=1.0, scale_mode="2pi")
        assert frequency_weight((1,), fw) == pytest.approx(1 + TWO_PI**2, rel=1e-14)

    def test_two_dimensional_value(self):
        fw = FrequencyWeight(k=2, lam=0.5, scale_mode="2pi")
        expected = 1 + 0.5 * ((TWO_PI) ** 4 + (2 * TWO_PI) ** 4)
        assert frequency_weight((1, 2), fw) == pytest.approx(expected, rel=1e-14)

    def test_even_in_each_component(self):
        fw = FrequencyWeight(k=2, lam=0.3)
        rng = np.random.default_rng(3)
        for _ in range(20):
            l = rng.integers(-8, 9, size=3)
            for axis in range(3):
                flipped = l.copy()
                flipped[axis] = -flipped[axis]
                assert frequency_weight(l, fw) == pytest.approx(frequency_weight(flipped, fw))

    def test_validation(self):
        with pytest.raises(ValueError):
            FrequencyWeight(k=0, lam=1.0)
        with pytest.raises(ValueError):
            FrequencyWeight(k=1, lam=0.0)
        with pytest.raises(ValueError):
            FrequencyWeight(k=1, lam=1.0, scale_mode="tau")


class TestL2Norm:
    def test_zero_field(self):
        assert l2_norm_sq(SpectralField.zero(GridSpec((8,)))) == 0.0

    def test_constant_field(self):
        f = SpectralField.from_values(GridSpec((8, 4)), np.full((8, 4), -2.5))
        assert l2_norm_sq(f) == pytest.approx(6.25, rel=1e-14)

    def test_cosine_half(self):
        assert l2_norm_sq(cosine_field(GridSpec((16,)))) == pytest.approx(0.5, rel=1e-12)

    def test_plancherel_hundred_random_fields(self):
        rng = np.random.default_rng(4)
        for trial in range(100):
            grid = GridSpec((8,)) if trial % 2 else GridSpec((4, 6))
            f = SpectralField.from_values(grid, rng.standard_normal(grid.samples))
            space = l2_norm_sq(f)
            freq = l2_norm_sq_freq(f)
            assert abs(space - freq) <= 1e-10 * max(space, 1e-300)


class TestKGradNorm:
    def test_constant_field_vanishes(self):
        f = SpectralField.from_values(GridSpec((8,)), np.full(8, 3.0))
        assert kgrad_norm_sq(f, FrequencyWeight(k=1, lam=1.0)) == 0.0

    def test_cosine_first_order(self):
        f = cosine_field(GridSpec((16,)))
        got = kgrad_norm_sq(f, FrequencyWeight(k=1, lam=5.0))
        assert got == pytest.approx(TWO_PI**2 / 2, rel=1e-12)

    def test_cosine_second_order(self):
        f = cosine_field(GridSpec((16,)))
        got = kgrad_norm_sq(f, FrequencyWeight(k=2, lam=5.0))
        assert got == pytest.approx(TWO_PI**4 / 2, rel=1e-12)


class TestObjective:
    def test_two_cells_only_data_term(self):
        g = GridSpec((8,))
        data = GriddedData.from_entries(g, {2: 1.0, 6: -1.0})
        fw = FrequencyWeight(k=1, lam=0.7)
        assert objective(SpectralField.zero(g), data, fw) == pytest.approx(2.0, abs=1e-15)

    def test_empty_data_zero_field(self):
        g = GridSpec((8,))
        fw = FrequencyWeight(k=1, lam=0.7)
        assert objective(SpectralField.zero(g), GriddedData.empty(g), fw) == 0.0

    def test_against_direct_sum_oracle(self):
        g = GridSpec((8,))
        f = cosine_field(g)
        data = GriddedData.from_entries(g, {3: 0.75})
        fw = FrequencyWeight(k=2, lam=0.3, scale_mode="2pi")
        expected = brute_objective(f.values, data.entries, k=2, lam=0.3, scale=TWO_PI)
        assert objective(f, data, fw) == pytest.approx(expected, rel=1e-12)

    def test_grid_mismatch_raises(self):
        f = SpectralField.zero(GridSpec((8,)))
        data = GriddedData.empty(GridSpec((16,)))
        with pytest.raises(ValueError):
            objective(f, data, FrequencyWeight(k=1, lam=1.0))

    def test_convexity_segment_inequality(self):
        rng = np.random.default_rng(5)
        g = GridSpec((16,))
        fw = FrequencyWeight(k=1, lam=0.4)
        data = GriddedData.from_entries(g, {2: (0.8, 1), 9: (-0.8, 1)})
        for _ in range(50):
            u = SpectralField.from_values(g, rng.standard_normal(16))
            v = SpectralField.from_values(g, rng.standard_normal(16))
            cu, cv = objective(u, data, fw), objective(v, data, fw)
            for t in (0.25, 0.5, 0.75):
                mix = SpectralField.from_values(g, t * u.values + (1 - t) * v.values)
                bound = t * cu + (1 - t) * cv + 1e-12 * max(1.0, cu + cv)
                assert objective(mix, data, fw) <= bound


class TestObjectiveGradient:
    def test_zero_field_empty_data(self):
        g = GridSpec((8,))
        grad = objective_gradient(
            SpectralField.zero(g), GriddedData.empty(g), FrequencyWeight(k=1, lam=1.0)
        )
        assert np.all(grad.values == 0.0)

    def test_matches_central_differences(self):
        rng = np.random.default_rng(6)
        g = GridSpec((16,))
        fw = FrequencyWeight(k=1, lam=0.25)
        data = GriddedData.from_entries(g, {1: (0.9, 1), 7: (-0.3, 1), 12: (-0.6, 1)})
        f = SpectralField.from_values(g, rng.standard_normal(16))
        analytic = objective_gradient(f, data, fw).flat

        def fun(values):
            return objective(SpectralField.from_values(g, values), data, fw)

        fd = central_difference_gradient(fun, f.values.copy(), step=1e-6).reshape(-1)
        scale = np.max(np.abs(analytic))
        rel = np.abs(fd - analytic) / np.maximum(np.abs(analytic), 1e-3 * scale)
        assert np.max(rel) <= 1e-5

    def test_vanishes_at_linear_solver_optimum(self):
        g = GridSpec((32,))
        fw = FrequencyWeight(k=1, lam=0.2)
        data = GriddedData.from_entries(g, {4: 1.0, 20: -1.0})
        field, _ = solve_linear(data, fw)
        gnorm = float(np.linalg.norm(objective_gradient(field, data, fw).flat))
        assert gnorm <= 1e-8 * (1.0 + float(np.linalg.norm(data.values)))


class TestEulerLagrangeResidual:
    def test_zero_everything(self):
        g = GridSpec((8,))
        fw = FrequencyWeight(k=1, lam=1.0)
        phi = SpectralField.from_values(g, np.ones(8))
        assert el_residual(SpectralField.zero(g), GriddedData.empty(g), fw, phi) == 0.0

    def test_minimizer_annihilates_test_functions(self):
        rng = np.random.default_rng(7)
        g = GridSpec((32,))
        fw = FrequencyWeight(k=1, lam=0.05)
        data = GriddedData.from_entries(g, {3: 1.2, 17: -0.5, 25: -0.7})
        field, _ = solve_linear(data, fw)
        worst = max(
            abs(el_residual(field, data, fw, random_band_limited_field(g, 10, rng)))
            for _ in range(20)
        )
        assert worst <= 1e-7

    def test_constant_test_function_collapses(self):
        rng = np.random.default_rng(8)
        g = GridSpec((16,))
        fw = FrequencyWeight(k=2, lam=0.3)
        data = GriddedData.from_entries(g, {2: 0.4, 9: -0.4})
        f = SpectralField.from_values(g, rng.standard_normal(16))
        phi = SpectralField.from_values(g, np.ones(16))
        direct = float(np.mean(f.values)) + float(
            np.sum(f.flat[data.indices] - data.values)
        )
        assert el_residual(f, data, fw, phi) == pytest.approx(direct, rel=1e-12)


class TestSupNormBound:
    def test_radius_zero(self):
        assert sup_norm_bound_constant(1, 1, 0) == pytest.approx(1.0, abs=1e-15)

    def test_one_dimensional_partial_sum(self):
        expected = np.sqrt(sum(1.0 / (1 + l * l) for l in range(-100, 101)))
        assert sup_norm_bound_constant(1, 1, 100) == pytest.approx(expected, rel=1e-13)

    def test_two_dimensional_partial_sum(self):
        total = 0.0
        for a in range(-50, 51):
            for b in range(-50, 51):
                total += (1.0 + a * a + b * b) ** -2
        assert sup_norm_bound_constant(2, 2, 50) == pytest.approx(np.sqrt(total), rel=1e-12)

    def test_monotone_in_radius(self):
        vals = [sup_norm_bound_constant(2, 2, r) for r in (0, 1, 2, 5, 10)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_subcritical_order_rejected(self):
        with pytest.raises(ValueError):
            sup_norm_bound_constant(1, 2, 10)


class TestNormInequalities:
    def test_pure_seminorm_below_full_sobolev(self):
        rng = np.random.default_rng(9)
        fw = FrequencyWeight(k=2, lam=1.0, scale_mode="2pi")
        for trial in range(100):
            grid = GridSpec((16,)) if trial % 2 else GridSpec((12, 12))
            u = random_band_limited_field(grid, 4, rng)
            tk = l2_norm_sq(u) + fw.lam * kgrad_norm_sq(u, fw)
            assert tk <= mixed_sobolev_norm_sq(u, fw.k) * (1 + 1e-12)

    def test_sup_norm_embedding(self):
        rng = np.random.default_rng(10)
        for trial in range(100):
            if trial % 2:
                grid, k, band = GridSpec((32,)), 1, 8
            else:
                grid, k, band = GridSpec((16, 16), ), 2, 5
            u = random_band_limited_field(grid, band, rng)
            bound = sup_norm_bound_constant(k, grid.m, band) * bessel_sobolev_norm(u, k)
            assert np.max(np.abs(u.values)) <= bound * (1 + 1e-12)
