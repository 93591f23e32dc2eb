import math

import numpy as np
import pytest

from oscillakdv import (CoefficientSpec, ConfigurationError, ExperimentError, Field,
                        SolverConfig, airy_propagate, evolve, make_grid)
from oscillakdv.experiments import (averaging_sweep, default_sweep_horizon,
                                    dichotomy_experiment, fit_rate, gaussian, random_smooth,
                                    solitary_wave, solve_limiting, traveling_wave_residual)


@pytest.fixture
def grid():
    return make_grid(256, 32 * math.pi)


class TestSolitaryWave:
    def test_peak_k5(self):
        g = make_grid(2048, 32 * math.pi)
        phi = solitary_wave(1.0, 5, g)
        assert phi.values.max() == pytest.approx(3.5 ** 0.2, rel=1e-12)
        assert 3.5 ** 0.2 == pytest.approx(1.28473, abs=1e-5)

    def test_kdv_shape(self):
        g = make_grid(1024, 64 * math.pi)
        phi = solitary_wave(1.0, 1, g)
        ref = 1.5 / np.cosh(g.x / 2) ** 2
        assert np.max(np.abs(phi.values - ref)) < 1e-14
        assert traveling_wave_residual(phi, 1.0, 1) < 1e-8

    @pytest.mark.parametrize("c, k", [(1.0, 5), (0.5, 5), (2.0, 3), (1.0, 1)])
    def test_residual_and_symmetry(self, c, k):
        g = make_grid(4096, 32 * math.pi)
        phi = solitary_wave(c, k, g)
        assert traveling_wave_residual(phi, c, k) < 1e-8
        v = phi.values
        # x_j -> -x_j maps index j to n - j (index 0 is x = -L/2)
        assert np.max(np.abs(v[1:] - v[1:][::-1])) < 1e-14

    def test_width_violation(self):
        with pytest.raises(ConfigurationError):
            solitary_wave(0.01, 5, make_grid(256, 8 * math.pi))

    def test_bad_speed(self, grid):
        with pytest.raises(ConfigurationError):
            solitary_wave(-1.0, 5, grid)


class TestGenerators:
    def test_gaussian(self, grid):
        phi = gaussian(grid, 2.0, 3.0, 1.0)
        np.testing.assert_allclose(phi.values, 2.0 * np.exp(-((grid.x - 1.0) / 3.0) ** 2))
        with pytest.raises(ConfigurationError):
            gaussian(make_grid(64, 4.0), 1.0, 1.0)
        with pytest.raises(ConfigurationError):
            gaussian(grid, 1.0, 0.0)

    def test_random_is_seeded(self, grid):
        a, b = random_smooth(grid, 7), random_smooth(grid, 7)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, random_smooth(grid, 8).values)


class TestFitRate:
    def test_exact_inverse(self):
        w = [10, 20, 40, 80]
        assert fit_rate([(x, 1 / x) for x in w]) == pytest.approx(-1.0, abs=1e-12)

    def test_constant(self):
        assert fit_rate([(x, 0.3) for x in (1, 2, 3)]) == pytest.approx(0.0, abs=1e-12)

    def test_noisy(self):
        rng = np.random.default_rng(0)
        w = np.array([10, 20, 40, 80, 160], dtype=float)
        err = 2.0 / w * (1 + 0.01 * rng.standard_normal(w.size))
        assert -1.05 <= fit_rate(list(zip(w, err))) <= -0.95

    def test_exclusions(self):
        notes = []
        assert fit_rate([(1, 1.0), (2, 0.0), (3, -1.0)], notes) is None
        assert len(notes) == 3


class TestLimiting:
    def test_mean_zero_is_airy(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        cfg = SolverConfig(dt=1e-2, t_end=0.5, snapshot_times=(0.25,))
        tr = solve_limiting(phi, CoefficientSpec.cosine(omega=10.0), cfg)
        for t, f in tr.snapshots:
            assert np.max(np.abs(f.values - airy_propagate(phi, t).values)) < 1e-11

    def test_mean_one(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        cfg = SolverConfig(dt=1e-2, t_end=0.2)
        a = solve_limiting(phi, CoefficientSpec.constant(1.0, omega=3.0), cfg)
        b = evolve(phi, CoefficientSpec.constant(1.0), cfg)
        assert np.array_equal(a.values(), b.values())

    def test_mean_half_scaling(self, grid):
        phi = gaussian(grid, 0.8, 2.0)
        k, m = 5, 0.5
        cfg = SolverConfig(dt=5e-3, t_end=0.2, snapshot_times=(0.1,))
        a = solve_limiting(phi, CoefficientSpec.cos_squared(omega=7.0), cfg)
        b = evolve(phi * m ** (1 / k), CoefficientSpec.constant(1.0), cfg)
        assert np.max(np.abs(a.values() - m ** (-1 / k) * b.values())) < 1e-12


class TestSweep:
    def cfg(self):
        return SolverConfig(dt=2e-3, t_end=0.3, snapshot_times=tuple(np.linspace(0, 0.3, 16)))

    def test_zero_datum(self, grid):
        res = averaging_sweep(Field.zeros(grid), CoefficientSpec.cosine(), [10, 20, 40],
                              [0.0], 0.3, self.cfg())
        assert all(r.err_h1_sup == 0 and r.err_xt == 0 for r in res.rows)
        assert res.fitted_rate is None

    def test_constant_coefficient(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        res = averaging_sweep(phi, CoefficientSpec.constant(1.0), [10, 20, 40], [0.0, 0.1],
                              0.3, self.cfg())
        assert all(r.err_h1_sup < 1e-10 and r.err_xt < 1e-10 for r in res.rows)

    def test_cosine_decreasing_and_sorted(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        res = averaging_sweep(phi, CoefficientSpec.cosine(), [10, 20, 40], [0.05, 0.0],
                              0.3, self.cfg())
        assert [(r.omega, r.t0) for r in res.rows] == sorted((r.omega, r.t0) for r in res.rows)
        err = res.column("err_h1_sup", t0=0.05)
        assert np.all(np.diff(err) < 0)
        assert res.fitted_rate is not None and res.fitted_rate < 0
        assert all(r.err_xt >= r.err_h1_sup for r in res.rows)
        assert all(r.mass_drift < 1e-10 for r in res.rows)
        assert set(res.rates_by_t0()) == {0.0, 0.05}

    def test_worker_independence(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        args = (phi, CoefficientSpec.cosine(), [10, 20, 40], [0.0, 0.3], 0.3, self.cfg())
        serial = averaging_sweep(*args, workers=1)
        pooled = averaging_sweep(*args, workers=3)
        assert serial.rows == pooled.rows
        assert serial.config_digest == pooled.config_digest

    def test_needs_three_omegas(self, grid):
        with pytest.raises(ConfigurationError):
            averaging_sweep(gaussian(grid, 0.5, 2.0), CoefficientSpec.cosine(), [10, 20],
                            [0.0], 0.3, self.cfg())

    def test_limiting_growth_is_experiment_error(self):
        g = make_grid(2048, 8 * math.pi)
        cfg = SolverConfig(dt=2e-5, t_end=0.1)
        with pytest.raises(ExperimentError):
            averaging_sweep(gaussian(g, 2.0, 1.0), CoefficientSpec.constant(1.0),
                            [10, 20, 40], [0.0], 0.05, cfg, compute_xt=False)

    def test_default_horizon(self, grid):
        phi = gaussian(grid, 0.5, 2.0)
        cfg = SolverConfig(dt=1e-2, t_end=1.0)
        T = default_sweep_horizon(phi, CoefficientSpec.cosine(), cfg)
        assert T == 1.0  # Airy limit never grows, heuristic is infinite


class TestDichotomy:
    def test_zero_datum(self, grid):
        cfg = SolverConfig(dt=1e-2, t_end=0.5)
        rep = dichotomy_experiment(Field.zeros(grid), 0.5, 4.0, None, None, cfg)
        assert rep["hypothesis_met"] is False and "unmet" in rep["note"]
        assert rep["reference"]["status"] == "completed"
        assert rep["phase_shifted"]["status"] == "completed"
        assert rep["phase_shifted"]["max_deviation_from_airy"] == 0.0

    def test_branch_d_is_airy(self, grid):
        phi = gaussian(grid, 0.6, 2.0)
        cfg = SolverConfig(dt=1e-3, t_end=0.3)
        rep = dichotomy_experiment(phi, 0.5, 4.0, None, None, cfg, tail_horizon=20.0)
        d = rep["phase_shifted"]
        assert d["max_deviation_from_airy"] < 1e-10
        assert d["strichartz_tail"]["value"] > 0

    def test_branches_with_growth(self):
        g = make_grid(2048, 8 * math.pi)
        phi = gaussian(g, 1.6, 1.0)
        cfg = SolverConfig(dt=2e-5, t_end=0.1)
        rep = dichotomy_experiment(phi, 0.5, 4.0, None, None, cfg, tail_horizon=5.0)
        assert rep["hypothesis_met"]
        assert rep["small_omega"]["relative_time_gap"] < 0.05
        assert rep["large_omega"]["status"] == "completed"
        assert rep["large_omega"]["h1_ratio"] < 2.0
        assert "energy_drift" in rep["reference"]
