"""Nonlinear runs: configuration, conservation, consistency, functionals."""

import numpy as np
import pytest

from decaylab.grids import lp_norm
from decaylab.linear import solve_linear_grid
from decaylab.simulate import (
    SimulationAbort,
    SimulationConfig,
    Trajectory,
    initial_data,
    orthogonal_part,
    read_trajectory,
    residual_bound_pair,
    simulate_damped_euler,
    time_weighted_functionals,
    write_trajectory,
)

BOX = 50 * np.pi


def config(**kw):
    base = dict(
        n=1, resolution=256, box=BOX, epsilon=0.01, s=0.5, dt=0.05,
        t_final=1.0, sample_times=(1.0,), seed=0,
    )
    base.update(kw)
    return SimulationConfig(**base)


class TestConfigValidation:
    def test_rejects_unknown_model(self):
        with pytest.raises(ValueError, match="model"):
            config(model="navier-stokes")

    def test_rejects_unknown_data_recipe(self):
        with pytest.raises(ValueError, match="recipe"):
            config(data="white-noise")

    def test_rejects_bad_steps(self):
        with pytest.raises(ValueError):
            config(dt=0.0)
        with pytest.raises(ValueError):
            config(t_final=-1.0)

    def test_rejects_nonpositive_regularity(self):
        with pytest.raises(ValueError, match="s"):
            config(s=0.0)

    def test_rejects_disordered_sample_times(self):
        with pytest.raises(ValueError, match="increasing"):
            config(sample_times=(1.0, 0.5))
        with pytest.raises(ValueError, match="increasing"):
            config(sample_times=(0.5, 0.5, 1.0))

    def test_rejects_samples_past_the_end(self):
        with pytest.raises(ValueError, match="t_final"):
            config(sample_times=(2.0,))

    def test_rejects_inadmissible_amplitude(self):
        c = config().make_model().c
        with pytest.raises(ValueError, match="admissible"):
            config(epsilon=0.51 * c)

    def test_rejects_cfl_violation(self):
        with pytest.raises(ValueError, match="CFL"):
            config(dt=0.5, box=2 * np.pi, sample_times=(0.5,))

    def test_off_grid_sample_time_caught_at_run_time(self):
        cfg = config(sample_times=(0.333,))
        with pytest.raises(ValueError, match="step grid"):
            simulate_damped_euler(cfg)

    def test_derived_quantities(self):
        cfg = config()
        assert cfg.sigma_c == 1.5
        assert cfg.default_ell_grid() == (0.0, 0.25, 0.5)
        assert SimulationConfig(
            n=3, resolution=16, box=2 * np.pi, epsilon=0.01, s=1.5,
            dt=0.01, t_final=0.1, sample_times=(0.1,),
        ).default_ell_grid() == (0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5)
        assert 0.0 < cfg.retained_max_frequency() <= (2.0 / 3.0) * 256 / 2 * (
            2 * np.pi / BOX
        ) * 1.001


class TestInitialData:
    def test_zero_amplitude_gives_zero_field(self):
        f = initial_data(config(epsilon=0.0))
        assert np.all(f.values == 0.0)

    def test_deterministic_in_seed(self):
        a, b = initial_data(config(seed=5)), initial_data(config(seed=5))
        assert np.array_equal(a.spectrum, b.spectrum)
        c = initial_data(config(seed=6))
        assert not np.array_equal(a.spectrum, c.spectrum)

    def test_mean_free_and_normalized(self):
        f = initial_data(config(epsilon=0.07))
        assert np.abs(f.mean()).max() < 1e-16
        assert np.abs(f.values).max() == pytest.approx(0.07, rel=1e-12)

    def test_saturated_recipe_refines_consistently(self):
        """Doubling the resolution must not change the physical field."""
        def field(res):
            return initial_data(config(
                resolution=res, box=2 * np.pi, dt=0.005, t_final=0.01,
                sample_times=(0.01,), seed=4, epsilon=0.1,
            ))
        coarse, fine = field(64), field(128)
        assert np.abs(fine.values[:, ::2] - coarse.values).max() <= 1e-12

    def test_bump_recipe_is_resolution_tied(self):
        def field(res):
            return initial_data(config(
                resolution=res, box=2 * np.pi, dt=0.005, t_final=0.01,
                sample_times=(0.01,), seed=4, epsilon=0.1, data="compact-bump",
            ))
        coarse, fine = field(64), field(128)
        assert np.abs(fine.values[:, ::2] - coarse.values).max() > 1e-3


class TestConservation:
    def test_zero_data_stays_zero(self):
        tr = simulate_damped_euler(config(epsilon=0.0, sample_times=(0.5, 1.0)))
        assert np.all(tr.energy == 0.0)
        assert np.all(tr.history.column("l2_total") == 0.0)

    def test_density_mean_is_invariant(self):
        tr = simulate_damped_euler(
            config(epsilon=0.05, t_final=20.0,
                   sample_times=tuple(np.arange(1.0, 21.0)))
        )
        assert np.abs(tr.mass).max() <= 1e-12

    def test_energy_decreases_with_damping(self):
        tr = simulate_damped_euler(
            config(epsilon=0.05, t_final=20.0,
                   sample_times=tuple(np.arange(1.0, 21.0)))
        )
        assert np.all(np.diff(tr.energy) < 0.0)

    def test_energy_conserved_without_damping(self):
        """Truncation, not the integrator, sets the drift floor here."""
        cfg = SimulationConfig(
            n=1, resolution=512, box=100 * np.pi, epsilon=1e-4, s=0.5,
            dt=0.05, t_final=10.0, sample_times=(10.0,), seed=2, damped=False,
        )
        tr = simulate_damped_euler(cfg)
        E0 = 0.5 * lp_norm(initial_data(cfg), 2.0) ** 2
        assert abs(tr.energy[-1] - E0) / E0 <= 1e-6


def test_small_amplitude_tracks_exact_linear_flow():
    cfg = config(epsilon=1e-6, t_final=5.0, sample_times=(1.0, 5.0), seed=9)
    tr = simulate_damped_euler(cfg)
    sys = cfg.make_model().linear_system
    w0 = initial_data(cfg)
    for t, snap in zip(tr.times, tr.snapshots):
        lin = solve_linear_grid(sys, w0, float(t))
        assert lp_norm(snap - lin, 2.0) / lp_norm(lin, 2.0) < 1e-4


def test_abort_reports_failure_time():
    exc = SimulationAbort(2.5, "state left the admissible set")
    assert exc.time == 2.5
    assert "t = 2.5" in str(exc)


@pytest.fixture(scope="module")
def traj():
    return simulate_damped_euler(
        config(epsilon=0.05, t_final=8.0, sample_times=(1.0, 2.0, 4.0, 8.0))
    )


class TestFunctionals:

    def test_columns_are_running_sups(self, traj):
        hist = time_weighted_functionals(traj)
        for name in ("E0", "E1_interior", "E1_endpoint", "E2"):
            col = hist.column(name)
            assert np.all(np.diff(col) >= 0.0)
            assert col[0] > 0.0

    def test_derivative_grid_validated(self, traj):
        with pytest.raises(ValueError, match="orders"):
            time_weighted_functionals(traj, ell_grid=(0.0, 0.9))
        with pytest.raises(ValueError, match="endpoint"):
            time_weighted_functionals(traj, ell_grid=(0.0,))
        with pytest.raises(ValueError, match="endpoint"):
            time_weighted_functionals(traj, ell_grid=(0.5,))

    def test_history_names(self, traj):
        assert traj.history.names == [
            "besov_critical", "l2_density", "l2_momentum", "l2_total",
        ]


class TestResidualStructure:
    def test_bound_ratio_is_stable_in_amplitude(self):
        model = config().make_model()
        ratios = []
        for eps in (0.1, 0.05):
            f = initial_data(config(epsilon=eps, seed=3))
            r, bound = residual_bound_pair(model, f)
            assert 0.0 < r < bound
            ratios.append(r / bound)
        assert ratios[0] == pytest.approx(ratios[1], rel=0.05)

    def test_orthogonal_part_kills_projected_component(self):
        f = initial_data(config(epsilon=0.05))
        P = config().make_model().linear_system.P
        v = orthogonal_part(f, P)
        assert np.abs(v.values[0]).max() == 0.0
        assert np.array_equal(v.values[1], f.values[1])

    def test_orthogonal_part_shape_check(self):
        f = initial_data(config(epsilon=0.05))
        with pytest.raises(ValueError, match="projector"):
            orthogonal_part(f, np.eye(3))


class TestTrajectoryIO:
    def test_roundtrip(self, tmp_path):
        tr = simulate_damped_euler(config(epsilon=0.05, sample_times=(0.5, 1.0)))
        write_trajectory(tmp_path / "run", tr)
        back = read_trajectory(tmp_path / "run")
        assert back.config == tr.config
        assert np.array_equal(back.times, tr.times)
        assert np.array_equal(back.mass, tr.mass)
        assert np.array_equal(back.energy, tr.energy)
        for a, b in zip(back.snapshots, tr.snapshots):
            assert a.grid == b.grid
            assert np.allclose(a.spectrum, b.spectrum, atol=1e-15)
        for name in tr.history.names:
            assert np.array_equal(back.history.column(name),
                                  tr.history.column(name))

    def test_rejects_unknown_layout(self, tmp_path):
        (tmp_path / "meta.json").write_text('{"format": 99}')
        with pytest.raises(ValueError, match="layout"):
            read_trajectory(tmp_path)


def test_trajectory_length_mismatch_rejected():
    tr = simulate_damped_euler(config(epsilon=0.01))
    with pytest.raises(ValueError, match="length"):
        Trajectory(tr.config, np.array([0.0, 1.0]), tr.snapshots, tr.history,
                   tr.mass, tr.energy)
