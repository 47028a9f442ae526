import numpy as np
import pytest

from kinklab.center import center_residual, find_center, linearized_center, track_center
from kinklab.grid import Field
from kinklab.model import instanton_derivative_field, instanton_field
from kinklab.spde import InstantonInitial, SimConfig, Trajectory


class TestResidual:
    def test_exact_kink_is_root(self, grid_l20):
        m = instanton_field(grid_l20, 1.0)
        assert abs(center_residual(m, 1.0)) < 1e-12

    def test_slope_through_root(self, grid_l20):
        # d/dxi <kink(0) - kink(xi), kink'(xi)> at xi = 0 is +4/3: the Newton
        # correction xi = x0 - (3/4) residual follows from this value
        m = instanton_field(grid_l20, 0.0)
        h = 1e-6
        slope = (center_residual(m, h) - center_residual(m, -h)) / (2 * h)
        assert slope == pytest.approx(4.0 / 3.0, abs=1e-6)

    def test_small_offset_linear_response(self, grid_l20):
        m = instanton_field(grid_l20, 0.0)
        for h in (0.01, 0.05):
            assert center_residual(m, h) == pytest.approx(4.0 / 3.0 * h, rel=0.05)

    def test_flat_field_degenerate(self, grid_l20):
        m = Field(grid_l20, np.zeros(grid_l20.n_nodes))
        for xi in (-3.0, 0.0, 2.5):
            assert abs(center_residual(m, xi)) < 1e-12  # odd x even integrand

    def test_window_guard(self, grid_l20):
        m = instanton_field(grid_l20, 0.0)
        with pytest.raises(ValueError, match="window"):
            center_residual(m, 19.5)

    def test_monotone_through_root(self, grid_l20):
        m = instanton_field(grid_l20, 0.5)
        xis = np.linspace(-0.5, 1.5, 41)
        rs = [center_residual(m, x) for x in xis]
        assert np.all(np.diff(rs) > 0)


class TestFindCenter:
    def test_exact_kink(self, grid_l20):
        est = find_center(instanton_field(grid_l20, 1.5), 0.0)
        assert est.converged and est.proper
        assert est.xi == pytest.approx(1.5, abs=1e-8)

    def test_zero_mode_perturbation_shifts_center(self, grid_l20):
        # adding delta * kink' is a first-order shift by -delta
        delta = 0.01
        m0 = instanton_field(grid_l20, 0.0)
        mp = instanton_derivative_field(grid_l20, 0.0)
        est = find_center(Field(grid_l20, m0.values + delta * mp.values), 0.0)
        assert est.xi == pytest.approx(-delta, abs=1e-4)
        # linearity oracle at delta/10
        est_small = find_center(Field(grid_l20, m0.values + delta / 10 * mp.values), 0.0)
        assert est.xi / est_small.xi == pytest.approx(10.0, rel=1e-3)

    def test_flat_plus_one_not_proper(self, grid_l20):
        est = find_center(Field(grid_l20, np.ones(grid_l20.n_nodes)), 0.0)
        assert not est.proper
        assert not est.converged
        assert est.xi == 0.0  # conventional fallback value

    def test_flat_zero_degenerate_root_flagged(self, grid_l20):
        est = find_center(Field(grid_l20, np.zeros(grid_l20.n_nodes)), 0.3)
        assert est.converged  # residual is identically zero
        assert not est.proper

    def test_shift_equivariance(self, grid_l20, rng):
        pert = 0.05 * np.exp(-grid_l20.x**2 / 4) * np.cos(grid_l20.x)
        m = Field(grid_l20, np.tanh(grid_l20.x) + pert)
        xi0 = find_center(m, 0.0).xi
        k = 13  # shift by k cells
        vals = np.roll(m.values, k)
        vals[:k] = m.values[0]
        xi1 = find_center(Field(grid_l20, vals), 0.0).xi
        assert abs(xi1 - (xi0 + k * grid_l20.dx)) < 1e-8

    def test_reflection_antisymmetry(self, grid_l20, rng):
        pert = 0.05 * np.exp(-grid_l20.x**2 / 4) * np.cos(grid_l20.x)
        m = Field(grid_l20, np.tanh(grid_l20.x) + pert)
        xi0 = find_center(m, 0.0).xi
        reflected = Field(grid_l20, -m.values[::-1])  # (Gm)(x) = -m(-x)
        assert abs(find_center(reflected, 0.0).xi + xi0) < 1e-8

    def test_lipschitz_response(self, grid_l20):
        m = instanton_field(grid_l20, 0.7)
        xi0 = find_center(m, 0.0).xi
        mp = instanton_derivative_field(grid_l20, xi0)
        bound = np.dot(grid_l20.weights, mp.values * np.abs(np.sin(grid_l20.x)))
        for eta in (0.01, 0.05):
            m_eta = Field(grid_l20, m.values + eta * np.sin(grid_l20.x))
            xi_eta = find_center(m_eta, xi0).xi
            assert abs(xi_eta - xi0) <= 2.0 * eta * bound


class TestLinearizedCenter:
    def test_exact_kink(self, grid_l20):
        m = instanton_field(grid_l20, 0.0)
        assert linearized_center(m, 0.0) == 0.0

    def test_translate_family_quadratic_defect(self, grid_l20):
        for h in (0.01, 0.02, 0.05, 0.1, 0.2):
            m = instanton_field(grid_l20, h)
            lc = linearized_center(m, 0.0)
            assert abs(lc - h) <= 2.0 * h**2

    def test_agreement_with_newton(self, grid_l20):
        # |find_center - linearized_center| <= C ||m - kink||^2 with a
        # once-calibrated C (measured defect/h^2 <= 0.03 over the family)
        for h in (0.01, 0.05, 0.1, 0.2):
            m = instanton_field(grid_l20, h)
            fc = find_center(m, 0.0).xi
            lc = linearized_center(m, 0.0)
            assert abs(fc - lc) <= 0.5 * h**2

    def test_richardson_quadratic_defect(self, grid_l20):
        # defect scales at least quadratically under halving
        d1 = abs(linearized_center(instanton_field(grid_l20, 0.2), 0.0) - 0.2)
        d2 = abs(linearized_center(instanton_field(grid_l20, 0.1), 0.0) - 0.1)
        assert d1 / d2 > 3.5


class TestTrackCenter:
    def _make_trajectory(self, grid, times, m_frames):
        cfg = SimConfig(epsilon=grid.epsilon, dx=grid.dx,
                        t_end=max(float(times[-1]), 1.0),
                        initial=InstantonInitial(0.0))
        frames = np.asarray(m_frames)
        return Trajectory(config=cfg, replica=0, grid=grid, times=np.asarray(times),
                          m1=frames, m2=frames.copy())

    def test_synthesized_translates(self, grid_l20):
        times = np.arange(0.0, 5.01, 0.1)
        v = 0.1
        frames = [np.tanh(grid_l20.x - v * t) for t in times]
        traj = self._make_trajectory(grid_l20, times, frames)
        path = track_center(traj)
        assert max(abs(est.xi - v * t) for t, est in path) < 1e-6

    def test_constant_path_for_stationary_frames(self, grid_l20):
        times = np.arange(0.0, 2.01, 0.1)
        frames = [np.tanh(grid_l20.x - 0.8) for _ in times]
        traj = self._make_trajectory(grid_l20, times, frames)
        path = track_center(traj, x0=0.8)
        assert max(abs(est.xi - 0.8) for _, est in path) < 1e-10

    def test_not_proper_frame_recorded_and_skipped(self, grid_l20):
        times = np.array([0.0, 0.1, 0.2])
        frames = [
            np.tanh(grid_l20.x),
            np.zeros(grid_l20.n_nodes),  # degenerate frame
            np.tanh(grid_l20.x - 0.05),
        ]
        traj = self._make_trajectory(grid_l20, times, frames)
        path = track_center(traj)
        assert path[0][1].proper
        assert not path[1][1].proper
        assert path[2][1].proper
        assert path[2][1].xi == pytest.approx(0.05, abs=1e-8)

    def test_empty_trajectory_rejected(self, grid_l20):
        traj = self._make_trajectory(grid_l20, [0.0], [np.tanh(grid_l20.x)])
        traj.times = np.empty(0)
        traj.m1 = np.empty((0, grid_l20.n_nodes))
        traj.m2 = np.empty((0, grid_l20.n_nodes))
        with pytest.raises(ValueError, match="no recorded frames"):
            track_center(traj)
