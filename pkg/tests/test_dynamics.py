import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from spatialgame import (CrankNicolson, PollutionState, SteadyStateError, assemble_forward,
                         build_grid, convergence_report, nash_equilibrium, simulate, steady_state,
                         step)

from conftest import DELTA, SIGMA, halves, make_env

PI = np.pi


@pytest.fixture(scope="module")
def fig1():
    g = build_grid(512)
    env = make_env(g)
    eq = nash_equilibrium(halves(g), env, g)
    p_inf, res = steady_state(eq.n, env, g)
    return g, env, eq, p_inf, res


class TestStep:
    def test_single_mode_decay(self):
        g = build_grid(2048)
        env = make_env(g)
        p0 = np.cos(g.nodes)
        traj = simulate(p0, np.zeros(2048), env, g, T=1.0, dt=1e-3, n_samples=2)
        exact = np.exp(-(DELTA + SIGMA)) * p0
        assert np.max(np.abs(traj.final - exact)) < 1e-6

    def test_constant_balance(self):
        g = build_grid(64)
        env = make_env(g)
        p0 = np.full(64, 3.0)
        state = PollutionState(0.0, p0)
        for _ in range(10):
            state = step(state, DELTA * p0, env, g, dt=0.1)
        np.testing.assert_allclose(state.p, 3.0, rtol=1e-13)
        assert state.t == pytest.approx(1.0)

    def test_rotation_and_decay(self):
        g = build_grid(1024)
        c, T = 0.3, 2.0
        env = make_env(g, v=c, delta=0.0)
        traj = simulate(np.cos(g.nodes), np.zeros(1024), env, g, T=T, dt=1e-3, n_samples=2)
        exact = np.exp(-SIGMA * T) * np.cos(g.nodes + c * T)
        assert np.max(np.abs(traj.final - exact)) < 1e-5

    def test_second_order_in_time(self):
        # compare with the exact semi-discrete solution of one Fourier mode
        g = build_grid(128)
        env = make_env(g)
        lam = -DELTA - SIGMA * (2 - 2 * np.cos(g.dx)) / g.dx**2
        T = 2.0
        errs = []
        for dt in (0.2, 0.1, 0.05):
            traj = simulate(np.cos(g.nodes), np.zeros(128), env, g, T=T, dt=dt, n_samples=2)
            errs.append(np.max(np.abs(traj.final - np.exp(lam * T) * np.cos(g.nodes))))
        ratios = np.array(errs[:-1]) / np.array(errs[1:])
        np.testing.assert_allclose(ratios, 4.0, rtol=0.05)

    def test_rejects_bad_step(self):
        g = build_grid(16)
        with pytest.raises(ValueError):
            CrankNicolson(assemble_forward(make_env(g), g), 0.0)
        with pytest.raises(ValueError):
            simulate(np.zeros(16), np.zeros(16), make_env(g), g, T=0.0)

    def test_forward_operator_has_no_v_prime_term(self):
        g = build_grid(64)
        env = make_env(g, v=0.5 * np.sin(g.nodes), delta=0.2)
        np.testing.assert_allclose(assemble_forward(env, g)(np.ones(64)), -0.2, atol=1e-13)


class TestConservationAndPositivity:
    @pytest.mark.parametrize("c", [0.0, 0.4, -0.7])
    def test_mass_conserved(self, c):
        g = build_grid(128)
        env = make_env(g, v=c, delta=0.0)
        p0 = 1 + np.where(g.nodes < 2, 1.0, 0.0)
        traj = simulate(p0, np.zeros(128), env, g, T=5.0, dt=0.01, n_samples=11)
        drift = np.max(np.abs(traj.mass - traj.mass[0]))
        assert drift <= 1e-10 * 5.0
        assert traj.p_inf is None and traj.gap is None

    @settings(max_examples=25, deadline=None)
    @given(arrays(float, 64, elements=st.floats(0, 5)), arrays(float, 64, elements=st.floats(0, 1)))
    def test_positivity(self, p0, source):
        g = build_grid(64)
        env = make_env(g, v=0.1)
        traj = simulate(p0, source, env, g, T=2.0, dt=0.01, n_samples=21)
        assert traj.states.min() >= -1e-12

    def test_positivity_fig1(self, fig1):
        g, env, eq, p_inf, _ = fig1
        traj = simulate(np.zeros(512), eq.n, env, g, T=10.0, dt=0.01, n_samples=101, p_inf=p_inf)
        assert traj.states.min() >= -1e-12


class TestSteadyState:
    def test_constant_balance(self):
        g = build_grid(64)
        p, res = steady_state(np.full(64, 0.04), make_env(g), g)
        np.testing.assert_allclose(p, 0.2, rtol=1e-12)
        assert res < 1e-12

    def test_mass_balance(self, fig1):
        g, env, eq, p_inf, _ = fig1
        assert g.integrate(DELTA * p_inf) == pytest.approx(g.integrate(eq.n), abs=1e-10)

    def test_residual(self, fig1):
        *_, eq, p_inf, res = fig1
        assert res <= 1e-10 * np.max(np.abs(eq.n))

    def test_smoother_than_emissions(self, fig1):
        g, env, eq, p_inf, _ = fig1

        def spread(f):
            return (f.max() - f.min()) / f.mean()

        assert spread(p_inf) < spread(eq.n)
        # maxima sit at the arc borders
        assert np.argmax(p_inf) in (0, 256)

    def test_rejects_zero_decay(self):
        g = build_grid(64)
        with pytest.raises(SteadyStateError, match="v'/2 \\+ delta"):
            steady_state(np.ones(64), make_env(g, delta=0.0), g)

    def test_rejects_negative_floor(self):
        g = build_grid(64)
        env = make_env(g, v=1.0 * np.sin(g.nodes), delta=0.1)
        with pytest.raises(SteadyStateError):
            steady_state(np.ones(64), env, g)


class TestTrajectory:
    def test_fixed_point(self, fig1):
        g, env, eq, p_inf, _ = fig1
        traj = simulate(p_inf, eq.n, env, g, T=5.0, dt=0.01, n_samples=6, p_inf=p_inf)
        assert traj.gap.max() < 1e-8
        rep = convergence_report(traj)
        assert rep.passed and rep.final_gap < 1e-8

    def test_mass_rises_monotonically(self, fig1):
        g, env, eq, p_inf, _ = fig1
        traj = simulate(np.zeros(512), eq.n, env, g, T=30.0, dt=0.01, n_samples=31, p_inf=p_inf)
        assert np.all(np.diff(traj.mass) > 0)
        assert traj.mass[-1] < g.integrate(p_inf)
        np.testing.assert_array_equal(traj.times, np.arange(31.0))

    def test_converges_to_steady_state(self, fig1):
        g, env, eq, p_inf, _ = fig1
        traj = simulate(np.zeros(512), eq.n, env, g, T=60.0, dt=0.01, n_samples=61, p_inf=p_inf)
        rep = convergence_report(traj)
        assert rep.passed and rep.final_gap < 1e-4
        assert rep.rate >= env.decay_floor

    def test_faster_with_more_decay(self):
        g = build_grid(128)
        rates = []
        for delta in (0.2, 0.4):
            env = make_env(g, delta=delta)
            eq = nash_equilibrium(halves(g), env, g)
            traj = simulate(np.zeros(128), eq.n, env, g, T=40.0, dt=0.01, n_samples=41)
            rep = convergence_report(traj)
            assert rep.rate >= env.decay_floor
            rates.append(rep.rate)
        assert rates[1] > rates[0]

    def test_uneven_horizon_is_hit_exactly(self):
        g = build_grid(16)
        traj = simulate(np.zeros(16), np.ones(16), make_env(g), g, T=1.0, dt=0.3, n_samples=3)
        assert traj.times[-1] == pytest.approx(1.0) and traj.dt == pytest.approx(0.25)

    def test_report_needs_steady_state(self):
        g = build_grid(16)
        traj = simulate(np.ones(16), np.zeros(16), make_env(g, delta=0.0), g, T=1.0, n_samples=3)
        with pytest.raises(ValueError):
            convergence_report(traj)
