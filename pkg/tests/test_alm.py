"""Engine-level tests on analytic problems with closed-form subproblems."""

import math

import numpy as np
import pytest

from almkit.alm import (
    AlmConfig,
    AlmProblem,
    ProblemEval,
    augmented_lagrangian_value,
    feasibility_measure,
    run_alm,
    safeguard,
    update_multipliers,
    update_penalty,
)
from almkit.numkit import Rng


def ev(f=0.0, g=(), h=()):
    return ProblemEval(f_value=f, g_values=np.array(g, dtype=float), h_values=np.array(h, dtype=float))


class TestAugmentedLagrangianValue:
    def test_inactive_zero_multiplier(self):
        assert augmented_lagrangian_value(ev(0.0, g=[-1.0]), v=[0.0], w=[], rho=2.0) == 0.0

    def test_active_constraint(self):
        # 4 + (max(0, 1+2*1)^2 - 1)/(2*2) = 4 + 8/4
        val = augmented_lagrangian_value(ev(4.0, g=[1.0]), v=[1.0], w=[], rho=2.0)
        assert val == pytest.approx(6.0)

    def test_below_objective_at_feasible_point(self):
        val = augmented_lagrangian_value(ev(1.0, g=[-2.0]), v=[3.0], w=[], rho=1.0)
        assert val == pytest.approx(-3.0)

    def test_equality_part(self):
        val = augmented_lagrangian_value(ev(0.0, h=[2.0]), v=[], w=[1.0], rho=1.0)
        assert val == pytest.approx(4.0)

    def test_infinite_values_propagate(self):
        assert augmented_lagrangian_value(ev(math.inf), v=[], w=[], rho=1.0) == math.inf
        assert augmented_lagrangian_value(ev(0.0, g=[math.inf]), v=[1.0], w=[], rho=1.0) == math.inf

    def test_rejects_nonpositive_rho(self):
        with pytest.raises(ValueError):
            augmented_lagrangian_value(ev(0.0), v=[], w=[], rho=0.0)

    def test_lower_bound_at_feasible_points(self):
        # at feasible points with v >= 0 the augmented value never exceeds f,
        # and the inequality holds term by term
        rng = Rng(101)
        for _ in range(1000):
            m = 1 + int(rng.uniform() * 5)
            g = -rng.uniforms(m) * 10.0
            v = rng.uniforms(m) * 5.0
            rho = 0.1 + rng.uniform() * 10.0
            f = (rng.uniform() - 0.5) * 100.0
            per_term = np.maximum(0.0, v + rho * g) ** 2 - v**2
            assert np.all(per_term <= 0.0)
            val = augmented_lagrangian_value(ev(f, g=g), v=v, w=[], rho=rho)
            assert val <= f


class TestFeasibilityMeasure:
    def test_zero_at_complementary_point(self):
        assert feasibility_measure(ev(g=[-1.0]), v=[0.0], rho=3.0) == 0.0

    def test_complementarity_violation(self):
        assert feasibility_measure(ev(g=[-1.0]), v=[2.0], rho=1.0) == pytest.approx(1.0)

    def test_mixed_blocks(self):
        assert feasibility_measure(ev(g=[0.5], h=[0.2]), v=[0.0], rho=4.0) == pytest.approx(0.5)

    def test_infinite_outside_domain(self):
        assert feasibility_measure(ev(g=[math.inf]), v=[0.0], rho=1.0) == math.inf

    def test_zero_iff_characterization(self):
        rng = Rng(55)
        for _ in range(200):
            m = 1 + int(rng.uniform() * 4)
            rho = 0.5 + rng.uniform() * 4.0
            # construct a satisfying tuple: g <= 0, v >= 0, v'g = 0, h = 0
            g = -rng.uniforms(m)
            v = np.zeros(m)
            active = rng.uniforms(m) < 0.5
            g[active] = 0.0
            v[active] = rng.uniforms(int(active.sum())) * 3.0
            assert feasibility_measure(ev(g=g, h=np.zeros(2)), v=v, rho=rho) == 0.0
            # violate one condition at a time
            g_bad = g.copy()
            g_bad[0] = 0.3
            assert feasibility_measure(ev(g=g_bad), v=v, rho=rho) > 0.0
            v_bad = v.copy()
            v_bad[0] = 1.0
            g_slack = g.copy()
            g_slack[0] = -0.7
            assert feasibility_measure(ev(g=g_slack), v=v_bad, rho=rho) > 0.0
            assert feasibility_measure(ev(g=g, h=[0.1]), v=v, rho=rho) > 0.0


class TestUpdates:
    def test_multiplier_examples(self):
        lam, _ = update_multipliers(ev(g=[-3.0]), v=[1.0], w=[], rho=2.0)
        np.testing.assert_allclose(lam, [0.0])
        lam, _ = update_multipliers(ev(g=[1.0]), v=[1.0], w=[], rho=2.0)
        np.testing.assert_allclose(lam, [3.0])
        _, mu = update_multipliers(ev(h=[0.25]), v=[], w=[0.5], rho=4.0)
        np.testing.assert_allclose(mu, [1.5])

    def test_multiplier_at_domain_boundary_clamped_by_safeguard(self):
        # g = +inf gives an infinite multiplier; the safeguard bounds it
        lam, _ = update_multipliers(ev(g=[math.inf, -1.0]), v=[0.0, 0.0], w=[], rho=1.0)
        assert lam[0] == math.inf and lam[1] == 0.0
        v, _ = safeguard(lam, np.array([]), AlmConfig(multiplier_box_max=1e8))
        np.testing.assert_array_equal(v, [1e8, 0.0])

    def test_safeguard_clamps(self):
        cfg = AlmConfig(multiplier_box_max=1e8, equality_box_max=1e8)
        v, _ = safeguard(np.array([-1.0]), np.array([]), cfg)
        np.testing.assert_allclose(v, [0.0])
        v, _ = safeguard(np.array([5.0]), np.array([]), cfg)
        np.testing.assert_allclose(v, [5.0])
        v, _ = safeguard(np.array([2e8]), np.array([]), cfg)
        np.testing.assert_allclose(v, [1e8])
        _, w = safeguard(np.array([]), np.array([-2e8, 3.0]), cfg)
        np.testing.assert_allclose(w, [-1e8, 3.0])

    def test_safeguard_idempotent_and_lipschitz(self):
        cfg = AlmConfig(multiplier_box_max=10.0, equality_box_max=10.0)
        rng = Rng(66)
        for _ in range(200):
            lam = (rng.uniforms(4) - 0.3) * 40.0
            mu = (rng.uniforms(3) - 0.5) * 40.0
            v1, w1 = safeguard(lam, mu, cfg)
            v2, w2 = safeguard(v1, w1, cfg)
            np.testing.assert_array_equal(v1, v2)
            np.testing.assert_array_equal(w1, w2)
            lam_b = lam + (rng.uniforms(4) - 0.5)
            v_b, _ = safeguard(lam_b, mu, cfg)
            assert np.max(np.abs(v_b - v1)) <= np.max(np.abs(lam_b - lam)) + 1e-15

    def test_penalty_rule(self):
        cfg = AlmConfig(tau=0.1, gamma=3.0)
        assert update_penalty(5.0, math.inf, 2.0, 0, cfg) == 2.0
        assert update_penalty(0.5, 1.0, 2.0, 3, cfg) == 6.0
        assert update_penalty(0.05, 1.0, 2.0, 3, cfg) == 2.0
        assert update_penalty(0.5, math.inf, 2.0, 3, cfg) == 2.0


def quadratic_solver(v, w, rho, warm, tol):
    """Exact minimizer of x^2 + penalty for the constraint 1 - x <= 0."""
    x = (v[0] + rho) / (2.0 + rho)
    return x, ev(f=x * x, g=[1.0 - x]), 1


class TestRunAlm:
    def test_converges_to_kkt_point(self):
        cfg = AlmConfig(rho0=1.0, tau=0.5, gamma=2.0, eps_alm_abs=1e-8, max_outer_iterations=50)
        result = run_alm(AlmProblem(x0=0.0, m=1), quadratic_solver, cfg)
        assert result.converged
        assert abs(result.iterate - 1.0) <= 1e-8
        assert abs(result.state.lam[0] - 2.0) <= 1e-6
        assert result.state.trace[-1][3] <= 1e-8

    def test_feasible_complementary_start_terminates_immediately(self):
        cfg = AlmConfig(rho0=1.0, tau=0.5, gamma=2.0, eps_alm_abs=1e-8)
        problem = AlmProblem(x0=1.0, m=1, lambda0=np.array([2.0]))
        result = run_alm(problem, quadratic_solver, cfg)
        assert result.converged
        assert len(result.state.trace) == 1
        assert result.state.trace[0][3] == 0.0

    def test_penalty_stays_bounded_convex_case(self):
        # independent recursion: x(v, rho) = (v+rho)/(2+rho), same update rules
        tau, gamma, rho_expected = 0.5, 2.0, 1.0
        v_prev, v_meas_prev = 0.0, math.inf
        expected_rhos = []
        for k in range(50):
            x = (v_prev + rho_expected) / (2.0 + rho_expected)
            g = 1.0 - x
            lam = max(0.0, v_prev + rho_expected * g)
            v_meas = abs(max(g, -v_prev / rho_expected))
            expected_rhos.append(rho_expected)
            if v_meas <= 1e-10:
                break
            if k > 0 and v_meas > tau * v_meas_prev:
                rho_expected *= gamma
            v_meas_prev = v_meas
            v_prev = min(lam, 1e8)
        cfg = AlmConfig(rho0=1.0, tau=tau, gamma=gamma, eps_alm_abs=1e-10, max_outer_iterations=50)
        result = run_alm(AlmProblem(x0=0.0, m=1), quadratic_solver, cfg)
        got_rhos = [row[2] for row in result.state.trace]
        np.testing.assert_allclose(got_rhos, expected_rhos[: len(got_rhos)])
        assert max(got_rhos) <= 4.0

    def test_rho_monotone_and_increases_only_on_rule_failure(self):
        cfg = AlmConfig(rho0=1.0, tau=0.9, gamma=2.0, eps_alm_abs=1e-12, max_outer_iterations=30)
        result = run_alm(AlmProblem(x0=0.0, m=1), quadratic_solver, cfg)
        trace = result.state.trace
        for idx in range(1, len(trace)):
            rho_prev, rho_now = trace[idx - 1][2], trace[idx][2]
            assert rho_now >= rho_prev
            v_prev = trace[idx - 1][3]
            v_before = trace[idx - 2][3] if idx >= 2 else math.inf
            kept = (idx - 1 == 0) or (v_prev <= cfg.tau * v_before)
            assert rho_now == (rho_prev if kept else cfg.gamma * rho_prev)

    def test_unconstrained_problem_single_call(self):
        calls = []

        def solver(v, w, rho, warm, tol):
            calls.append(1)
            return 42.0, ev(f=7.0), 3

        result = run_alm(AlmProblem(x0=0.0, m=0), solver, AlmConfig())
        assert result.converged
        assert len(calls) == 1
        assert result.state.trace[0][3] == 0.0

    def test_max_iterations_reason(self):
        cfg = AlmConfig(rho0=1.0, tau=0.5, gamma=2.0, eps_alm_abs=0.0, max_outer_iterations=3)

        def stubborn(v, w, rho, warm, tol):
            return 0.0, ev(f=0.0, g=[1.0]), 1

        result = run_alm(AlmProblem(x0=0.0, m=1), stubborn, cfg)
        assert not result.converged
        assert result.reason == "max_outer_iterations"
        assert len(result.state.trace) == 3

    def test_solver_failure_wrapped(self):
        def broken(v, w, rho, warm, tol):
            raise FloatingPointError("inner blowup")

        with pytest.raises(RuntimeError, match="outer iteration 0"):
            run_alm(AlmProblem(x0=0.0, m=1), broken, AlmConfig())

    def test_config_validation(self):
        with pytest.raises(ValueError):
            AlmConfig(rho0=-1.0)
        with pytest.raises(ValueError):
            AlmConfig(tau=1.0)
        with pytest.raises(ValueError):
            AlmConfig(gamma=1.0)
