"""Shrinkage, optimality residual, Newton systems, and the local solver."""

import numpy as np
import pytest

from almkit.control import (
    ActivePattern,
    ControlIterate,
    SsnIterationError,
    SubproblemParams,
    assemble_fem,
    default_desired_state,
    full_reduced_step_deviation,
    newton_system,
    residual,
    shrinkage,
    solve_tikhonov,
    ssn_solve,
)
from almkit.numkit import Rng, sparse_solve


class TestShrinkage:
    def test_spec_values(self):
        assert shrinkage(2.0, 1.0, 1.0) == pytest.approx(1.0)
        assert shrinkage(0.5, 1.0, 1.0) == 0.0
        assert shrinkage(-4.0, 1.0, 2.0) == pytest.approx(-1.5)

    def test_negative_threshold_collapses_to_scaling(self):
        rng = Rng(41)
        for _ in range(50):
            a = (rng.uniform() - 0.5) * 10.0
            assert shrinkage(a, -rng.uniform(), 2.0) == pytest.approx(a / 2.0)

    def test_dead_zone(self):
        for a in np.linspace(-1.0, 1.0, 21):
            assert shrinkage(a, 1.0, 0.5) == 0.0

    def test_vectorized_matches_scalar(self):
        a = np.array([-4.0, -0.5, 0.0, 0.5, 2.0])
        out = shrinkage(a, 1.0, 2.0)
        np.testing.assert_allclose(out, [shrinkage(x, 1.0, 2.0) for x in a])

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            shrinkage(1.0, 1.0, 0.0)


def random_iterate(fem, sigma, seed, scale=0.1):
    rng = Rng(seed)
    p = (rng.uniforms(fem.n_interior) - 0.5) * scale
    y = rng.uniforms(fem.n_interior) - 0.5
    beta = rng.uniform() * 0.2 * scale
    u = shrinkage(p, beta, sigma)
    return ControlIterate(y=y, u=u, p=p, beta=beta)


class TestResidual:
    def test_zero_iterate(self):
        fem = assemble_fem(4, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.0, kappa=0.5, sigma=0.01)
        zero = np.zeros(fem.n_interior)
        z = ControlIterate(y=zero, u=zero, p=zero, beta=0.0)
        r, _ = residual(z, params, fem)
        n = fem.n_interior
        np.testing.assert_allclose(r[:n], -(fem.mass @ fem.y_d_h))
        np.testing.assert_allclose(r[n : 2 * n], 0.0)
        assert r[-1] == 0.0  # rho*(0 - kappa) < 0, so the max vanishes

    def test_smooth_solution_has_tiny_residual(self):
        # with a huge budget the threshold is 0 and the Tikhonov solve
        # satisfies the full system
        fem = assemble_fem(8, default_desired_state)
        z = solve_tikhonov(fem, 0.01)
        params = SubproblemParams(rho=1.0, v=0.0, kappa=1e6, sigma=0.01)
        _, norm = residual(z, params, fem)
        assert norm <= 1e-10

    def test_affine_in_desired_state(self):
        fem_a = assemble_fem(4, default_desired_state)
        fem_b = assemble_fem(4, lambda x, y: default_desired_state(x, y) + x * y)
        params = SubproblemParams(rho=1.0, v=0.2, kappa=0.5, sigma=0.01)
        z = random_iterate(fem_a, 0.01, seed=3)
        r_a, _ = residual(z, params, fem_a)
        r_b, _ = residual(z, params, fem_b)
        n = fem_a.n_interior
        diff = fem_a.y_d_h - fem_b.y_d_h
        np.testing.assert_allclose(r_a[:n] - r_b[:n], -(fem_a.mass @ diff), atol=1e-14)
        np.testing.assert_allclose(r_a[n:], r_b[n:], atol=0)


class TestNewtonSystem:
    def test_sign_property_on_active_sets(self):
        fem = assemble_fem(6, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.1, kappa=0.5, sigma=0.01)
        for seed in range(5):
            z = random_iterate(fem, params.sigma, seed)
            pattern = ActivePattern.from_iterate(z, params, fem)
            assert np.all(np.sign(z.u[pattern.i1]) == 1.0)
            assert np.all(np.sign(z.u[pattern.i2]) == -1.0)

    def test_decoupled_when_inactive(self):
        # dead-zone adjoint and slack budget: last row reads dbeta = -r3
        fem = assemble_fem(4, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.0, kappa=10.0, sigma=0.01)
        n = fem.n_interior
        p = np.zeros(n)  # |p| <= beta_+ everywhere
        z = ControlIterate(y=np.zeros(n), u=shrinkage(p, 0.5, 0.01), p=p, beta=0.5)
        pattern = ActivePattern.from_iterate(z, params, fem)
        assert not pattern.i1.any() and not pattern.i2.any()
        assert pattern.theta2_tilde == 0.0
        matrix = newton_system(z, pattern, params, fem).toarray()
        np.testing.assert_array_equal(matrix[-1, : 2 * n], 0.0)
        assert matrix[-1, -1] == 1.0
        r, _ = residual(z, params, fem)
        delta = sparse_solve(newton_system(z, pattern, params, fem), -r)
        assert delta[-1] == pytest.approx(-r[-1])

    def test_matches_dense_hand_assembly(self):
        # 3x3-cell mesh: assemble the (2N+1)^2 matrix entrywise from the
        # scalar formulas
        fem = assemble_fem(3, default_desired_state)
        n = fem.n_interior
        sigma = 0.05
        params = SubproblemParams(rho=2.0, v=0.3, kappa=0.01, sigma=sigma)
        z = random_iterate(fem, sigma, seed=11, scale=0.5)
        pattern = ActivePattern.from_iterate(z, params, fem)
        got = newton_system(z, pattern, params, fem).toarray()

        k = fem.stiffness.toarray()
        m = fem.mass.toarray()
        ml = fem.lumped
        chi = (pattern.i1 | pattern.i2).astype(float)
        chi_signed = pattern.i1.astype(float) - pattern.i2.astype(float)
        expected = np.zeros((2 * n + 1, 2 * n + 1))
        expected[:n, :n] = m
        expected[:n, n : 2 * n] = k
        expected[n : 2 * n, :n] = k
        for i in range(n):
            expected[n + i, n + i] = -ml[i] * chi[i] / sigma
            expected[n + i, 2 * n] = pattern.theta1 / sigma * ml[i] * chi_signed[i]
            expected[2 * n, n + i] = (
                -params.rho * pattern.theta2_tilde / sigma * np.sign(z.u[i]) * ml[i] * chi[i]
            )
        expected[2 * n, 2 * n] = 1.0 + params.rho * pattern.theta2_tilde * pattern.theta1 / sigma * ml[
            chi > 0
        ].sum()
        np.testing.assert_allclose(got, expected, rtol=0, atol=1e-14)

    def test_corner_coefficient_at_least_one(self):
        fem = assemble_fem(5, default_desired_state)
        params = SubproblemParams(rho=3.0, v=0.4, kappa=0.2, sigma=0.01)
        for seed in range(10):
            z = random_iterate(fem, params.sigma, seed)
            pattern = ActivePattern.from_iterate(z, params, fem)
            corner = newton_system(z, pattern, params, fem)[-1, -1]
            assert corner >= 1.0


class TestFullReducedEquivalence:
    def test_random_iterates_agree(self):
        fem = assemble_fem(4, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.3, kappa=0.5, sigma=0.01)
        for seed in range(10):
            z = random_iterate(fem, params.sigma, seed)
            step_dev, control_dev = full_reduced_step_deviation(z, params, fem)
            assert step_dev <= 1e-10
            assert control_dev <= 1e-10

    def test_decoupled_beta_matches_residual(self):
        fem = assemble_fem(4, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.0, kappa=10.0, sigma=0.01)
        n = fem.n_interior
        p = np.zeros(n)
        z = ControlIterate(y=np.zeros(n), u=shrinkage(p, 0.5, 0.01), p=p, beta=0.5)
        step_dev, control_dev = full_reduced_step_deviation(z, params, fem)
        assert max(step_dev, control_dev) <= 1e-12


class TestSsnSolve:
    def test_slack_budget_matches_tikhonov_in_two_steps(self):
        fem = assemble_fem(8, default_desired_state)
        sigma = 0.01
        params = SubproblemParams(rho=1e-4, v=0.0, kappa=1e6, sigma=sigma)
        y0 = np.zeros(fem.n_interior)
        p0 = sparse_solve(fem.stiffness, fem.mass @ fem.y_d_h)
        z, iterations, history = ssn_solve((y0, p0, 1e-6), params, fem, 1e-10)
        assert iterations <= 2
        reference = solve_tikhonov(fem, sigma)
        np.testing.assert_allclose(z.u, reference.u, atol=1e-9)
        np.testing.assert_allclose(z.y, reference.y, atol=1e-10)

    def test_zero_iterations_at_solution(self):
        fem = assemble_fem(8, default_desired_state)
        params = SubproblemParams(rho=1e-4, v=0.0, kappa=1e6, sigma=0.01)
        exact = solve_tikhonov(fem, 0.01)
        z, iterations, history = ssn_solve(
            (exact.y, exact.p, 0.0), params, fem, 1e-8
        )
        assert iterations == 0
        assert len(history) == 1

    def test_iteration_cap_raises(self):
        fem = assemble_fem(4, default_desired_state)
        params = SubproblemParams(rho=1.0, v=0.0, kappa=0.5, sigma=0.01)
        y0 = np.zeros(fem.n_interior)
        p0 = sparse_solve(fem.stiffness, fem.mass @ fem.y_d_h)
        with pytest.raises(SsnIterationError):
            ssn_solve((y0, p0, 1e-6), params, fem, 1e-10, max_iterations=0)

    def test_invariant_after_every_iteration(self):
        fem = assemble_fem(8, default_desired_state)
        params = SubproblemParams(rho=0.5, v=0.2, kappa=0.5, sigma=0.01)
        y0 = np.zeros(fem.n_interior)
        p0 = sparse_solve(fem.stiffness, fem.mass @ fem.y_d_h)
        z, _, _ = ssn_solve((y0, p0, 1e-6), params, fem, 1e-10)
        np.testing.assert_array_equal(z.u, shrinkage(z.p, z.beta, params.sigma))
