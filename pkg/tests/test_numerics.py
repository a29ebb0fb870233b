import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from superdark import numerics
from superdark.errors import ConvergenceError, EvaluationError, InputError, SingularSystemError
from superdark.numerics import (
    eigh_symmetric,
    golden_section,
    minimize_multi,
    minimize_scalar,
    moment_residuals,
    solve_moment_constraints,
    sphere_quadrature,
)


def random_symmetric(n, seed):
    a = np.random.default_rng(seed).normal(size=(n, n))
    return a + a.T


class TestEigh:
    def test_diagonal_input(self):
        e = eigh_symmetric(np.diag([3.0, 1.0, 2.0]))
        np.testing.assert_array_equal(e.values, [1.0, 2.0, 3.0])
        np.testing.assert_allclose(np.abs(e.vectors), np.eye(3)[:, [1, 2, 0]], atol=1e-15)

    def test_two_by_two_swap(self):
        e = eigh_symmetric([[0.0, 1.0], [1.0, 0.0]])
        np.testing.assert_allclose(e.values, [-1.0, 1.0], atol=1e-15)
        s = 1 / math.sqrt(2)
        np.testing.assert_allclose(e.vectors[:, 0], [s, -s], atol=1e-15)
        np.testing.assert_allclose(e.vectors[:, 1], [s, s], atol=1e-15)

    def test_reconstruction_9x9(self):
        m = random_symmetric(9, 0)
        e = eigh_symmetric(m)
        rebuilt = e.vectors @ np.diag(e.values) @ e.vectors.T
        assert np.max(np.abs(rebuilt - m)) <= 1e-11

    @pytest.mark.parametrize("n", [1, 2, 5, 12, 48])
    def test_against_lapack(self, n):
        m = random_symmetric(n, n)
        e = eigh_symmetric(m)
        np.testing.assert_allclose(e.values, np.linalg.eigvalsh(m), atol=1e-11 * np.abs(m).max())

    @settings(max_examples=40, deadline=None)
    @given(arrays(float, (6, 6), elements=st.floats(-1e3, 1e3)))
    def test_invariants(self, a):
        m = a + a.T
        e = eigh_symmetric(m)
        norm_inf = max(np.max(np.sum(np.abs(m), axis=1)), 1e-300)
        residual = m @ e.vectors - e.vectors * e.values
        assert np.max(np.abs(residual)) <= 1e-11 * norm_inf + 1e-300
        assert np.max(np.abs(e.vectors.T @ e.vectors - np.eye(6))) <= 1e-12
        assert np.all(np.diff(e.values) >= 0)
        assert abs(np.sum(e.values) - np.trace(m)) <= 1e-11 * max(norm_inf, 1.0)

    def test_sign_convention(self):
        e = eigh_symmetric(random_symmetric(5, 3))
        for v in e.vectors.T:
            first = v[np.abs(v) > 1e-9][0]
            assert first > 0

    def test_rejects_non_finite(self):
        with pytest.raises(InputError):
            eigh_symmetric([[1.0, np.nan], [np.nan, 1.0]])

    def test_rejects_asymmetric(self):
        with pytest.raises(InputError):
            eigh_symmetric([[1.0, 2.0], [0.0, 1.0]])


class TestSphereQuadrature:
    def test_weights_sum(self):
        q = sphere_quadrature()
        assert abs(q.weights.sum() / (4 * math.pi) - 1) <= 1e-12
        assert len(q.nodes) == 64 * 64

    def test_constant(self):
        q = sphere_quadrature(8, 4)
        assert abs(q.integrate(lambda t, p: np.ones_like(t)) - 4 * math.pi) <= 1e-12

    def test_sin_squared(self):
        q = sphere_quadrature(8, 4)
        val = q.integrate(lambda t, p: np.sin(t) ** 2)
        assert abs(val - 8 * math.pi / 3) <= 1e-12

    def test_plane_wave_average(self):
        q = sphere_quadrature()
        val = q.integrate(lambda t, p: np.cos(2.0 * np.cos(t)))
        assert abs(val - 4 * math.pi * math.sin(2.0) / 2.0) <= 1e-10

    @pytest.mark.parametrize("xi", [0.3, 1.0, 4.0, 7.5, 10.0])
    def test_default_rule_handles_xi_up_to_ten(self, xi):
        # tilted direction exercises the phi nodes as well
        q = sphere_quadrature()
        n = np.array([0.6, 0.0, 0.8])
        k = q.directions()
        phase = xi * (k @ n)
        re = np.sum(q.weights * np.cos(phase))
        im = np.sum(q.weights * np.sin(phase))
        assert abs(re - 4 * math.pi * math.sin(xi) / xi) <= 1e-12
        assert abs(im) <= 1e-12

    def test_spherical_harmonic_product(self):
        # Y_2^1-type product: integral of (sin t cos t cos p)^2 = 4 pi / 15
        q = sphere_quadrature(8, 8)
        val = q.integrate(lambda t, p: (np.sin(t) * np.cos(t) * np.cos(p)) ** 2)
        assert abs(val - 4 * math.pi / 15) <= 1e-12

    def test_rejects_small_rules(self):
        with pytest.raises(InputError):
            sphere_quadrature(1, 8)


def nullspace_oracle(positions):
    """Unit vector orthogonal to the first N-1 power columns, via complete QR."""
    t = numerics.scaled_coordinates(positions)
    m = np.vander(t, len(t) - 1, increasing=True)
    q, _ = np.linalg.qr(m, mode="complete")
    return numerics.fix_sign(q[:, -1])


class TestMomentConstraints:
    def test_equal_three(self):
        c = solve_moment_constraints([0.0, 0.5, 1.0])
        np.testing.assert_allclose(c, np.array([1, -2, 1]) / math.sqrt(6), atol=1e-15)

    def test_uneven_three(self):
        # hand-solved: c1 + c2 + c3 = 0, c2/3 + c3 = 0 -> (2, -3, 1)
        c = solve_moment_constraints([0.0, 1 / 3, 1.0])
        expected = np.array([-2, 3, -1]) / math.sqrt(14)
        assert min(np.max(np.abs(c - expected)), np.max(np.abs(c + expected))) <= 1e-15
        assert c[0] > 0

    def test_pair(self):
        c = solve_moment_constraints([0.0, 1.0])
        np.testing.assert_allclose(np.abs(c), [1 / math.sqrt(2)] * 2, atol=1e-15)
        assert c[0] == -c[1]

    def test_duplicates(self):
        with pytest.raises(SingularSystemError):
            solve_moment_constraints([0.0, 0.3, 0.3, 1.0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=10, unique=True))
    def test_moments_vanish_and_match_qr(self, xs):
        x = np.array(sorted(xs))
        if np.min(np.diff(x)) < 1e-3 * (x[-1] - x[0]):
            return
        c = solve_moment_constraints(x)
        assert abs(np.linalg.norm(c) - 1) <= 1e-14
        assert np.max(np.abs(moment_residuals(x, c))) <= 1e-10
        np.testing.assert_allclose(c, nullspace_oracle(x), atol=1e-9)

    def test_invariant_under_affine_map(self):
        x = np.array([0.0, 0.2, 0.7, 1.0, 1.6])
        np.testing.assert_allclose(
            solve_moment_constraints(x), solve_moment_constraints(3.0 * x - 7.0), atol=1e-14
        )


class TestScalarMinimizer:
    def test_quadratic(self):
        x, fx = minimize_scalar(lambda x: (x + 7 / 8) ** 2, (-2.0, 0.0), tol=1e-9)
        assert abs(x + 0.875) <= 1e-9

    def test_kink(self):
        _, fx = minimize_scalar(lambda x: abs(x) + 1.0, (-1.0, 1.0), tol=1e-9)
        assert abs(fx - 1.0) <= 1e-8

    def test_narrow_well_found_by_prescan(self):
        # a well far narrower than the bracket, off-centre
        f = lambda x: 0.01 * abs(x - 0.3137) + 1.0 - math.exp(-(((x - 0.3137) / 1e-4) ** 2))
        x, fx = minimize_scalar(f, (-5.0, 5.0), tol=1e-10)
        assert abs(x - 0.3137) <= 1e-8

    @settings(max_examples=40, deadline=None)
    @given(st.floats(-0.9, 0.9), st.floats(0.1, 10.0), st.sampled_from([2, 4]))
    def test_unimodal(self, x0, scale, power):
        x, _ = minimize_scalar(lambda x: scale * abs(x - x0) ** power, (-1.0, 1.0), tol=1e-9)
        assert abs(x - x0) <= 1e-9 if power == 2 else abs(x - x0) <= 1e-6

    def test_golden_matches_scipy(self):
        from scipy.optimize import minimize_scalar as scipy_min

        f = lambda x: math.cosh(x - 0.4) + 0.1 * x**3
        x, _ = golden_section(f, -1.0, 1.5, tol=1e-10)
        ref = scipy_min(f, bounds=(-1.0, 1.5), method="bounded", options={"xatol": 1e-12}).x
        # a smooth minimum is only located to ~sqrt(machine eps)
        assert abs(x - ref) <= 1e-7

    def test_non_finite(self):
        with pytest.raises(EvaluationError):
            minimize_scalar(lambda x: math.nan, (0.0, 1.0))

    def test_bad_bracket(self):
        with pytest.raises(InputError):
            minimize_scalar(lambda x: x, (1.0, 0.0))


class TestMultiMinimizer:
    def test_bowl(self):
        x, fx = minimize_multi(lambda p: np.sum((p - 1.0) ** 2), [0.0, 0.0], step=0.1, tol=1e-10)
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-6)

    def test_one_dimension_agrees_with_scalar(self):
        f = lambda x: (np.ravel(x)[0] + 7 / 8) ** 2
        xm, _ = minimize_multi(f, [0.0], step=0.1, tol=1e-10)
        xs, _ = minimize_scalar(lambda x: (x + 7 / 8) ** 2, (-2.0, 0.0), tol=1e-10)
        assert abs(xm[0] - xs) <= 1e-6

    def test_anisotropic_valley(self):
        # condition number 1e8, the shape met in the N >= 5 shift landscapes
        f = lambda p: (p[0] + p[1] - 1.0) ** 2 + 1e-8 * (p[0] - p[1]) ** 2
        x, fx = minimize_multi(f, [0.0, 0.0], step=0.1, tol=1e-12)
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-4)

    def test_axis_stationarity(self):
        f = lambda p: (p[0] - 0.3) ** 2 + 2 * (p[1] + 0.1) ** 2 + 0.5 * (p[2] - p[0]) ** 2 + 1.0
        tol = 1e-8
        x, fx = minimize_multi(f, [1.0, 1.0, 1.0], step=0.5, tol=tol)
        for e in np.eye(3):
            for s in (1, -1):
                assert f(x + s * tol * e) >= fx - tol * abs(fx)

    def test_non_finite(self):
        with pytest.raises(EvaluationError):
            minimize_multi(lambda p: math.inf, [0.0])

    def test_convergence_error_carries_best(self):
        with pytest.raises(ConvergenceError) as info:
            minimize_multi(lambda p: (p[0] - 1.0) ** 2, [1e3], step=1e-6, tol=1e-12, max_rounds=1)
        assert info.value.best is not None
