import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from funcgeom.embedding import (
    DeltaManifold,
    GaussianKernelFunction,
    PointIsometry,
    delta_convergence_ratio,
    induced_metric,
    isometry_pushforward,
    path_speed_invariance,
)
from funcgeom.gridspace import StateVector, delta_state, gaussian_kernel, kernel_inner, make_grid

# oracle: for psi = exp(-x^2/2) and the normalized kernel of width 1/L the
# Fourier integral gives 1/sqrt(1 + 1/(2 L^2))
DELTA_RATIO_ORACLE = {1: 0.8164965809277261, 3: 0.9733285267845753, 10: 0.9975093361076328,
                      30: 0.9997223379094053, 100: 0.999975000937461}

points = st.lists(st.floats(-5, 5), min_size=1, max_size=3)


class TestInducedMetric:
    @given(points)
    def test_unit_gaussian_is_euclidean(self, a):
        g = induced_metric(GaussianKernelFunction(0.5), a)
        np.testing.assert_allclose(g, np.eye(len(a)), atol=1e-12)

    @given(points, st.floats(0.2, 5.0))
    def test_scaled_kernel(self, a, c):
        k = GaussianKernelFunction.scaled(c)
        np.testing.assert_allclose(induced_metric(k, a), c * c * np.eye(len(a)), rtol=1e-12)

    @given(points)
    def test_fd_matches_analytic(self, a):
        k = GaussianKernelFunction(0.5)
        d = np.abs(induced_metric(k, a, "fd", h=1e-3) - induced_metric(k, a, "analytic")).max()
        assert d <= 1e-5

    @given(points, st.floats(0.1, 3.0))
    def test_symmetric_positive_definite(self, a, alpha):
        g = induced_metric(GaussianKernelFunction(alpha), a, "fd")
        np.testing.assert_array_equal(g, g.T)
        assert np.linalg.eigvalsh(g).min() > 0

    def test_fd_on_plain_callable(self):
        # the unit Gaussian in expanded form, as a bare callable without a width
        def k(x, y):
            return float(np.exp(np.dot(x, y) - 0.5 * np.dot(x, x) - 0.5 * np.dot(y, y)))
        g = induced_metric(k, [0.3, -0.2], "fd")
        np.testing.assert_allclose(g, np.eye(2), atol=1e-6)

    def test_underflowing_step(self):
        with pytest.raises(ValueError, match="underflow"):
            induced_metric(GaussianKernelFunction(0.5), [1e20], "fd", h=1e-3)

    def test_asymmetric_kernel_rejected(self):
        def k(x, y):
            return float(np.exp(-0.5 * np.sum((x - y) ** 2)) * (1 + 0.3 * x[0] * y[1]))
        with pytest.raises(ValueError, match="symmetric"):
            induced_metric(k, [0.0, 0.0], "fd")

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            induced_metric(GaussianKernelFunction(), [0.0], "spline")


class TestPathSpeed:
    def test_straight_line(self):
        v = np.array([0.3, -1.2, 0.5])
        rows = path_speed_invariance(GaussianKernelFunction(0.5), lambda t: np.array([1.0, 0.0, 2.0]) + v * t,
                                     np.linspace(0, 1, 5))
        for lhs, rhs in rows:
            assert lhs == pytest.approx(np.linalg.norm(v), abs=1e-8)
            assert rhs == pytest.approx(np.linalg.norm(v), abs=1e-8)

    def test_stationary(self):
        rows = path_speed_invariance(GaussianKernelFunction(0.5), lambda t: np.array([0.5, 0.5]), [0.0, 1.0])
        assert rows == [(0.0, 0.0), (0.0, 0.0)]

    @pytest.mark.parametrize("r", [0.5, 2.0])
    def test_circle(self, r):
        rows = path_speed_invariance(GaussianKernelFunction(0.5), lambda t: r * np.array([np.cos(t), np.sin(t)]),
                                     np.linspace(0, 2 * np.pi, 7))
        for lhs, rhs in rows:
            assert lhs == pytest.approx(r, abs=1e-6)
            assert rhs == pytest.approx(r, abs=1e-6)

    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.2, 2.0))
    def test_lhs_equals_rhs(self, c1, c2, alpha):
        rows = path_speed_invariance(GaussianKernelFunction(alpha),
                                     lambda t: np.array([c1 * np.sin(t), c2 * t * t]), [0.3, 1.1])
        for lhs, rhs in rows:
            assert abs(lhs - rhs) <= 1e-6

    def test_path_leaving_open_grid(self):
        m = DeltaManifold(make_grid(1, 9, 8.0, periodic=False), GaussianKernelFunction(0.5))
        with pytest.raises(ValueError, match="leaves"):
            path_speed_invariance(m, lambda t: np.array([t]), [0.0, 5.0])

    def test_manifold_metric(self):
        m = DeltaManifold(make_grid(2, 8, 8.0), GaussianKernelFunction(0.5))
        np.testing.assert_allclose(m.metric_at([0.1, 0.2]), np.eye(2))
        assert m.kernel.kind == "smooth-kernel"


class TestIsometries:
    def test_rotation_moves_delta(self):
        g = make_grid(2, 8, 8.0)
        out = isometry_pushforward(PointIsometry.rotation90(), delta_state(g, [1.0, 0.0]))
        np.testing.assert_array_equal(out.values, delta_state(g, [0.0, 1.0]).values)

    def test_translation_moves_delta(self):
        g = make_grid(1, 8, 4.0)
        out = isometry_pushforward(PointIsometry.translation([3]), delta_state(g, -1.0))
        np.testing.assert_array_equal(out.values, delta_state(g, 0.5).values)

    def test_identity(self):
        g = make_grid(2, 6, 6.0)
        phi = StateVector(g, np.arange(36) * (1 + 2j))
        np.testing.assert_array_equal(isometry_pushforward(PointIsometry.identity(2), phi).values, phi.values)

    @given(st.integers(0, 3), st.integers(0, 3), st.integers(-8, 8), st.integers(-8, 8))
    def test_composition_bit_exact(self, r1, r2, s1, s2):
        g = make_grid(2, 6, 6.0)
        rot = PointIsometry.rotation90()
        P1, P2 = PointIsometry.translation([s1, 0]), PointIsometry.translation([0, s2])
        for _ in range(r1):
            P1 = rot.compose(P1)
        for _ in range(r2):
            P2 = P2.compose(rot)
        phi = StateVector(g, np.random.default_rng(r1 + 4 * r2).normal(size=36) + 0j)
        a = isometry_pushforward(P1, isometry_pushforward(P2, phi))
        b = isometry_pushforward(P1.compose(P2), phi)
        np.testing.assert_array_equal(a.values, b.values)

    def test_preserves_kernel_inner_exactly(self):
        g = make_grid(2, 8, 16.0)
        K = gaussian_kernel(g, 0.5)
        r = np.random.default_rng(1)
        phi = StateVector(g, r.normal(size=64) + 1j * r.normal(size=64))
        psi = StateVector(g, r.normal(size=64) + 1j * r.normal(size=64))
        P = PointIsometry.rotation90().compose(PointIsometry.translation([2, -3]))
        before = kernel_inner(K, phi, psi)
        after = kernel_inner(K, isometry_pushforward(P, phi), isometry_pushforward(P, psi))
        assert abs(after - before) <= 1e-12 * abs(before)

    def test_non_orthogonal_rejected(self):
        with pytest.raises(ValueError):
            PointIsometry(((1, 1), (0, 1)), (0, 0))

    def test_misaligned_open_grid_rejected(self):
        g = make_grid(1, 5, 4.0, periodic=False)
        with pytest.raises(ValueError):
            PointIsometry.translation([1]).node_permutation(g)


class TestDeltaConvergence:
    @staticmethod
    def profile(x):
        return np.exp(-x**2 / 2)

    @pytest.mark.parametrize("L", sorted(DELTA_RATIO_ORACLE))
    def test_against_oracle(self, L):
        assert delta_convergence_ratio(self.profile, L) == pytest.approx(DELTA_RATIO_ORACLE[L], abs=1e-9)

    def test_oracle_formula(self):
        for L, v in DELTA_RATIO_ORACLE.items():
            assert v == pytest.approx(L / np.sqrt(L * L + 0.5), rel=1e-15)

    def test_dense_quadrature_oracle_at_L1(self):
        # independent double integral, no convolution
        x = np.linspace(-12, 12, 1201)
        dx = x[1] - x[0]
        k = np.exp(-0.5 * (x[:, None] - x[None, :]) ** 2) / np.sqrt(2 * np.pi)
        p = self.profile(x)
        ratio = p @ k @ p * dx / (p @ p)
        assert delta_convergence_ratio(self.profile, 1) == pytest.approx(ratio, abs=1e-9)

    def test_limit_and_monotone(self):
        r = [delta_convergence_ratio(self.profile, L) for L in (1, 3, 10, 30, 100)]
        assert abs(r[-1] - 1) <= 1e-3
        assert all(b >= a for a, b in zip(r, r[1:]))
        assert r[0] < 0.9
        assert all(0 < v <= 1 for v in r)

    def test_state_vector_input(self):
        g = make_grid(1, 2048, 20.0)
        phi = StateVector(g, self.profile(g.axis()))
        assert delta_convergence_ratio(phi, 3) == pytest.approx(DELTA_RATIO_ORACLE[3], abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            delta_convergence_ratio(self.profile, 0.5)
        with pytest.raises(ValueError, match="resolve"):
            delta_convergence_ratio(StateVector(make_grid(1, 64, 20.0), np.ones(64)), 10)
