import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from funcgeom.dynamics import (
    LinearObservable,
    drag_functional,
    flow_commutator,
    grid_closure_defect,
    hamiltonian,
    integral_curve,
    lie_bracket,
    momentum_observable,
    position_observable,
    vector_field,
)
from funcgeom.eigen import DualVector, evaluation_covector
from funcgeom.experiments import gaussian_packet, random_hermitian, random_state
from funcgeom.gridspace import StateVector, make_grid

GRID = make_grid(1, 16, 8.0)


def _pair(seed):
    r = np.random.default_rng(seed)
    return random_hermitian(GRID, r, name="A"), random_hermitian(GRID, r, name="B"), random_state(GRID, r)


class TestObservables:
    def test_rejects_non_hermitian(self):
        m = np.zeros((16, 16))
        m[0, 1] = 1
        with pytest.raises(ValueError, match="Hermitian"):
            LinearObservable(GRID, m)

    def test_momentum_on_plane_wave(self):
        g = make_grid(1, 32, 2 * np.pi)
        phi = StateVector(g, np.exp(3j * g.axis()))
        np.testing.assert_allclose(momentum_observable(g)(phi).values, 3 * phi.values, atol=1e-12)

    def test_momentum_direction_2d(self):
        g = make_grid(2, 8, 2 * np.pi)
        x = g.coords
        phi = StateVector(g, np.exp(1j * (x[:, 0] + 2 * x[:, 1])))
        out = momentum_observable(g, [0.5, 1.0])(phi)
        np.testing.assert_allclose(out.values, 2.5 * phi.values, atol=1e-12)

    def test_hamiltonian_on_plane_wave(self):
        g = make_grid(1, 32, 2 * np.pi)
        phi = StateVector(g, np.exp(2j * g.axis()))
        np.testing.assert_allclose(hamiltonian(g, mass=1.0)(phi).values, 2.0 * phi.values, atol=1e-11)

    def test_position_is_diagonal(self):
        X = position_observable(GRID)
        np.testing.assert_array_equal(np.diag(X.matrix).real, GRID.axis())

    def test_shifted(self):
        A = position_observable(GRID).shifted(2.0)
        np.testing.assert_allclose(A.eig[0], np.sort(GRID.axis()) + 2.0)

    def test_vector_field(self):
        A, _, phi = _pair(0)
        np.testing.assert_allclose(vector_field(A, phi).values, -1j * A.matrix @ phi.values)


class TestFlows:
    @given(st.integers(0, 1000), st.floats(-2, 2), st.floats(-2, 2))
    def test_flow_property(self, seed, s, t):
        A, _, phi = _pair(seed)
        U = A.propagator
        np.testing.assert_allclose(U(s) @ (U(t) @ phi.values), U(s + t) @ phi.values, atol=1e-10)

    @given(st.integers(0, 1000))
    def test_unitarity(self, seed):
        A, _, phi = _pair(seed)
        path = integral_curve(A, phi, np.linspace(0, 5, 11))
        np.testing.assert_allclose(path.norms(), phi.norm(), rtol=1e-10)

    def test_expectation_conserved(self):
        A, _, phi = _pair(1)
        e = integral_curve(A, phi, np.linspace(0, 3, 7)).expectations(A)
        np.testing.assert_allclose(e, e[0], rtol=1e-10)

    def test_curve_solves_equation(self):
        A, _, phi = _pair(2)
        h = 1e-4
        path = integral_curve(A, phi, [0.5 - h, 0.5, 0.5 + h]).values
        d = (path[2] - path[0]) / (2 * h)
        np.testing.assert_allclose(d, -1j * A.matrix @ path[1], atol=1e-6)

    def test_zero_initial_state(self):
        with pytest.raises(ValueError):
            integral_curve(position_observable(GRID), StateVector(GRID, np.zeros(16)), [0, 1])

    def test_csv_and_summary(self, tmp_path):
        A, _, phi = _pair(3)
        path = integral_curve(A, phi, [0.0, 0.1])
        path.to_csv(tmp_path / "p.csv")
        rows = (tmp_path / "p.csv").read_text().splitlines()
        assert rows[0] == "tau,node,re,im" and len(rows) == 33
        assert set(path.summary()) == {"tau", "norm", "expectation"}


class TestBrackets:
    @given(st.integers(0, 1000))
    def test_antisymmetry_and_jacobi(self, seed):
        r = np.random.default_rng(seed)
        A, B, C = (random_hermitian(GRID, r) for _ in range(3))
        np.testing.assert_allclose(lie_bracket(A, B).matrix, -lie_bracket(B, A).matrix, atol=1e-12)
        br = lambda X, Y: X @ Y - Y @ X  # noqa: E731
        a, b, c = A.matrix, B.matrix, C.matrix
        jac = br(a, br(b, c)) + br(b, br(c, a)) + br(c, br(a, b))
        assert np.abs(jac).max() < 1e-10

    def test_flow_commutator_first_order(self):
        A, B, phi = _pair(4)
        exact = lie_bracket(A, B)(phi).values
        errs = [np.linalg.norm(flow_commutator(A, B, phi, e).values - exact) for e in (1e-2, 1e-3)]
        assert errs[0] / errs[1] == pytest.approx(10, rel=0.2)

    def test_closure(self):
        phi = gaussian_packet(make_grid(2, 16, 16.0), [0, 0], 1.5)
        g = phi.grid
        P1, P2 = momentum_observable(g, [1, 0]), momentum_observable(g, [0, 1])
        X1 = position_observable(g, [1, 0])
        assert grid_closure_defect(P1, P2, phi, 0.7, 0.4) <= 1e-10
        assert grid_closure_defect(X1, P1, phi, 0.7, 0.4) > 0.1

    def test_canonical_commutator(self):
        g = make_grid(1, 128, 32.0)
        phi = gaussian_packet(g, 0.0, 1.0)
        P, X = momentum_observable(g), position_observable(g)
        out = lie_bracket(P, X)(phi).values
        np.testing.assert_allclose(out, -1j * phi.values, atol=1e-6)


class TestDrag:
    def test_defining_property(self):
        A, _, phi = _pair(5)
        f = DualVector(GRID, np.random.default_rng(6).normal(size=16) + 0j)
        eps = 0.3
        lhs = drag_functional(f, A, eps)(phi)
        rhs = f(StateVector(GRID, A.propagator(eps) @ phi.values))
        assert lhs == pytest.approx(rhs, abs=1e-12)
        assert abs(f(phi) - rhs) > 1e-3

    def test_evaluation_covector_moves_against_translation(self):
        g = make_grid(1, 16, 16.0)
        P = momentum_observable(g)
        f = evaluation_covector(g, 8)
        dragged = drag_functional(f, P, 2.0)
        # exp(-i 2 p) shifts states by +2, so f_eps(phi) = (U phi)(x_8) = phi(x_8 - 2)
        expected = evaluation_covector(g, 6).values
        np.testing.assert_allclose(dragged.values, expected, atol=1e-12)
