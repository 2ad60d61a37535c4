import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from funcgeom.dynamics import LinearObservable, hamiltonian, momentum_observable, position_observable
from funcgeom.eigen import (
    DualVector,
    covariance_defect,
    dump_eigenpairs,
    eigen_residual,
    evaluation_covector,
    generalized_eigenpairs,
    transform_eigenproblem,
)
from funcgeom.experiments import gaussian_packet, random_hermitian
from funcgeom.gridspace import StateVector, dft_isomorphism, make_grid


class TestDualVector:
    def test_evaluation(self):
        g = make_grid(1, 8, 4.0)
        phi = StateVector(g, np.arange(8) + 1j)
        assert evaluation_covector(g, 3)(phi) == pytest.approx(3 + 1j)

    def test_pullback_defining_property(self):
        g = make_grid(1, 16, 8.0)
        F = dft_isomorphism(g)
        r = np.random.default_rng(0)
        f = DualVector(F.grid_out, r.normal(size=16) + 1j * r.normal(size=16))
        phi = StateVector(g, r.normal(size=16) + 1j * r.normal(size=16))
        assert f.pullback(F)(phi) == pytest.approx(f(F(phi)), rel=1e-12)

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            DualVector(make_grid(1, 8, 4.0), np.ones(7))


class TestEigenpairs:
    @given(st.integers(0, 300))
    def test_hermitian_random(self, seed):
        g = make_grid(1, 8, 4.0)
        A = random_hermitian(g, np.random.default_rng(seed))
        pairs = generalized_eigenpairs(A)
        assert len(pairs) == 8
        np.testing.assert_allclose([p.value.real for p in pairs], np.linalg.eigvalsh(A.matrix), atol=1e-12)
        for p in pairs:
            assert p.covector.norm() == pytest.approx(1.0)
            assert eigen_residual(A, p.value, p.covector) <= 1e-10 * 3

    def test_non_hermitian_degenerate(self):
        g = make_grid(1, 4, 4.0)
        T = np.array([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 2]], dtype=float)
        A = LinearObservable(g, T @ np.diag([1.0, 2.0, 5.0, 5.0]) @ np.linalg.inv(T), hermitian=False)
        pairs = generalized_eigenpairs(A)
        vals = sorted(p.value.real for p in pairs)
        np.testing.assert_allclose(vals, [1, 2, 5, 5], atol=1e-10)
        five = np.array([p.covector.values for p in pairs if abs(p.value - 5) < 1e-6])
        gram = five.conj() @ five.T * g.weight
        np.testing.assert_allclose(gram, np.eye(2), atol=1e-10)

    def test_defining_relation_on_states(self):
        g = make_grid(1, 32, 16.0)
        P = momentum_observable(g)
        r = np.random.default_rng(3)
        for pair in generalized_eigenpairs(P)[::5]:
            phi = StateVector(g, r.normal(size=32) + 1j * r.normal(size=32))
            assert abs(pair.covector(P(phi)) - pair.value * pair.covector(phi)) <= 1e-9

    def test_position_covectors_are_evaluations(self):
        g = make_grid(1, 8, 8.0)
        pairs = generalized_eigenpairs(position_observable(g))
        for i, p in enumerate(pairs):
            assert p.value.real == pytest.approx(g.axis()[i])
            assert np.argmax(np.abs(p.covector.values)) == i

    def test_dump(self, tmp_path):
        g = make_grid(1, 4, 4.0)
        dump_eigenpairs(generalized_eigenpairs(position_observable(g)), tmp_path / "e.json")
        data = json.loads((tmp_path / "e.json").read_text())
        assert len(data) == 4 and set(data[0]) == {"lambda_re", "lambda_im", "covector"}
        assert len(data[0]["covector"]) == 8


class TestTransformations:
    def test_spectrum_invariant(self):
        g = make_grid(1, 64, 32.0)
        F = dft_isomorphism(g)
        h = hamiltonian(g, lambda x: 0.2 * x[:, 0] ** 2)
        hk, _ = transform_eigenproblem(h, DualVector(g, np.ones(64)), F.inv())
        np.testing.assert_allclose(np.linalg.eigvalsh(hk.matrix), h.eig[0], atol=1e-10)

    def test_plane_wave_covector_localizes(self):
        g = make_grid(1, 128, 64.0)
        F = dft_isomorphism(g)
        k = g.dual().axis()
        p = k[70]
        f = DualVector(g, np.exp(-1j * p * g.axis()))
        Pk, fk = transform_eigenproblem(momentum_observable(g), f, F.inv())
        v = np.abs(fk.values)
        assert np.argmax(v) == 70
        assert np.delete(v, 70).max() / v[70] <= 1e-8
        assert eigen_residual(Pk, p, fk) <= 1e-9

    def test_covariance(self):
        g = make_grid(1, 64, 32.0)
        F = dft_isomorphism(g)
        kg = F.grid_out
        shell = LinearObservable(kg, np.diag(kg.axis() ** 2 - 1.0))
        assert covariance_defect(shell, F, F(gaussian_packet(g, 0, 2, 0.5))) <= 1e-9

    def test_covariance_non_hermitian(self):
        g = make_grid(1, 16, 8.0)
        F = dft_isomorphism(g)
        r = np.random.default_rng(0)
        B = LinearObservable(F.grid_out, r.normal(size=(16, 16)), hermitian=False)
        phi = StateVector(F.grid_out, r.normal(size=16) + 0j)
        assert covariance_defect(B, F, phi) <= 1e-9
