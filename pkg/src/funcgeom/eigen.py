"""Generalized eigenvalue problems posed on the dual space.

A functional ``f`` solves the problem for ``A`` when ``f(A phi) =
lambda f(phi)`` for every ``phi``.  On a grid the functional is a covector
and the condition says it is a left eigenvector of the matrix.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .gridspace import Grid, Isomorphism, StateVector, _check_same, pushforward_operator

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DualVector:
    """Covector on a grid with pairing ``f(phi) = sum f_i phi_i w``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).ravel()
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, phi: StateVector) -> complex:
        _check_same(self.grid, phi.grid)
        return complex(np.dot(self.values, phi.values) * self.grid.weight)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.weight))

    def pullback(self, omega: Isomorphism) -> "DualVector":
        """``f o omega`` as a covector on ``omega.grid_in``."""
        _check_same(self.grid, omega.grid_out)
        ratio = omega.grid_out.weight / omega.grid_in.weight
        return DualVector(omega.grid_in, ratio * (omega.forward.T @ self.values))


def evaluation_covector(grid: Grid, index: int) -> DualVector:
    """Covector returning the value at one node."""
    v = np.zeros(grid.size, dtype=complex)
    v[index] = 1.0 / grid.weight
    return DualVector(grid, v)


@dataclass(frozen=True)
class EigenPair:
    value: complex
    covector: DualVector

    def to_dict(self) -> dict:
        c = self.covector.values
        return {
            "lambda_re": float(self.value.real),
            "lambda_im": float(self.value.imag),
            "covector": np.column_stack([c.real, c.imag]).ravel().tolist(),
        }


def eigen_residual(A, value: complex, f: DualVector) -> float:
    """``|| f o A - value f ||`` in the plain dual norm."""
    _check_same(A.grid, f.grid)
    r = A.matrix.T @ f.values - value * f.values
    return float(np.sqrt(np.sum(np.abs(r) ** 2) * f.grid.weight))


def _group(values: np.ndarray, tol: float) -> list[np.ndarray]:
    order = np.argsort(values.real + 1e-3 * values.imag, kind="stable")
    groups, current = [], [order[0]]
    for i in order[1:]:
        if abs(values[i] - values[current[-1]]) <= tol:
            current.append(i)
        else:
            groups.append(np.array(current))
            current = [i]
    groups.append(np.array(current))
    return groups


def generalized_eigenpairs(A, tol: float = RESIDUAL_TOL) -> list[EigenPair]:
    """All left eigenpairs of ``A``, sorted by eigenvalue.

    Covectors are normalized in the plain dual norm.  A degenerate
    eigenvalue contributes an orthonormal basis of its covector space.
    Raises ``RuntimeError`` when any residual exceeds ``tol`` times the
    operator scale.
    """
    M = np.asarray(A.matrix)
    grid = A.grid
    scale = max(np.linalg.norm(M, 2), 1.0)
    hermitian = np.linalg.norm(M - M.conj().T) <= 1e-12 * scale
    if hermitian:
        lam, V = scipy.linalg.eigh(M)
        # conj(v) is a left eigenvector when v is a right one
        lam = lam.astype(complex)
        F = V.conj()
    else:
        lam, F = scipy.linalg.eig(M.T)
        tol_group = 1e-8 * scale
        for idx in _group(lam, tol_group):
            if len(idx) > 1:
                Q, _ = np.linalg.qr(F[:, idx])
                F[:, idx] = Q
                lam[idx] = lam[idx].mean()
    pairs = []
    for i in np.argsort(lam.real + 1e-3 * lam.imag, kind="stable"):
        v = F[:, i] / np.sqrt(np.sum(np.abs(F[:, i]) ** 2) * grid.weight)
        pair = EigenPair(complex(lam[i]), DualVector(grid, v))
        res = eigen_residual(A, pair.value, pair.covector)
        if res > tol * scale:
            raise RuntimeError(f"eigenpair residual {res:.2e} exceeds tolerance")
        pairs.append(pair)
    return pairs


def transform_eigenproblem(A, f: DualVector, omega: Isomorphism):
    """Express the problem ``(A, f)`` in new coordinates.

    Returns ``(omega^-1 A omega, f o omega)``; the eigenvalue is untouched.
    """
    _check_same(A.grid, omega.grid_out)
    return pushforward_operator(A, omega), f.pullback(omega)


def covariance_defect(A, omega: Isomorphism, phi: StateVector) -> float:
    """L2 norm of ``(omega^-1 A omega)(omega^-1 phi) - omega^-1 (A phi)``."""
    _check_same(A.grid, phi.grid)
    A_new = pushforward_operator(A, omega)
    lhs = A_new.matrix @ (omega.inverse @ phi.values)
    rhs = omega.inverse @ (A.matrix @ phi.values)
    return float(np.sqrt(np.sum(np.abs(lhs - rhs) ** 2) * omega.grid_in.weight))


def dump_eigenpairs(pairs: list[EigenPair], path) -> None:
    with open(path, "w") as fh:
        json.dump([p.to_dict() for p in pairs], fh)
