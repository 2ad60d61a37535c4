"""Observables as linear vector fields ``phi -> -i A phi`` and their flows."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.linalg

from .eigen import DualVector
from .gridspace import Grid, StateVector, _check_same, dft_isomorphism

HERMITIAN_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class LinearObservable:
    grid: Grid
    matrix: np.ndarray
    hermitian: bool = True
    name: str = ""

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        N = self.grid.size
        if m.shape != (N, N):
            raise ValueError(f"operator must be {N}x{N}, got {m.shape}")
        if self.hermitian:
            scale = np.linalg.norm(m)
            if scale > 0 and np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL * scale:
                raise ValueError(f"operator {self.name!r} is flagged Hermitian but is not")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (ascending) and orthonormal eigenvectors."""
        if not self.hermitian:
            raise ValueError("spectral calculus needs a Hermitian operator")
        try:
            return scipy.linalg.eigh(self.matrix)
        except np.linalg.LinAlgError as exc:
            raise RuntimeError(f"eigendecomposition of {self.name!r} failed") from exc

    def __call__(self, phi: StateVector) -> StateVector:
        _check_same(self.grid, phi.grid)
        return StateVector(self.grid, self.matrix @ phi.values)

    def propagator(self, tau: float) -> np.ndarray:
        """``exp(-i tau A)``."""
        lam, V = self.eig
        return (V * np.exp(-1j * tau * lam)) @ V.conj().T

    def shifted(self, c: float) -> "LinearObservable":
        return LinearObservable(self.grid, self.matrix + c * np.eye(self.grid.size),
                                self.hermitian, self.name)


def _direction(grid: Grid, v) -> np.ndarray:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if v.shape != (grid.dim,):
        raise ValueError(f"direction must have {grid.dim} components")
    return v


def position_observable(grid: Grid, eta=1.0) -> LinearObservable:
    """Multiplication by ``eta . x``."""
    eta = _direction(grid, eta)
    return LinearObservable(grid, np.diag(grid.coords @ eta), True, "x")


def _spectral(grid: Grid, symbol: np.ndarray, name: str) -> LinearObservable:
    if not grid.periodic:
        raise ValueError("spectral derivatives need a periodic grid")
    F = dft_isomorphism(grid)
    m = F.inverse @ (symbol[:, None] * F.forward)
    return LinearObservable(grid, 0.5 * (m + m.conj().T), True, name)


def momentum_observable(grid: Grid, xi=1.0) -> LinearObservable:
    """Spectral ``-i xi . grad``."""
    xi = _direction(grid, xi)
    return _spectral(grid, grid.dual().coords @ xi, "p")


def hamiltonian(grid: Grid, V=None, mass: float = 0.5) -> LinearObservable:
    """``-Laplacian / (2 mass) + V``; the default mass gives ``-Laplacian + V``.

    ``V`` may be None, an array of node values or a callable of the
    coordinates.
    """
    k2 = np.sum(grid.dual().coords ** 2, axis=-1)
    h = _spectral(grid, k2 / (2 * mass), "h")
    if V is None:
        return h
    v = V(grid.coords) if callable(V) else np.asarray(V)
    v = np.asarray(v, dtype=float).ravel()
    return LinearObservable(grid, h.matrix + np.diag(v), True, "h")


def vector_field(A: LinearObservable, phi: StateVector) -> StateVector:
    _check_same(A.grid, phi.grid)
    return StateVector(A.grid, -1j * (A.matrix @ phi.values))


@dataclass(frozen=True, eq=False)
class PathSample:
    tau: np.ndarray
    states: tuple[StateVector, ...]
    generator: LinearObservable | None = None

    def __post_init__(self):
        tau = np.array(self.tau, dtype=float)
        if len(tau) != len(self.states):
            raise ValueError("one state per tau value required")
        if len(self.states) and any(s.grid != self.states[0].grid for s in self.states):
            raise ValueError("all states must share one grid")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "states", tuple(self.states))

    @property
    def grid(self) -> Grid:
        return self.states[0].grid

    @property
    def values(self) -> np.ndarray:
        return np.stack([s.values for s in self.states])

    def norms(self) -> np.ndarray:
        return np.array([s.norm() for s in self.states])

    def expectations(self, A: LinearObservable) -> np.ndarray:
        w = self.grid.weight
        out = []
        for s in self.states:
            num = np.vdot(s.values, A.matrix @ s.values) * w
            out.append((num / (np.vdot(s.values, s.values) * w)).real)
        return np.array(out)

    def summary(self) -> dict:
        d = {"tau": self.tau.tolist(), "norm": self.norms().tolist()}
        if self.generator is not None:
            d["expectation"] = self.expectations(self.generator).tolist()
        return d

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "node", "re", "im"])
            for t, s in zip(self.tau, self.states):
                for i, v in enumerate(s.values):
                    w.writerow([repr(float(t)), i, repr(v.real), repr(v.imag)])


def integral_curve(A: LinearObservable, phi0: StateVector, tau_grid: Sequence[float]) -> PathSample:
    """Samples of ``exp(-i tau A) phi0``."""
    _check_same(A.grid, phi0.grid)
    if not np.any(phi0.values):
        raise ValueError("initial state is zero")
    lam, V = A.eig
    c = V.conj().T @ phi0.values
    tau = np.asarray(tau_grid, dtype=float)
    vals = (np.exp(-1j * np.outer(tau, lam)) * c) @ V.T
    return PathSample(tau, tuple(StateVector(A.grid, v) for v in vals), A)


def lie_bracket(A: LinearObservable, B: LinearObservable) -> LinearObservable:
    """``AB - BA`` (anti-Hermitian for Hermitian inputs)."""
    _check_same(A.grid, B.grid)
    return LinearObservable(A.grid, A.matrix @ B.matrix - B.matrix @ A.matrix, False,
                            f"[{A.name},{B.name}]")


def flow_commutator(A: LinearObservable, B: LinearObservable, phi: StateVector, eps: float) -> StateVector:
    """``(e^{-iB eps} e^{-iA eps} - e^{-iA eps} e^{-iB eps}) phi / eps^2``.

    Tends to ``[A, B] phi`` with an O(eps) error.
    """
    _check_same(A.grid, phi.grid)
    Ua, Ub = A.propagator(eps), B.propagator(eps)
    v = phi.values
    d = Ub @ (Ua @ v) - Ua @ (Ub @ v)
    return StateVector(A.grid, d / eps**2)


def grid_closure_defect(A: LinearObservable, B: LinearObservable, phi0: StateVector,
                        tau: float, lam: float) -> float:
    """How far the ``(tau, lam)`` coordinate grid of two flows fails to close."""
    _check_same(A.grid, B.grid)
    _check_same(A.grid, phi0.grid)
    Ua, Ub = A.propagator(tau), B.propagator(lam)
    v = phi0.values
    d = Ub @ (Ua @ v) - Ua @ (Ub @ v)
    return float(np.sqrt(np.sum(np.abs(d) ** 2) * A.grid.weight))


def drag_functional(f: DualVector, A: LinearObservable, eps: float) -> DualVector:
    """Transport a covector along the flow: ``f_eps(phi) = f(exp(-i eps A) phi)``."""
    _check_same(A.grid, f.grid)
    return DualVector(f.grid, A.propagator(eps).T @ f.values)
