"""Projective Riemannian metric on the punctured state space.

At a base point ``phi`` the metric is ``G(xi, eta) = 2 Re <K xi, eta> /
||phi||^2`` where ``K`` is a positive operator and all brackets are L2
products.  For ``K = (A A*)^-1`` the orbits ``exp(-i tau A) phi0`` are
geodesics; this module provides the connection in closed form, an
independent finite-difference version of it, and residual measures for
sampled paths.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.linalg

from .dynamics import LinearObservable, PathSample
from .gridspace import Grid, KernelOperator, StateVector, _check_same


@dataclass(frozen=True, eq=False)
class ProjectiveMetric:
    """Metric operator ``K`` with its eigendecomposition.

    ``generator`` is set when the metric was built from an observable; it
    is the (possibly shifted) operator whose flow the metric makes
    geodesic.
    """

    kernel: KernelOperator
    eigvals: np.ndarray
    eigvecs: np.ndarray
    generator: LinearObservable | None = None
    shift: float = 0.0

    @property
    def grid(self) -> Grid:
        return self.kernel.grid

    @cached_property
    def operator(self) -> np.ndarray:
        return self.kernel.operator

    @cached_property
    def inverse_operator(self) -> np.ndarray:
        V = self.eigvecs
        return (V / self.eigvals) @ V.conj().T

    @property
    def condition_number(self) -> float:
        return float(self.eigvals[-1] / self.eigvals[0])


@dataclass(frozen=True)
class TangentVector:
    base: StateVector
    value: np.ndarray

    def __post_init__(self):
        if not np.any(self.base.values):
            raise ValueError("base point must be nonzero")


def metric_from_kernel(K: KernelOperator) -> ProjectiveMetric:
    lam, V = scipy.linalg.eigh(K.operator)
    return ProjectiveMetric(K, lam, V)


def _shift_for(lam: np.ndarray, floor: float) -> float:
    """Smallest ``|c|`` with ``min |lam + c| >= floor``."""
    if np.min(np.abs(lam)) >= floor:
        return 0.0
    candidates = np.concatenate([floor - lam, -floor - lam])
    candidates = candidates[np.argsort(np.abs(candidates) - 1e-15 * np.sign(candidates), kind="stable")]
    for c in candidates:
        if np.min(np.abs(lam + c)) >= floor * (1 - 1e-12):
            return float(c)
    raise RuntimeError("no admissible spectral shift")


def metric_from_observable(A: LinearObservable, regularization: float = 0.5,
                           policy: str = "shift") -> ProjectiveMetric:
    """``K = (A A*)^-1`` built from the eigendecomposition of ``A``.

    Parameters
    ----------
    A : LinearObservable
        Hermitian generator.
    regularization : float
        Floor for ``|eigenvalue|``.
    policy : {"shift", "reject"}
        With "shift" a multiple of the identity is added to ``A`` so that
        the smallest ``|eigenvalue|`` equals the floor; the stored
        generator is the shifted operator.  With "reject" a spectrum
        below the floor raises ``ValueError``.
    """
    if not A.hermitian:
        raise ValueError("metric_from_observable needs a Hermitian operator")
    if policy not in ("shift", "reject"):
        raise ValueError(f"unknown policy {policy!r}")
    lam, V = A.eig
    c = _shift_for(lam, regularization)
    if c != 0.0:
        if policy == "reject":
            raise ValueError(
                f"operator is too close to singular: min |eig| = {np.min(np.abs(lam)):.3e}")
        A = A.shifted(c)
        lam = lam + c
    mu = 1.0 / lam**2
    order = np.argsort(mu)
    mu, V = mu[order], V[:, order]
    op = (V * mu) @ V.conj().T
    op = 0.5 * (op + op.conj().T)
    grid = A.grid
    K = KernelOperator(grid, op / grid.weight, "general")
    return ProjectiveMetric(K, mu, V, A, c)


def _vals(v) -> np.ndarray:
    return v.values if isinstance(v, StateVector) else np.asarray(v, dtype=complex)


def _l2(M: ProjectiveMetric, u: np.ndarray, v: np.ndarray) -> complex:
    return complex(np.vdot(u, v) * M.grid.weight)


def _base_norm2(M: ProjectiveMetric, phi: np.ndarray) -> float:
    n2 = _l2(M, phi, phi).real
    if n2 == 0:
        raise ValueError("base point must be nonzero")
    return n2


def metric_eval(M: ProjectiveMetric, phi, xi, eta) -> float:
    """``2 Re <K xi, eta> / ||phi||^2``."""
    p, x, e = _vals(phi), _vals(xi), _vals(eta)
    return 2.0 * _l2(M, M.operator @ x, e).real / _base_norm2(M, p)


def christoffel_terms(M: ProjectiveMetric, phi, xi) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three groups of connection coefficients contracted with
    ``V = (xi, conj(xi))``.

    The first group has two equal contributions ``-xi <phi, xi>``; the
    second and third are mirror images of each other (holomorphic index
    first or second), each ``-[xi <xi, phi> - K(xi, xi) K^-1 phi] / 2``.
    All carry the factor ``1 / ||phi||^2``.
    """
    p, x = _vals(phi), _vals(xi)
    n2 = _base_norm2(M, p)
    phi_xi = _l2(M, p, x)
    xi_phi = np.conj(phi_xi)
    kxx = _l2(M, x, M.operator @ x).real
    Kinv_phi = M.inverse_operator @ p
    t1 = -(x * phi_xi + x * phi_xi) / (2 * n2)
    t2 = -(x * xi_phi - kxx * Kinv_phi) / (2 * n2)
    t3 = -(xi_phi * x - kxx * Kinv_phi) / (2 * n2)
    return t1, t2, t3


def christoffel_contract(M: ProjectiveMetric, phi, xi) -> np.ndarray:
    """Holomorphic part of ``Gamma(V, V)`` for ``V = (xi, conj(xi))``.

    Sums to ``[-2 Re<phi, xi> xi + K(xi, xi) K^-1 phi] / ||phi||^2``.
    """
    t1, t2, t3 = christoffel_terms(M, phi, xi)
    return t1 + t2 + t3


def christoffel_fd(M: ProjectiveMetric, phi, xi, h: float = 1e-4) -> np.ndarray:
    """``Gamma(V, V)`` from the Koszul formula with numerical derivatives.

    Solves ``2 G(Gamma, Z) = 2 dG_V(V, Z) - dG_Z(V, V)`` for every real
    direction ``Z`` in ``{e_j, i e_j}``, differentiating ``metric_eval``
    in the base point by fourth-order central differences.  Dense and
    quadratic in the dimension, meant for small grids only.
    """
    p, v = _vals(phi), _vals(xi)
    N = p.size
    basis = np.concatenate([np.eye(N), 1j * np.eye(N)]).astype(complex)

    def d_metric(direction, a, b):
        def g(s):
            return metric_eval(M, p + s * direction, a, b)
        return (8 * (g(h) - g(-h)) - (g(2 * h) - g(-2 * h))) / (12 * h)

    rhs = np.empty(2 * N)
    gram = np.empty((2 * N, 2 * N))
    for j, z in enumerate(basis):
        rhs[j] = 2 * d_metric(v, v, z) - d_metric(z, v, v)
        for k, y in enumerate(basis):
            gram[j, k] = metric_eval(M, p, z, y)
    coef = np.linalg.solve(gram, rhs / 2)
    return coef[:N] + 1j * coef[N:]


def _uniform_step(tau: np.ndarray) -> float:
    if len(tau) < 3:
        raise ValueError("need at least 3 samples")
    steps = np.diff(tau)
    h = steps.mean()
    if not np.allclose(steps, h, rtol=1e-9, atol=0):
        raise ValueError("tau samples must be uniformly spaced")
    return float(h)


def geodesic_residual_profile(M: ProjectiveMetric, path: PathSample, mode: str = "analytic") -> list[dict]:
    """Per-sample rows ``{tau, residual, norm_drift}`` over interior samples.

    ``analytic`` takes ``phi' = -i A phi`` and ``phi'' = -A^2 phi`` from the
    path generator and normalizes by ``||A^2 phi||``; ``finite-difference``
    uses second-order central differences and normalizes by ``||phi''||``.
    """
    if mode not in ("analytic", "finite-difference"):
        raise ValueError(f"unknown mode {mode!r}")
    _check_same(M.grid, path.grid)
    h = _uniform_step(path.tau)
    vals = path.values
    w = M.grid.weight
    n0 = np.sqrt(np.sum(np.abs(vals[0]) ** 2) * w)
    if mode == "analytic":
        if path.generator is None:
            raise ValueError("analytic mode needs the path generator")
        A = path.generator.matrix
    rows = []
    for k in range(1, len(vals) - 1):
        phi = vals[k]
        if mode == "analytic":
            d1 = -1j * (A @ phi)
            d2 = -(A @ (A @ phi))
        else:
            d1 = (vals[k + 1] - vals[k - 1]) / (2 * h)
            d2 = (vals[k + 1] - 2 * phi + vals[k - 1]) / h**2
        r = d2 + christoffel_contract(M, phi, d1)
        scale = np.sqrt(np.sum(np.abs(d2) ** 2) * w)
        res = np.sqrt(np.sum(np.abs(r) ** 2) * w) / scale if scale > 0 else 0.0
        drift = abs(np.sqrt(np.sum(np.abs(phi) ** 2) * w) - n0)
        rows.append({"tau": float(path.tau[k]), "residual": float(res), "norm_drift": float(drift)})
    return rows


def geodesic_residual(M: ProjectiveMetric, path: PathSample, mode: str = "analytic") -> float:
    """Largest normalized ``||phi'' + Gamma(phi', phi')||`` along the path."""
    return max(r["residual"] for r in geodesic_residual_profile(M, path, mode))


def fubini_study_angle(phi: StateVector, psi: StateVector, kernel: KernelOperator | None = None) -> float:
    """``arccos(|<phi, psi>| / (||phi|| ||psi||))`` in ``[0, pi/2]``.

    The product is L2 unless ``kernel`` is given.
    """
    _check_same(phi.grid, psi.grid)
    if kernel is None:
        W = np.eye(phi.grid.size) * phi.grid.weight
    else:
        _check_same(kernel.grid, phi.grid)
        W = kernel.matrix * phi.grid.weight**2
    a, b = phi.values, psi.values
    pp = np.vdot(a, W @ a).real
    qq = np.vdot(b, W @ b).real
    if pp == 0 or qq == 0:
        raise ValueError("zero vector has no direction")
    c = abs(np.vdot(a, W @ b)) / np.sqrt(pp * qq)
    return float(np.arccos(min(c, 1.0)))
