"""Delta functions as points of classical space.

With a smooth kernel the map ``a -> delta_a`` is an embedding of R^d into
the state space, and the kernel metric pulls back to a Riemannian metric
``g(a) = d^2 k / dx dy`` on the diagonal.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.signal import fftconvolve

from .gridspace import Grid, KernelOperator, StateVector, gaussian_kernel


@dataclass(frozen=True)
class GaussianKernelFunction:
    """``k(x, y) = exp(-alpha |x - y|^2)``.  ``alpha = c^2 / 2`` gives the
    metric ``c^2 I``."""

    alpha: float = 0.5

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @classmethod
    def scaled(cls, c: float) -> "GaussianKernelFunction":
        return cls(0.5 * c * c)

    @property
    def width(self) -> float:
        return 1.0 / np.sqrt(2 * self.alpha)

    def __call__(self, x, y) -> float:
        d = np.atleast_1d(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))
        return float(np.exp(-self.alpha * np.dot(d, d)))

    def mixed_hessian(self, a) -> np.ndarray:
        d = np.atleast_1d(np.asarray(a, dtype=float)).size
        return 2 * self.alpha * np.eye(d)


def induced_metric(kernel_fn, a, mode: str = "analytic", h: float | None = None) -> np.ndarray:
    """``g_{mu nu}(a) = d^2 k / dx^mu dy^nu`` at ``x = y = a``.

    Parameters
    ----------
    kernel_fn : callable
        ``k(x, y)``; for ``mode="analytic"`` it must provide
        ``mixed_hessian(a)``.
    a : array_like
        Base point.
    mode : {"analytic", "fd"}
    h : float, optional
        Finite-difference step, by default ``1e-3`` times the kernel width
        (or ``1e-3`` when the kernel has no width).

    Returns
    -------
    ndarray
        Symmetrized ``d x d`` matrix.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    d = a.size
    if mode == "analytic":
        g = np.asarray(kernel_fn.mixed_hessian(a), dtype=float)
    elif mode == "fd":
        if h is None:
            h = 1e-3 * getattr(kernel_fn, "width", 1.0)
        if not h > 0 or np.any(a + h == a):
            raise ValueError(f"finite-difference step {h} underflows at {a.tolist()}")
        E = np.eye(d) * h
        g = np.empty((d, d))
        for m in range(d):
            for n in range(d):
                g[m, n] = (kernel_fn(a + E[m], a + E[n]) - kernel_fn(a + E[m], a - E[n])
                           - kernel_fn(a - E[m], a + E[n]) + kernel_fn(a - E[m], a - E[n])) / (4 * h * h)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if np.abs(g - g.T).max() > 1e-6 * max(1.0, np.abs(g).max()):
        raise ValueError("induced metric is not symmetric")
    return 0.5 * (g + g.T)


@dataclass(frozen=True, eq=False)
class DeltaManifold:
    """Deltas on a grid together with the analytic kernel they live in."""

    grid: Grid
    kernel_fn: GaussianKernelFunction

    @property
    def dim(self) -> int:
        return self.grid.dim

    @cached_property
    def kernel(self) -> KernelOperator:
        return gaussian_kernel(self.grid, self.kernel_fn.alpha)

    def contains(self, a) -> bool:
        a = np.atleast_1d(np.asarray(a, dtype=float))
        if self.grid.periodic:
            return True
        lo = np.asarray(self.grid.origin)
        return bool(np.all(a >= lo) and np.all(a <= lo + self.grid.extent))

    def metric_at(self, a, mode: str = "analytic") -> np.ndarray:
        if not self.contains(a):
            raise ValueError(f"point {np.atleast_1d(a).tolist()} lies outside the grid")
        return induced_metric(self.kernel_fn, a, mode)


def _derivative(f: Callable, t: float, h: float) -> np.ndarray:
    return (8 * (f(t + h) - f(t - h)) - (f(t + 2 * h) - f(t - 2 * h))) / (12 * h)


def path_speed_invariance(K, a_of_t: Callable, tau_samples: Sequence[float],
                          h: float = 1e-3) -> list[tuple[float, float]]:
    """Speed of the delta path ``tau -> delta_{a(tau)}`` computed two ways.

    ``lhs`` is the kernel norm of the velocity: the norm of the secant
    ``(delta_{a(t+h)} - delta_{a(t-h)}) / 2h`` evaluated from kernel values
    alone, Richardson-extrapolated over ``h`` and ``2h``.  ``rhs`` is
    ``sqrt(a' g(a) a')`` with the analytic induced metric.

    ``K`` is a kernel function or a ``DeltaManifold``; with the latter the
    path must stay on the grid.
    """
    manifold = K if isinstance(K, DeltaManifold) else None
    kfn = manifold.kernel_fn if manifold else K

    def a(t):
        return np.atleast_1d(np.asarray(a_of_t(t), dtype=float))

    def secant_sq(t, s):
        p, m = a(t + s), a(t - s)
        num = kfn(p, p) + kfn(m, m) - 2 * kfn(p, m)
        return max(num, 0.0) / (4 * s * s)

    out = []
    for t in np.asarray(tau_samples, dtype=float):
        if manifold is not None and not manifold.contains(a(t)):
            raise ValueError(f"path leaves the grid at tau={t}")
        lhs = (4 * np.sqrt(secant_sq(t, h)) - np.sqrt(secant_sq(t, 2 * h))) / 3
        v = _derivative(a, t, h)
        g = induced_metric(kfn, a(t), "analytic")
        rhs = float(np.sqrt(v @ g @ v))
        out.append((float(lhs), rhs))
    return out


@dataclass(frozen=True)
class PointIsometry:
    """``x -> R x + shift * spacing`` with integer orthogonal ``R`` and an
    integer node shift."""

    matrix: tuple[tuple[int, ...], ...]
    shift: tuple[int, ...]

    def __post_init__(self):
        R = np.asarray(self.matrix)
        t = np.asarray(self.shift)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or t.shape != (R.shape[0],):
            raise ValueError("matrix must be square with one shift per axis")
        if not np.array_equal(R, np.round(R)) or not np.array_equal(R.T @ R, np.eye(len(R))):
            raise ValueError("matrix must be an integer orthogonal matrix")
        object.__setattr__(self, "matrix", tuple(tuple(int(x) for x in row) for row in R))
        object.__setattr__(self, "shift", tuple(int(x) for x in t))

    @classmethod
    def identity(cls, dim: int) -> "PointIsometry":
        return cls(tuple(map(tuple, np.eye(dim, dtype=int))), (0,) * dim)

    @classmethod
    def rotation90(cls, axes: tuple[int, int] = (0, 1), dim: int = 2) -> "PointIsometry":
        R = np.eye(dim, dtype=int)
        i, j = axes
        R[i, i] = R[j, j] = 0
        R[i, j], R[j, i] = -1, 1
        return cls(tuple(map(tuple, R)), (0,) * dim)

    @classmethod
    def translation(cls, shift: Sequence[int]) -> "PointIsometry":
        d = len(shift)
        return cls(tuple(map(tuple, np.eye(d, dtype=int))), tuple(shift))

    def compose(self, other: "PointIsometry") -> "PointIsometry":
        """``self`` after ``other``."""
        R1, R2 = np.asarray(self.matrix), np.asarray(other.matrix)
        t = R1 @ np.asarray(other.shift) + np.asarray(self.shift)
        return PointIsometry(tuple(map(tuple, R1 @ R2)), tuple(t))

    def node_permutation(self, grid: Grid) -> np.ndarray:
        """``perm[i]`` is the index of the image of node ``i``."""
        R = np.asarray(self.matrix)
        if R.shape[0] != grid.dim:
            raise ValueError("isometry and grid dimensions differ")
        off = np.asarray(grid.origin) / grid.spacing
        if not np.allclose(off, np.round(off), atol=1e-9):
            raise ValueError("grid nodes are not aligned with the origin")
        off = np.round(off).astype(int)
        idx = np.stack(np.unravel_index(np.arange(grid.size), grid.shape), axis=-1)
        m = idx + off
        img = m @ R.T + np.asarray(self.shift) - off
        if grid.periodic:
            img = np.mod(img, grid.n)
        elif np.any(img < 0) or np.any(img >= grid.n):
            raise ValueError("isometry does not map the node set onto itself")
        return np.ravel_multi_index(tuple(img.T), grid.shape)


def isometry_pushforward(P: PointIsometry, phi: StateVector) -> StateVector:
    """``(P phi)(P x) = phi(x)``: moves node values along the isometry."""
    perm = P.node_permutation(phi.grid)
    out = np.empty_like(phi.values)
    out[perm] = phi.values
    return StateVector(phi.grid, out)


def delta_convergence_ratio(psi, L: float, spacing: float | None = None,
                            extent: float = 20.0) -> float:
    """``int int k_L(x - y) psi(x) conj(psi(y)) / ||psi||^2`` for the
    normalized Gaussian ``k_L(u) = L / sqrt(2 pi) exp(-L^2 u^2 / 2)``.

    Equivalently ``||phi||_K^2 / (L sqrt(2 pi) ||psi||^2)`` where ``phi``
    is ``psi`` stretched by ``L`` and ``K`` has kernel ``exp(-(x-y)^2/2)``.
    Tends to 1 as ``L`` grows.

    ``psi`` is a 1-D ``StateVector`` or a callable profile; a callable is
    sampled on ``[-extent/2, extent/2]`` with a spacing resolving the
    kernel.
    """
    if L < 1:
        raise ValueError(f"L must be at least 1, got {L}")
    if isinstance(psi, StateVector):
        if psi.grid.dim != 1:
            raise ValueError("delta convergence is implemented in one dimension")
        dx = psi.grid.spacing
        v = psi.values
    else:
        dx = spacing if spacing is not None else min(0.02, 0.1 / L)
        n = int(np.ceil(extent / dx)) + 1
        x = (np.arange(n) - (n - 1) / 2) * dx
        v = np.asarray(psi(x), dtype=complex)
    if dx * L > 0.25:
        raise ValueError("grid spacing does not resolve the kernel width 1/L")
    half = int(np.ceil(10.0 / (L * dx)))
    u = np.arange(-half, half + 1) * dx
    k = L / np.sqrt(2 * np.pi) * np.exp(-0.5 * (L * u) ** 2)
    conv = fftconvolve(v, k, mode="same") * dx
    num = np.vdot(v, conv).real * dx
    return float(num / (np.vdot(v, v).real * dx))
