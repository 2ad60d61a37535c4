"""Grids, grid functions, kernel metrics and functional coordinate changes.

Everything here is a finite stand-in for a Hilbert space of functions on
R^d.  A state is a vector of node values, integrals are Riemann sums with
weight ``spacing**dim`` and a delta function is a single spike of height
``1 / spacing**dim``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

KERNEL_KINDS = ("L2-diagonal", "smooth-kernel", "weighted-diagonal", "general")

# relative floor for the smallest Gram eigenvalue
DEFINITENESS_FLOOR = 1e-10
HERMITIAN_TOL = 1e-12
ROUNDTRIP_TOL = 1e-12


class GridMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform lattice ``origin + i * spacing`` on each axis.

    Nodes are enumerated in C order over the axes, so in two dimensions
    the second coordinate varies fastest.
    """

    dim: int
    points_per_axis: int
    spacing: float
    origin: tuple[float, ...]
    periodic: bool

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if self.points_per_axis < 1:
            raise ValueError("points_per_axis must be positive")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if len(self.origin) != self.dim:
            raise ValueError("origin must have one entry per axis")

    @property
    def n(self) -> int:
        return self.points_per_axis

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dim

    @property
    def weight(self) -> float:
        return self.spacing**self.dim

    @property
    def extent(self) -> float:
        if self.periodic:
            return self.n * self.spacing
        return (self.n - 1) * self.spacing

    def axis(self, k: int = 0) -> np.ndarray:
        return self.origin[k] + self.spacing * np.arange(self.n)

    @property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(size, dim)``."""
        axes = [self.axis(k) for k in range(self.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    def index_of(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def displacement(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """``x - y`` using the minimum image on periodic grids."""
        d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.periodic:
            L = self.n * self.spacing
            d = d - L * np.round(d / L)
        return d

    def dual(self, scale: float = 1.0) -> "Grid":
        """Grid of DFT frequencies ``k_m = (m - n//2) * 2pi/(n*spacing)``,
        divided by ``scale``."""
        if not self.periodic:
            raise ValueError("frequency grid needs a periodic grid")
        dk = 2 * np.pi / (self.n * self.spacing) / scale
        return Grid(self.dim, self.n, dk, (-(self.n // 2) * dk,) * self.dim, True)

    def to_dict(self) -> dict:
        return {
            "dim": self.dim,
            "n": self.n,
            "spacing": self.spacing,
            "origin": list(self.origin),
            "periodic": self.periodic,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Grid":
        return cls(int(d["dim"]), int(d["n"]), float(d["spacing"]),
                   tuple(float(o) for o in d["origin"]), bool(d["periodic"]))


def make_grid(dim: int, points_per_axis: int, extent: float, periodic: bool = True) -> Grid:
    """Uniform grid centred on the origin.

    Parameters
    ----------
    dim : int
        Number of axes (1, 2 or 3).
    points_per_axis : int
        Nodes per axis, at least 4.
    extent : float
        Period length for periodic grids, distance between the end nodes
        for open grids.
    periodic : bool
        Wrap-around boundary.

    Returns
    -------
    Grid
    """
    if points_per_axis < 4:
        raise ValueError(f"need at least 4 points per axis, got {points_per_axis}")
    if not extent > 0:
        raise ValueError(f"extent must be positive, got {extent}")
    if periodic:
        spacing = extent / points_per_axis
    else:
        spacing = extent / (points_per_axis - 1)
    return Grid(dim, points_per_axis, spacing, (-extent / 2,) * dim, periodic)


def _check_same(g1: Grid, g2: Grid) -> None:
    if g1 != g2:
        raise GridMismatchError("objects live on different grids")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex grid function.  ``metadata`` carries bookkeeping such as the
    snap distance of an off-node delta."""

    grid: Grid
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex).ravel()
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} values, got {v.size}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _wrap(self, values) -> "StateVector":
        return StateVector(self.grid, values)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_same(self.grid, other.grid)
        return self._wrap(self.values + other.values)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_same(self.grid, other.grid)
        return self._wrap(self.values - other.values)

    def __mul__(self, c: complex) -> "StateVector":
        return self._wrap(c * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "StateVector":
        return self._wrap(-self.values)

    def norm(self) -> float:
        return float(np.sqrt(l2_inner(self, self).real))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return self._wrap(self.values / nrm)

    def to_dict(self) -> dict:
        d = self.grid.to_dict()
        d["values"] = np.column_stack([self.values.real, self.values.imag]).ravel().tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "StateVector":
        grid = Grid.from_dict(d)
        v = np.asarray(d["values"], dtype=float).reshape(-1, 2)
        return cls(grid, v[:, 0] + 1j * v[:, 1])


def state_from_function(grid: Grid, f: Callable[[np.ndarray], np.ndarray]) -> StateVector:
    """Sample ``f`` at the nodes; ``f`` receives an array of shape (size, dim)."""
    return StateVector(grid, f(grid.coords))


def save_state(state: StateVector, path) -> None:
    with open(path, "w") as fh:
        json.dump(state.to_dict(), fh)


def load_state(path) -> StateVector:
    with open(path) as fh:
        return StateVector.from_dict(json.load(fh))


def l2_inner(phi: StateVector, psi: StateVector) -> complex:
    """Riemann-sum L2 product, antilinear in the first slot."""
    _check_same(phi.grid, psi.grid)
    return complex(np.vdot(phi.values, psi.values) * phi.grid.weight)


@dataclass(frozen=True, eq=False)
class KernelOperator:
    """Hermitian kernel matrix ``K_ij = k(x_i, x_j)``.

    The inner product is ``sum conj(phi_i) K_ij psi_j * w**2`` with
    ``w = spacing**dim``.  With ``strict`` the smallest eigenvalue must
    exceed ``DEFINITENESS_FLOOR`` times the largest; without it only
    semi-definiteness up to roundoff is required, which is what analytic
    kernels decaying below double precision can offer.
    """

    grid: Grid
    matrix: np.ndarray
    kind: str = "general"
    strict: bool = True

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        N = self.grid.size
        if m.shape != (N, N):
            raise ValueError(f"kernel must be {N}x{N}, got {m.shape}")
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        scale = np.linalg.norm(m)
        if scale == 0:
            raise ValueError("zero kernel")
        if np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL * scale:
            raise ValueError("kernel matrix is not Hermitian")
        m = 0.5 * (m + m.conj().T)
        ev = np.linalg.eigvalsh(m)
        floor = DEFINITENESS_FLOOR if self.strict else -1e-12
        if ev[0] <= floor * ev[-1]:
            raise ValueError(
                f"kernel is not positive definite: min eig {ev[0]:.3e}, max eig {ev[-1]:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def operator(self) -> np.ndarray:
        """Matrix of the kernel as an operator on node values, so that
        ``kernel_inner(K, phi, psi) == l2_inner(phi, K.operator @ psi)``."""
        return self.matrix * self.grid.weight

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "re", "im"])
            for i, row in enumerate(self.matrix):
                for j, v in enumerate(row):
                    w.writerow([i, j, repr(v.real), repr(v.imag)])


def kernel_inner(K: KernelOperator, phi: StateVector, psi: StateVector) -> complex:
    _check_same(K.grid, phi.grid)
    _check_same(K.grid, psi.grid)
    return complex(np.vdot(phi.values, K.matrix @ psi.values) * K.grid.weight**2)


def l2_kernel(grid: Grid) -> KernelOperator:
    """Diagonal kernel reproducing the L2 product (delta kernel ``I / w``)."""
    return KernelOperator(grid, np.eye(grid.size) / grid.weight, "L2-diagonal")


def gaussian_kernel(grid: Grid, alpha: float, strict: bool = True) -> KernelOperator:
    """``exp(-alpha |x - y|^2)``, minimum image on periodic grids."""
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    x = grid.coords
    d = grid.displacement(x[:, None, :], x[None, :, :])
    return KernelOperator(grid, np.exp(-alpha * np.sum(d**2, axis=-1)), "smooth-kernel", strict)


def weighted_diagonal_kernel(grid: Grid, weight, strict: bool = True) -> KernelOperator:
    """Kernel ``weight(x) delta(x - y)``, discretised as ``diag(weight) / w``.

    ``weight`` is either an array of node values or a callable of the
    coordinates (shape (size, dim)).
    """
    wv = weight(grid.coords) if callable(weight) else np.asarray(weight)
    wv = np.asarray(wv, dtype=float).ravel()
    return KernelOperator(grid, np.diag(wv) / grid.weight, "weighted-diagonal", strict)


def _nearest_index(grid: Grid, a) -> tuple[int, float]:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (grid.dim,):
        raise ValueError(f"point must have {grid.dim} coordinates")
    origin = np.asarray(grid.origin)
    idx = np.round((a - origin) / grid.spacing).astype(int)
    if grid.periodic:
        idx = np.mod(idx, grid.n)
    else:
        tol = 1e-9 * grid.spacing
        lo, hi = origin - tol, origin + (grid.n - 1) * grid.spacing + tol
        if np.any(a < lo) or np.any(a > hi):
            raise ValueError(f"point {a.tolist()} lies outside the grid")
    node = origin + idx * grid.spacing
    snap = float(np.linalg.norm(grid.displacement(a, node)))
    return grid.index_of(idx), snap


def delta_state(grid: Grid, a) -> StateVector:
    """Spike of height ``1 / spacing**dim`` at the node nearest ``a``."""
    i, snap = _nearest_index(grid, a)
    v = np.zeros(grid.size, dtype=complex)
    v[i] = 1.0 / grid.weight
    return StateVector(grid, v, {"center": np.atleast_1d(a).tolist(), "snap_distance": snap})


def delta_derivative_norm(alpha: float, order: int) -> float:
    """Norm of the ``order``-th derivative of a delta function under the
    kernel ``exp(-alpha (x - y)^2)`` in one dimension.

    The squared norm is the mixed derivative ``d^m/dx^m d^m/dy^m k`` on the
    diagonal, which for the Gaussian equals ``(2m)!/m! * alpha**m``.
    """
    from math import factorial

    if order < 0:
        raise ValueError("order must be nonnegative")
    return float(np.sqrt(factorial(2 * order) / factorial(order) * alpha**order))


@dataclass(frozen=True, eq=False)
class Isomorphism:
    """Invertible linear map from functions on ``grid_in`` to functions on
    ``grid_out``."""

    grid_in: Grid
    grid_out: Grid
    forward: np.ndarray
    inverse: np.ndarray

    def __post_init__(self):
        F = np.array(self.forward, dtype=complex)
        G = np.array(self.inverse, dtype=complex)
        shape = (self.grid_out.size, self.grid_in.size)
        if F.shape != shape or G.shape != shape[::-1]:
            raise ValueError("isomorphism matrices do not match the grids")
        eye = np.eye(shape[0])
        err = np.linalg.norm(F @ G - eye) / np.linalg.norm(eye)
        if err > ROUNDTRIP_TOL:
            raise ValueError(f"forward and inverse disagree (relative error {err:.2e})")
        F.setflags(write=False)
        G.setflags(write=False)
        object.__setattr__(self, "forward", F)
        object.__setattr__(self, "inverse", G)

    def __call__(self, phi: StateVector) -> StateVector:
        _check_same(self.grid_in, phi.grid)
        return StateVector(self.grid_out, self.forward @ phi.values)

    def apply_inverse(self, phi: StateVector) -> StateVector:
        _check_same(self.grid_out, phi.grid)
        return StateVector(self.grid_in, self.inverse @ phi.values)

    def inv(self) -> "Isomorphism":
        return Isomorphism(self.grid_out, self.grid_in, self.inverse, self.forward)

    def compose(self, other: "Isomorphism") -> "Isomorphism":
        """``self`` after ``other``."""
        _check_same(other.grid_out, self.grid_in)
        return Isomorphism(other.grid_in, self.grid_out,
                           self.forward @ other.forward, other.inverse @ self.inverse)


def identity_isomorphism(grid: Grid) -> Isomorphism:
    eye = np.eye(grid.size)
    return Isomorphism(grid, grid, eye, eye)


def _dft_axis(grid: Grid, out: Grid) -> np.ndarray:
    x = grid.axis(0)
    k = out.axis(0) * 1.0
    return np.exp(-1j * np.outer(k, x))


def dft_isomorphism(grid: Grid, scale: float = 1.0) -> Isomorphism:
    """Discrete Fourier transform onto the frequency grid.

    ``forward[k, x] = spacing * exp(-i k x)`` per axis, so a grid plane
    wave ``exp(i p x)`` becomes a spike of height ``n * spacing`` at
    ``k = p``.  ``scale`` multiplies the forward matrix (and divides the
    inverse); the frequency grid itself is unchanged.
    """
    if not grid.periodic:
        raise ValueError("the DFT isomorphism needs a periodic grid")
    out = grid.dual()
    E = _dft_axis(grid, out)
    F1 = grid.spacing * E
    G1 = E.conj().T / (grid.n * grid.spacing)
    F, G = F1, G1
    for _ in range(grid.dim - 1):
        F, G = np.kron(F, F1), np.kron(G, G1)
    return Isomorphism(grid, out, scale * F, G / scale)


def pushforward_metric(K: KernelOperator, omega: Isomorphism, strict: bool | None = None) -> KernelOperator:
    """Kernel on ``omega.grid_in`` expressing the metric ``K`` on
    ``omega.grid_out`` in the new coordinates.

    It is defined by ``kernel_inner(result, phi, psi) ==
    kernel_inner(K, omega(phi), omega(psi))``, i.e. ``W* K W`` with the
    quadrature weights of both grids accounted for.
    """
    _check_same(K.grid, omega.grid_out)
    W = omega.forward
    ratio = (omega.grid_out.weight / omega.grid_in.weight) ** 2
    m = ratio * (W.conj().T @ K.matrix @ W)
    return KernelOperator(omega.grid_in, m, "general", K.strict if strict is None else strict)


def pushforward_operator(A, omega: Isomorphism):
    """``omega^-1 A omega``: the operator ``A`` on ``omega.grid_out``
    expressed on ``omega.grid_in``.  Returns the same type as ``A``."""
    from dataclasses import replace

    _check_same(A.grid, omega.grid_out)
    m = omega.inverse @ A.matrix @ omega.forward
    if not getattr(A, "hermitian", False):
        return replace(A, grid=omega.grid_in, matrix=m)
    # a non-unitary omega can destroy Hermiticity
    skew = np.linalg.norm(m - m.conj().T)
    if skew <= 1e-9 * max(np.linalg.norm(m), 1e-300):
        return replace(A, grid=omega.grid_in, matrix=0.5 * (m + m.conj().T))
    return replace(A, grid=omega.grid_in, matrix=m, hermitian=False)
