"""Closed-form geometry of the spin sector SU(2) = S^3 and its projection
to the Bloch sphere.

The Lie algebra basis is ``e_k = (i/2) sigma_k`` with ``[e_k, e_l] =
eps_klm e_m``, so brackets of coefficient vectors are cross products.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SIGMA = np.array([
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)
BASIS = 0.5j * SIGMA
KILLING_SCALE = 1.0 / 8.0


@dataclass(frozen=True, eq=False)
class SU2Element:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError("SU(2) elements are 2x2")
        if np.abs(m.conj().T @ m - np.eye(2)).max() > 1e-12 or abs(np.linalg.det(m) - 1) > 1e-12:
            raise ValueError("matrix is not in SU(2)")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_spinor(cls, spinor) -> "SU2Element":
        """Unit spinor ``(a, b)`` as the element with first column ``(a, b)``."""
        a, b = np.asarray(spinor, dtype=complex)
        return cls(np.array([[a, -np.conj(b)], [b, np.conj(a)]]))

    def __matmul__(self, other: "SU2Element") -> "SU2Element":
        return SU2Element(self.matrix @ other.matrix)

    def inv(self) -> "SU2Element":
        return SU2Element(self.matrix.conj().T)


@dataclass(frozen=True)
class Su2Algebra:
    coefficients: tuple[float, float, float]

    def __post_init__(self):
        c = tuple(float(x) for x in self.coefficients)
        if len(c) != 3:
            raise ValueError("su(2) elements have three coefficients")
        object.__setattr__(self, "coefficients", c)

    @property
    def vector(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def matrix(self) -> np.ndarray:
        return np.einsum("k,kij->ij", self.vector, BASIS)

    @classmethod
    def from_matrix(cls, m) -> "Su2Algebra":
        m = np.asarray(m, dtype=complex)
        if abs(np.trace(m)) > 1e-12 or np.abs(m + m.conj().T).max() > 1e-12:
            raise ValueError("matrix is not anti-Hermitian and traceless")
        # Tr(e_k e_m) = -delta_km / 2
        return cls(tuple(-2 * np.trace(BASIS[k] @ m).real for k in range(3)))

    def __add__(self, other: "Su2Algebra") -> "Su2Algebra":
        return Su2Algebra(tuple(self.vector + other.vector))

    def __mul__(self, c: float) -> "Su2Algebra":
        return Su2Algebra(tuple(c * self.vector))

    __rmul__ = __mul__

    def bracket(self, other: "Su2Algebra") -> "Su2Algebra":
        """``[e_k, e_l] = eps_klm e_m``, i.e. the cross product of coefficients.

        The matrix commutator of ``(i/2) sigma_k`` carries the opposite
        sign; metric and curvature are quadratic in the bracket and do not
        see the difference.
        """
        return Su2Algebra(tuple(np.cross(self.vector, other.vector)))


E1, E2, E3 = (Su2Algebra(tuple(row)) for row in np.eye(3))


@dataclass(frozen=True)
class BlochPoint:
    n: tuple[float, float, float]

    def __post_init__(self):
        v = np.asarray(self.n, dtype=float)
        if abs(np.linalg.norm(v) - 1) > 1e-12:
            raise ValueError("Bloch vector must have unit length")
        object.__setattr__(self, "n", tuple(float(x) for x in v))


def _coeffs(A) -> np.ndarray:
    if isinstance(A, Su2Algebra):
        return A.vector
    a = np.asarray(A)
    if a.shape == (2, 2):
        return Su2Algebra.from_matrix(a).vector
    return np.asarray(a, dtype=float).reshape(3)


def adjoint_matrix(A) -> np.ndarray:
    """Matrix of ``ad A`` on coefficient vectors: ``ad A (b) = a x b``."""
    a = _coeffs(A)
    return np.array([
        [0, -a[2], a[1]],
        [a[2], 0, -a[0]],
        [-a[1], a[0], 0],
    ])


def killing_inner(A, B, scale: float = KILLING_SCALE) -> float:
    """``scale * (-Tr(ad A ad B))``."""
    if not scale > 0:
        raise ValueError("scale must be positive")
    return float(-scale * np.trace(adjoint_matrix(A) @ adjoint_matrix(B)))


def exp_algebra(A, tau: float = 1.0) -> SU2Element:
    """``exp(tau A)`` in closed form."""
    a = _coeffs(A) * tau
    theta = np.linalg.norm(a)
    if theta == 0:
        return SU2Element(np.eye(2))
    u = a / theta
    m = np.cos(theta / 2) * np.eye(2) + 1j * np.sin(theta / 2) * np.einsum("k,kij->ij", u, SIGMA)
    return SU2Element(m)


def log_group(g: SU2Element) -> Su2Algebra:
    """Principal logarithm, valid away from ``-identity``."""
    m = g.matrix
    c = np.trace(m).real / 2
    # m = cos(theta/2) I + i sin(theta/2) u.sigma
    s = np.array([np.trace(SIGMA[k] @ m).imag / 2 for k in range(3)])
    sn = np.linalg.norm(s)
    if sn == 0:
        return Su2Algebra((0.0, 0.0, 0.0))
    theta = 2 * np.arctan2(sn, c)
    return Su2Algebra(tuple(theta * s / sn))


def su2_geodesic(phi0, A, tau_grid) -> list[SU2Element]:
    """``phi0 exp(tau A)`` for each ``tau``."""
    g0 = phi0 if isinstance(phi0, SU2Element) else SU2Element(phi0)
    return [g0 @ exp_algebra(A, float(t)) for t in np.asarray(tau_grid, dtype=float)]


def levi_civita_su2(A, B) -> Su2Algebra:
    """``nabla_A B = [A, B] / 2`` for left-invariant fields."""
    return Su2Algebra(tuple(0.5 * np.cross(_coeffs(A), _coeffs(B))))


def sectional_curvature(A, B, scale: float = KILLING_SCALE) -> float:
    """``(1/4) |[A,B]|^2 / (|A|^2 |B|^2 - <A,B>^2)`` in the scaled Killing metric.

    Multiplying the metric by ``c`` divides the result by ``c``; at the
    default scale the value is 1.
    """
    a, b = _coeffs(A), _coeffs(B)
    ab = np.cross(a, b)
    aa, bb, abk = killing_inner(a, a, scale), killing_inner(b, b, scale), killing_inner(a, b, scale)
    den = aa * bb - abk**2
    if den <= 1e-14 * aa * bb or aa == 0 or bb == 0:
        raise ValueError("curvature needs two linearly independent vectors")
    return float(0.25 * killing_inner(ab, ab, scale) / den)


def bloch_projection(phi) -> BlochPoint:
    """``<phi, sigma phi> / <phi, phi>`` for a spinor.

    An ``SU2Element`` is read through its first row, the spinor carried
    along by right multiplication.
    """
    if isinstance(phi, SU2Element):
        v = phi.matrix[0]
    else:
        v = np.asarray(phi, dtype=complex).reshape(2)
    nn = np.vdot(v, v).real
    if nn == 0:
        raise ValueError("zero spinor")
    n = np.array([np.vdot(v, SIGMA[k] @ v).real for k in range(3)]) / nn
    return BlochPoint(tuple(n / np.linalg.norm(n)))


def winding_about_z(points) -> float:
    """Signed number of turns of the azimuth along a sequence of Bloch points."""
    az = np.unwrap([np.arctan2(p.n[1], p.n[0]) for p in points])
    return float((az[-1] - az[0]) / (2 * np.pi))


def pauli_evolve(theta: float, mu_b0: float, t):
    """Spin factor ``(cos(theta/2 - mu_b0 t), sin(theta/2 - mu_b0 t))``.

    It solves ``d phi/dt = i mu_b0 sigma_2 phi``.  Vectorized over ``t``.
    """
    arg = theta / 2 - mu_b0 * np.asarray(t, dtype=float)
    return np.stack([np.cos(arg), np.sin(arg)], axis=-1).astype(complex)


def spin_equation_residual(theta: float, mu_b0: float, t, h: float = 1e-4) -> float:
    """Largest ``|d phi/dt - i mu_b0 sigma_2 phi|`` with a central difference."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    d = (pauli_evolve(theta, mu_b0, t + h) - pauli_evolve(theta, mu_b0, t - h)) / (2 * h)
    rhs = 1j * mu_b0 * pauli_evolve(theta, mu_b0, t) @ SIGMA[1].T
    return float(np.abs(d - rhs).max())


def body_velocity_residual(path: list[SU2Element], h: float) -> float:
    """Geodesic residual of a sampled group path.

    A curve is a geodesic of the bi-invariant metric iff its body velocity
    ``g^-1 g'`` is constant.  The velocity on each step is recovered with
    the group logarithm and the largest change per unit time is returned,
    measured in the scaled Killing norm.
    """
    if len(path) < 3:
        raise ValueError("need at least 3 samples")
    omegas = [log_group(a.inv() @ b).vector / h for a, b in zip(path[:-1], path[1:])]
    worst = 0.0
    for w0, w1 in zip(omegas[:-1], omegas[1:]):
        d = w1 - w0
        worst = max(worst, np.sqrt(killing_inner(d, d)) / h)
    return float(worst)


def spinor_path_residual(spinors, h: float) -> float:
    """``body_velocity_residual`` for a sampled spinor path (rows)."""
    return body_velocity_residual([SU2Element.from_spinor(s) for s in spinors], h)


def product_geodesic_residual(h0, psi0, mu_b0: float, theta: float, tau_grid,
                              metric_operator=None, mode: str = "analytic") -> tuple[float, float]:
    """Residuals of the two factors of the product path ``(psi_t, phi_t)``.

    The spatial factor is the flow of ``h0`` (after the default spectral
    shift) checked against ``K = (h0 h0*)^-1``, or against the metric of
    ``metric_operator`` when one is given.  The spin factor is the Pauli
    spinor path.  The product metric is block diagonal, so the pair is a
    geodesic iff both numbers vanish.
    """
    from .dynamics import integral_curve
    from .riemann import geodesic_residual, metric_from_observable

    tau = np.asarray(tau_grid, dtype=float)
    M = metric_from_observable(h0)
    path = integral_curve(M.generator, psi0, tau)
    if metric_operator is not None:
        M = metric_from_observable(metric_operator)
    r_space = geodesic_residual(M, path, mode)
    h = float(tau[1] - tau[0])
    r_spin = spinor_path_residual(pauli_evolve(theta, mu_b0, tau), h)
    return r_space, r_spin
