"""Property suite run by the ``invariants`` command.

Every check draws its randomness from one seeded generator, so a run is a
pure function of ``(seed, tolerances)``.
"""
from __future__ import annotations

import numpy as np

from . import su2
from .dynamics import (
    drag_functional,
    flow_commutator,
    integral_curve,
    lie_bracket,
    momentum_observable,
    position_observable,
)
from .eigen import DualVector, generalized_eigenpairs, transform_eigenproblem
from .embedding import GaussianKernelFunction, PointIsometry, delta_convergence_ratio, induced_metric, isometry_pushforward
from .experiments import (
    ScenarioReport,
    closure_table,
    gaussian_packet,
    merged_tolerances,
    random_hermitian,
    random_state,
    superposition_norm_error,
)
from .gridspace import (
    Isomorphism,
    KernelOperator,
    StateVector,
    delta_state,
    gaussian_kernel,
    kernel_inner,
    make_grid,
    pushforward_metric,
)
from .riemann import (
    christoffel_contract,
    christoffel_fd,
    geodesic_residual,
    metric_eval,
    metric_from_kernel,
    metric_from_observable,
)


def _rand_complex(rng, n):
    return rng.normal(size=n) + 1j * rng.normal(size=n)


def _random_pd_kernel(grid, rng) -> KernelOperator:
    N = grid.size
    Z = _rand_complex(rng, (N, N))
    m = Z @ Z.conj().T + N * np.eye(N)
    return KernelOperator(grid, m, "general")


def run_invariants(seed: int = 0, tolerances: dict | None = None) -> ScenarioReport:
    tol = merged_tolerances(tolerances)
    rng = np.random.default_rng(seed)
    rep = ScenarioReport("invariants", {"seed": seed})
    rows = []

    def record(module, name, value, kind="max", key=None):
        key = key or f"invariants.{name}"
        c = rep.check(f"{module}.{name}", value, tol, key, kind)
        rows.append({"module": module, "check": name, "value": c.value, "tolerance": c.tolerance,
                     "kind": kind, "passed": c.passed})

    # gridspace
    g = make_grid(1, 32, 16.0, True)
    K = gaussian_kernel(g, 1.0)
    worst_sym = worst_lin = 0.0
    for _ in range(10):
        p, q, r = (StateVector(g, _rand_complex(rng, g.size)) for _ in range(3))
        c = complex(*rng.normal(size=2))
        worst_sym = max(worst_sym, abs(kernel_inner(K, p, q) - np.conj(kernel_inner(K, q, p))))
        lhs = kernel_inner(K, p, c * q + r)
        rhs = c * kernel_inner(K, p, q) + kernel_inner(K, p, r)
        worst_lin = max(worst_lin, abs(lhs - rhs) / max(1.0, abs(lhs)))
    record("gridspace", "conjugate_symmetry", worst_sym / max(1.0, abs(kernel_inner(K, p, p))))
    record("gridspace", "sesquilinearity", worst_lin)

    Z = _rand_complex(rng, (g.size, g.size)) + 4 * np.eye(g.size)
    omega = Isomorphism(g, g, Z, np.linalg.inv(Z))
    KR = pushforward_metric(K, omega, strict=False)
    p, q = StateVector(g, _rand_complex(rng, g.size)), StateVector(g, _rand_complex(rng, g.size))
    a, b = kernel_inner(KR, p, q), kernel_inner(K, omega(p), omega(q))
    record("gridspace", "scalar_invariance", abs(a - b) / max(1.0, abs(b)))

    Kh = gaussian_kernel(g, 0.5)
    nodes = g.axis()
    worst = 0.0
    for x in nodes[::4]:
        d = delta_state(g, x)
        worst = max(worst, abs(kernel_inner(Kh, d, d) - 1.0))
    record("gridspace", "delta_norm", worst)
    excess = 0.0
    for _ in range(10):
        x, y = rng.choice(nodes, 2, replace=False)
        dist = g.displacement(np.array([x]), np.array([y]))[0]
        val = kernel_inner(Kh, delta_state(g, x), delta_state(g, y)).real
        excess = max(excess, val - np.exp(-0.5 * dist**2))
    record("gridspace", "near_orthogonality", max(excess, 0.0))
    subset = rng.choice(g.size, 8, replace=False)
    gram = Kh.matrix[np.ix_(subset, subset)]
    record("gridspace", "delta_independence", float(np.linalg.eigvalsh(gram)[0]), "min")
    record("gridspace", "superposition_norm", superposition_norm_error(Kh, rng))

    # embedding
    kf = GaussianKernelFunction(0.5)
    worst_sym = 0.0
    min_eig = np.inf
    for d in (1, 2, 3):
        for _ in range(3):
            gm = induced_metric(kf, rng.uniform(-3, 3, d), "fd")
            worst_sym = max(worst_sym, np.abs(gm - gm.T).max())
            min_eig = min(min_eig, np.linalg.eigvalsh(gm)[0])
    record("embedding", "metric_symmetry", worst_sym)
    record("embedding", "metric_positive", min_eig, "min")
    g2 = make_grid(2, 8, 8.0, True)
    K2 = gaussian_kernel(g2, 0.5)
    P = PointIsometry.rotation90().compose(PointIsometry.translation((1, -2)))
    worst = 0.0
    for _ in range(5):
        p, q = StateVector(g2, _rand_complex(rng, g2.size)), StateVector(g2, _rand_complex(rng, g2.size))
        a = kernel_inner(K2, isometry_pushforward(P, p), isometry_pushforward(P, q))
        worst = max(worst, abs(a - kernel_inner(K2, p, q)) / max(1.0, abs(a)))
    record("embedding", "isometry_invariance", worst)
    ratios = [delta_convergence_ratio(lambda x: np.pi**-0.25 * np.exp(-x * x / 2), L) for L in (1, 3, 10)]
    record("embedding", "delta_monotone_violation", max(0.0, -min(np.diff(ratios)), ratios[-1] - 1))

    # dynamics
    g = make_grid(1, 16, 8.0, True)
    A, B, C = (random_hermitian(g, rng, name=s) for s in "ABC")
    phi = random_state(g, rng)
    t, s = rng.uniform(0, 2, 2)
    path = integral_curve(A, phi, [t, t + s])
    step = A.propagator(s) @ path.states[0].values
    record("dynamics", "flow_property", np.abs(step - path.states[1].values).max())
    record("dynamics", "unitarity", float(abs(path.norms() - 1).max()))
    ab, ba = lie_bracket(A, B).matrix, lie_bracket(B, A).matrix
    record("dynamics", "bracket_antisymmetry", np.abs(ab + ba).max())
    jac = (lie_bracket(A, lie_bracket(B, C)).matrix + lie_bracket(B, lie_bracket(C, A)).matrix
           + lie_bracket(C, lie_bracket(A, B)).matrix)
    # lie_bracket accepts non-Hermitian inputs
    record("dynamics", "jacobi", np.abs(jac).max())
    exact = lie_bracket(A, B)(phi).values
    d1 = np.abs(flow_commutator(A, B, phi, 1e-2).values - exact).max()
    d2 = np.abs(flow_commutator(A, B, phi, 1e-3).values - exact).max()
    record("dynamics", "bracket_order_deviation", abs(d1 / d2 - 10) / 10)
    g2 = make_grid(2, 8, 8.0, True)
    closure = closure_table(g2, gaussian_packet(g2, [0.0, 0.0], 1.0))
    record("dynamics", "commuting_closure", closure[0]["defect"])
    record("dynamics", "noncommuting_closure", closure[1]["defect"], "min")
    gc = make_grid(1, 128, 32.0, True)
    gauss = gaussian_packet(gc, 0.0, 1.0)
    comm = lie_bracket(momentum_observable(gc), position_observable(gc))(gauss).values
    record("dynamics", "canonical_commutator", np.abs(comm + 1j * gauss.values).max())
    f = DualVector(g, _rand_complex(rng, g.size))
    eps = float(rng.uniform(0.1, 1.0))
    fe = drag_functional(f, A, eps)
    phi_eps = integral_curve(A, phi, [eps]).states[0]
    record("dynamics", "drag_property", abs(fe(phi) - f(phi_eps)) / max(1.0, abs(f(phi_eps))))

    # riemann
    g8 = make_grid(1, 8, 8.0, True)
    M = metric_from_kernel(_random_pd_kernel(g8, rng))
    worst = 0.0
    for _ in range(3):
        p, x = _rand_complex(rng, 8), _rand_complex(rng, 8)
        G = christoffel_contract(M, p, x)
        worst = max(worst, np.linalg.norm(christoffel_fd(M, p, x) - G) / np.linalg.norm(G))
    record("riemann", "christoffel_fd", worst)
    lam = complex(*rng.normal(size=2))
    p, x, y = (_rand_complex(rng, 8) for _ in range(3))
    m0 = metric_eval(M, p, x, y)
    record("riemann", "projective_metric", abs(metric_eval(M, lam * p, lam * x, lam * y) - m0) / max(1.0, abs(m0)))
    G = christoffel_contract(M, p, x)
    record("riemann", "projective_connection",
           np.abs(christoffel_contract(M, lam * p, lam * x) - lam * G).max() / np.abs(G).max())
    record("riemann", "quadratic_homogeneity",
           np.abs(christoffel_contract(M, p, 2.5 * x) - 6.25 * G).max() / np.abs(G).max())
    g32 = make_grid(1, 32, 16.0, True)
    worst = 0.0
    for _ in range(3):
        Ar = random_hermitian(g32, rng)
        Mr = metric_from_observable(Ar)
        pr = integral_curve(Mr.generator, random_state(g32, rng), np.arange(21) * 1e-2)
        worst = max(worst, geodesic_residual(Mr, pr))
    record("riemann", "geodesic_battery", worst)

    # su2
    worst_ad = 0.0
    for _ in range(5):
        a, b, c = rng.normal(size=(3, 3))
        h = su2.exp_algebra(c).matrix
        ga = su2.Su2Algebra.from_matrix(h @ su2.Su2Algebra(tuple(a)).matrix @ h.conj().T)
        gb = su2.Su2Algebra.from_matrix(h @ su2.Su2Algebra(tuple(b)).matrix @ h.conj().T)
        worst_ad = max(worst_ad, abs(su2.killing_inner(ga, gb) - su2.killing_inner(a, b)))
    record("su2", "ad_invariance", worst_ad)
    worst = 0.0
    for _ in range(5):
        a, b = rng.normal(size=(2, 3))
        worst = max(worst, abs(su2.sectional_curvature(a, b) - 1.0))
    record("su2", "constant_curvature", worst)
    worst = 0.0
    g0 = su2.exp_algebra(rng.normal(size=3))
    for k in (su2.E1, su2.E2, su2.E3):
        t0 = float(rng.uniform(0, 3))
        pa, pb = su2.su2_geodesic(g0, k, [t0, t0 + 2 * np.pi])
        worst = max(worst, np.abs(pb.matrix + pa.matrix).max())
        worst = max(worst, np.abs(pa.matrix.conj().T @ pa.matrix - np.eye(2)).max())
    record("su2", "double_cover", worst)
    s = _rand_complex(rng, 2)
    n1, n2 = su2.bloch_projection(s).n, su2.bloch_projection(np.exp(0.7j) * 3.0 * s).n
    record("su2", "bloch_phase", float(np.abs(np.subtract(n1, n2)).max()))

    # eigen
    gE = make_grid(1, 16, 16.0, True)
    Ae = random_hermitian(gE, rng)
    pairs = generalized_eigenpairs(Ae)
    worst = 0.0
    for pr in pairs[::4]:
        for _ in range(10):
            v = random_state(gE, rng)
            worst = max(worst, abs(pr.covector(Ae(v)) - pr.value * pr.covector(v)))
    record("eigen", "defining_relation", worst)
    Ue, _ = np.linalg.qr(_rand_complex(rng, (gE.size, gE.size)))
    om = Isomorphism(gE, gE, Ue, Ue.conj().T)
    worst = 0.0
    for pr in pairs[::4]:
        A2, f2 = transform_eigenproblem(Ae, pr.covector, om)
        worst = max(worst, np.abs(A2.matrix.T @ f2.values - pr.value * f2.values).max())
    record("eigen", "transformed_residual", worst)
    perm1, perm2 = rng.permutation(gE.size), rng.permutation(gE.size)
    P1, P2 = np.eye(gE.size)[perm1], np.eye(gE.size)[perm2]
    w1, w2 = Isomorphism(gE, gE, P1, P1.T), Isomorphism(gE, gE, P2, P2.T)
    f = DualVector(gE, _rand_complex(rng, gE.size))
    lhs = f.pullback(w1).pullback(w2).values
    rhs = f.pullback(w1.compose(w2)).values
    record("eigen", "pullback_composition", float(np.abs(lhs - rhs).max()), key="invariants.exact")

    rep.tables["invariants"] = rows
    return rep
