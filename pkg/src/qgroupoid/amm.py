"""The loop groupoid LG x Lg*, the AMM double D = G x G, and the identities relating them.

Loop tangents are (v, B): v a left-trivialized loop-algebra sample array and
B a connection sample array.  Tangents to D are left-trivialized pairs (a, b).
All holonomies here use the gauge-compatible sign ``GAUGE_SIGN`` of the loops
module, so Hol(gamma . A) = Ad_{gamma(0)} Hol(A) for the gauge action in use.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm, expm_frechet, subspace_angles

from .groupoid import ActionGroupoid, EvaluatedForm, NervePoint, NerveTangent, exterior_d_flat, multiplicativity_residual
from .lie import LieInstance
from .loops import (
    BAND_LIMIT,
    GAUGE_SIGN,
    DiscreteConnection,
    DiscreteLoop,
    derivative,
    gauge_action,
    inversion,
    loop_inv,
    loop_mul,
    pullback_loop,
    random_connection,
    random_loop_function,
    random_trig_poly,
    reverse_samples,
    sample_loop,
    transport,
)
from .sampling import ResidualStats, trial_rng

__all__ = [
    "LoopGroupoidPoint",
    "DPoint",
    "UnsupportedInstance",
    "omega_loop",
    "varpi",
    "omega_D",
    "OMEGA_D_VARIANTS",
    "mu_D",
    "mu_D_pushforward",
    "rho_D",
    "f_map",
    "f_pushforward",
    "phi_map",
    "phi_pushforward",
    "loop_groupoid",
    "random_loop_point",
    "random_loop_tangent",
    "equivalence_identity_residual",
    "d_varpi_residual",
    "delta_varpi_residual",
    "inv_minus_residual",
    "qham_axioms_residual",
    "adjudicate_conventions",
    "lg2_action",
    "moment_condition_residual",
    "f_morphism_residual",
    "omega_loop_multiplicativity",
]


class UnsupportedInstance(ValueError):
    """The construction needs an Ad-invariant pairing, which this instance lacks."""


def _require_invariant(L: LieInstance):
    if not L.invariant:
        raise UnsupportedInstance(f"{L.name}: the pairing is not Ad-invariant, so omega_D and varpi are undefined")


class LoopGroupoidPoint(NamedTuple):
    gamma: DiscreteLoop
    A: DiscreteConnection


class DPoint(NamedTuple):
    x: np.ndarray
    y: np.ndarray


def _mean_pair(L, u, w) -> float:
    return float(L.pair(u, w).mean())


# --- the two 2-forms ----------------------------------------------------------


def omega_loop(at: LoopGroupoidPoint, t1, t2, method: str = "spectral") -> float:
    """int (B1, v2) - (B2, v1) - (A, [v1, v2]) - (v1, dv2), trapezoidal (spectral) quadrature."""
    L = at.A.instance
    (v1, B1), (v2, B2) = t1, t2
    a = at.A.samples
    return (
        _mean_pair(L, B1, v2)
        - _mean_pair(L, B2, v1)
        - _mean_pair(L, a, L.bracket(v1, v2))
        - _mean_pair(L, v1, derivative(v2, method))
    )


def varpi(A: DiscreteConnection, B1, B2, substeps: int = 4) -> float:
    """varpi_A(B1, B2) accumulated alongside the holonomy in one pass."""
    _require_invariant(A.instance)
    return float(transport(A, [B1, B2], substeps, GAUGE_SIGN).varpi[0, 1])


# Candidate readings of the 2-form on D, used by the convention adjudication.
OMEGA_D_VARIANTS = {"stated": 1.0, "half-normalized": 0.5, "sign-reversed": -1.0}


def omega_D(L: LieInstance, at: DPoint, t1, t2, variant: str = "stated") -> float:
    """1/2 [(Ad_y a1, a2) - (Ad_y a2, a1)] + 1/2 [(a1, b2 + Ad_y b2) - (a2, b1 + Ad_y b1)].

    ``variant`` rescales by the factor in ``OMEGA_D_VARIANTS``.
    """
    (a1, b1), (a2, b2) = t1, t2
    Ay = L.Ad_matrix(at.y)
    val = 0.5 * (L.pair(Ay @ a1, a2) - L.pair(Ay @ a2, a1))
    val += 0.5 * (L.pair(a1, b2 + Ay @ b2) - L.pair(a2, b1 + Ay @ b1))
    return OMEGA_D_VARIANTS[variant] * float(val)


def omega_D_gram(L: LieInstance, at: DPoint, variant: str = "stated") -> np.ndarray:
    d = L.dim
    e = np.eye(2 * d)
    M = np.empty((2 * d, 2 * d))
    for i in range(2 * d):
        for j in range(2 * d):
            M[i, j] = omega_D(L, at, (e[i, :d], e[i, d:]), (e[j, :d], e[j, d:]), variant)
    return M


def mu_D(L: LieInstance, at: DPoint):
    x, y = at
    return x @ y @ L.inv(x), L.inv(y)


def mu_D_pushforward(L: LieInstance, at: DPoint, t):
    """Left-trivialized tangent of mu_D: (Ad_x(Ad_{y^-1} a - a + b), -Ad_y b)."""
    x, y = at
    a, b = t
    return L.adjoint(x, L.adjoint(L.inv(y), a) - a + b), -L.adjoint(y, b)


def rho_D(L: LieInstance, at: DPoint, v, sign: int = -1):
    """Infinitesimal action of (v1, v2) on D: d/dt exp(sign t v) . (x, y), left-trivialized."""
    x, y = at
    v1, v2 = v
    return (
        sign * (L.adjoint(L.inv(x), v1) - v2),
        sign * (L.adjoint(L.inv(y), v2) - v2),
    )


# --- f, Phi and the loop groupoid ----------------------------------------------


def f_map(at: LoopGroupoidPoint, substeps: int = 4) -> DPoint:
    A = at.A
    return DPoint(at.gamma.samples[0], transport(A, (), substeps, GAUGE_SIGN).path[-1])


def f_pushforward(at: LoopGroupoidPoint, tangents, substeps: int = 4, _tr=None):
    """[(v(0), Ad_{Hol^-1} V_1(B)) for each (v, B)], all through one transport."""
    L = at.A.instance
    tr = _tr if _tr is not None else transport(at.A, [B for _, B in tangents], substeps, GAUGE_SIGN)
    Hi = L.inv(tr.path[-1])
    return [(v[0], L.adjoint(Hi, tr.V[i, -1])) for i, (v, _) in enumerate(tangents)]


def phi_map(at: LoopGroupoidPoint, method: str = "spectral"):
    return gauge_action(at.gamma, at.A, method), inversion(at.A)


def phi_pushforward(at: LoopGroupoidPoint, t, method: str = "spectral"):
    """(Ad_gamma(B + [v, A] + dv), inv(B))."""
    L = at.A.instance
    v, B = t
    g = at.gamma.samples
    inner = B + L.bracket(v, at.A.samples) + derivative(v, method)
    first = L.coeffs(g @ L.to_matrix(inner) @ L.inv(g))
    return first, -reverse_samples(B)


def _loop_Ad(L):
    def Ad(g, v):
        return L.coeffs(g @ L.to_matrix(v) @ L.inv(g))
    return Ad


def loop_groupoid(L: LieInstance, method: str = "spectral") -> ActionGroupoid:
    """The gauge action groupoid LG x Lg* over Lg*, on raw sample arrays."""
    def act(g, a):
        return gauge_action(DiscreteLoop(L, g), DiscreteConnection(L, a), method).samples

    def act_tangent(g, a, v, B):
        pt = LoopGroupoidPoint(DiscreteLoop(L, g), DiscreteConnection(L, a))
        return phi_pushforward(pt, (v, B), method)[0]

    return ActionGroupoid(
        name=f"L{L.name}",
        mul=lambda g, h: L.project(g @ h),
        inv=L.inv,
        identity=lambda: None,
        Ad=_loop_Ad(L),
        act=act,
        act_tangent=act_tangent,
    )


def random_loop_point(L: LieInstance, rng, n: int, band_limit: int = BAND_LIMIT) -> LoopGroupoidPoint:
    A, _ = random_connection(L, rng, n, band_limit)
    gamma = sample_loop(L, random_loop_function(rng, L.dim, band_limit), n)
    return LoopGroupoidPoint(gamma, A)


def random_loop_tangent(L: LieInstance, rng, n: int, band_limit: int = BAND_LIMIT):
    return random_trig_poly(rng, L.dim, band_limit).sample(n), random_trig_poly(rng, L.dim, band_limit).sample(n)


# --- equivalence identity and the varpi identities ------------------------------


def _identity_terms(at: LoopGroupoidPoint, t1, t2, substeps: int, method: str):
    L = at.A.instance
    tr_A = transport(at.A, [t1[1], t2[1]], substeps, GAUGE_SIGN)
    fD = f_map(at, substeps)._replace(y=tr_A.path[-1])
    ft = f_pushforward(at, [t1, t2], substeps, _tr=tr_A)
    gA, invA = phi_map(at, method)
    p1, p2 = phi_pushforward(at, t1, method), phi_pushforward(at, t2, method)
    return {
        "omega_loop": omega_loop(at, t1, t2, method),
        "f_omega_D": omega_D(L, fD, ft[0], ft[1]),
        "varpi_target": float(transport(gA, [p1[0], p2[0]], substeps, GAUGE_SIGN).varpi[0, 1]),
        "varpi_inv": float(transport(invA, [p1[1], p2[1]], substeps, GAUGE_SIGN).varpi[0, 1]),
        "varpi_source": float(tr_A.varpi[0, 1]),
    }


def equivalence_identity_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                                  method: str = "spectral", band_limit: int = BAND_LIMIT, b_only: bool = False):
    """omega = f* omega_D - Phi*(varpi, varpi) by three routes.

    X_direct = f* omega_D - [varpi_{gamma.A}(Phi_* .) + varpi_{inv A}(inv .)],
    X_delta = f* omega_D + s* varpi - t* varpi, and X_loop = omega quadrature.
    Keys ``identity`` |X_direct - X_loop|, ``delta_arrow`` |X_delta - X_loop|,
    ``inv_minus`` |X_direct - X_delta|; all relative to the largest term.
    """
    _require_invariant(L)
    res = {k: ([], []) for k in ("identity", "delta_arrow", "inv_minus")}
    for t in range(trials):
        rng = trial_rng(seed, "amm-equivalence", t)
        at = random_loop_point(L, rng, n, band_limit)
        t1, t2 = random_loop_tangent(L, rng, n, band_limit), random_loop_tangent(L, rng, n, band_limit)
        if b_only:
            t1, t2 = (np.zeros_like(t1[0]), t1[1]), (np.zeros_like(t2[0]), t2[1])
        T = _identity_terms(at, t1, t2, substeps, method)
        x_direct = T["f_omega_D"] - (T["varpi_target"] + T["varpi_inv"])
        x_delta = T["f_omega_D"] + T["varpi_source"] - T["varpi_target"]
        scale = max(abs(v) for v in T.values())
        for key, r in (
            ("identity", x_direct - T["omega_loop"]),
            ("delta_arrow", x_delta - T["omega_loop"]),
            ("inv_minus", x_direct - x_delta),
        ):
            res[key][0].append(r)
            res[key][1].append(scale)
    return {k: ResidualStats.from_samples(*v) for k, v in res.items()}


def inv_minus_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                       band_limit: int = BAND_LIMIT) -> ResidualStats:
    """|varpi_{inv A}(inv B1, inv B2) + varpi_A(B1, B2)|, relative to |varpi_A|."""
    _require_invariant(L)
    res, scale = [], []
    for t in range(trials):
        rng = trial_rng(seed, "inv-minus", t)
        A, _ = random_connection(L, rng, n, band_limit)
        B1, B2 = (random_trig_poly(rng, L.dim, band_limit).sample(n) for _ in range(2))
        w = varpi(A, B1, B2, substeps)
        wi = varpi(inversion(A), -reverse_samples(B1), -reverse_samples(B2), substeps)
        res.append(w + wi)
        scale.append(max(abs(w), abs(wi)))
    return ResidualStats.from_samples(res, scale)


def d_varpi_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                     fd_step: float = 1e-4, band_limit: int = BAND_LIMIT) -> ResidualStats:
    """|d varpi(B1, B2, B3) + Omega(Hol_* B1, Hol_* B2, Hol_* B3)|.

    d varpi comes from central differences along the flat space of
    connections; Hol_* B is the left-trivialized first variation.
    """
    _require_invariant(L)

    def ev(a, ts):
        return float(transport(DiscreteConnection(L, a), ts, substeps, GAUGE_SIGN).varpi[0, 1])

    dvarpi = exterior_d_flat(EvaluatedForm(2, 0, ev, flat=True), step=fd_step)
    res, scale = [], []
    for t in range(trials):
        rng = trial_rng(seed, "d-varpi", t)
        A, _ = random_connection(L, rng, n, band_limit)
        Bs = [random_trig_poly(rng, L.dim, band_limit).sample(n) for _ in range(3)]
        lhs = dvarpi(A.samples, *Bs)
        tr = transport(A, Bs, substeps, GAUGE_SIGN)
        Hi = L.inv(tr.path[-1])
        b = [L.adjoint(Hi, tr.V[i, -1]) for i in range(3)]
        rhs = float(L.cartan3(*b))
        res.append(lhs + rhs)
        scale.append(max(abs(lhs), abs(rhs)))
    return ResidualStats.from_samples(res, scale)


def delta_varpi_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                         fd_step: float = 1e-4, band_limit: int = BAND_LIMIT):
    """Both components of delta varpi = omega - f*(omega_D + Omega).

    ``arrow``: s* varpi - t* varpi against omega - f* omega_D (relative).
    ``base``: d varpi + Hol* Omega (absolute, finite differences).
    """
    eq = equivalence_identity_residual(L, trials, seed, n, substeps, band_limit=band_limit)
    return {
        "arrow": eq["delta_arrow"],
        "base": d_varpi_residual(L, trials, seed, n, substeps, fd_step, band_limit),
    }


# --- q-Hamiltonian axioms ---------------------------------------------------------


def _left_trivialized_dexp(L: LieInstance, u, c):
    U, C = L.to_matrix(u), L.to_matrix(c)
    return L.coeffs(expm(-U) @ expm_frechet(U, C, compute_expm=False))


def _chart_form(L: LieInstance, at: DPoint, variant: str):
    """omega_D pulled back along (u1, u2) -> (x e^{u1}, y e^{u2}), as a flat form on R^{2d}."""
    d = L.dim

    def ev(u, ts):
        u1, u2 = u[:d], u[d:]
        pt = DPoint(at.x @ L.group_exp(u1), at.y @ L.group_exp(u2))
        tv = [(_left_trivialized_dexp(L, u1, c[:d]), _left_trivialized_dexp(L, u2, c[d:])) for c in ts]
        return omega_D(L, pt, tv[0], tv[1], variant)

    return EvaluatedForm(2, 0, ev, flat=True)


def _mu_omega(L: LieInstance, at: DPoint, cs):
    d = L.dim
    pushed = [mu_D_pushforward(L, at, (c[:d], c[d:])) for c in cs]
    return float(sum(L.cartan3(*[p[k] for p in pushed]) for k in range(2)))


def _axiom1(L, at, rng, variant, fd_step):
    d = L.dim
    cs = [np.concatenate([L.random_algebra(rng), L.random_algebra(rng)]) for _ in range(3)]
    dw = exterior_d_flat(_chart_form(L, at, variant), step=fd_step)(np.zeros(2 * d), *cs)
    rhs = _mu_omega(L, at, cs)
    return dw + rhs, max(1.0, abs(dw), abs(rhs))


def _axiom2(L, at, rng, variant, rho_sign):
    v = (L.random_algebra(rng), L.random_algebra(rng))
    t = (L.random_algebra(rng), L.random_algebra(rng))
    lhs = omega_D(L, at, rho_D(L, at, v, rho_sign), t, variant)
    c = mu_D_pushforward(L, at, t)
    z = mu_D(L, at)
    rhs = 0.5 * sum(float(L.pair(c[k] + L.adjoint(z[k], c[k]), v[k])) for k in range(2))
    return lhs - rhs, max(1.0, abs(lhs), abs(rhs))


def _kernel(M, tol):
    _, s, vh = np.linalg.svd(M)
    return vh[s < tol].T, s


def _axiom3(L, at, variant, rho_sign, kernel_tol=1e-8, ad_tol=1e-6):
    """(dimension match, max principal angle, min singular value of Ad_mu + 1)."""
    d = L.dim
    z = mu_D(L, at)
    adm = np.zeros((2 * d, 2 * d))
    adm[:d, :d] = L.Ad_matrix(z[0])
    adm[d:, d:] = L.Ad_matrix(z[1])
    K, s_ad = _kernel(adm + np.eye(2 * d), ad_tol)
    rho = np.zeros((2 * d, 2 * d))
    for i in range(2 * d):
        e = np.eye(2 * d)[i]
        r = rho_D(L, at, (e[:d], e[d:]), rho_sign)
        rho[:, i] = np.concatenate(r)
    expected = rho @ K
    ker_w, _ = _kernel(omega_D_gram(L, at, variant), kernel_tol)
    exp_rank = np.linalg.matrix_rank(expected, tol=1e-8) if expected.size else 0
    match = ker_w.shape[1] == exp_rank
    angle = 0.0
    if match and exp_rank:
        angle = float(np.max(subspace_angles(ker_w, expected)))
    return match, angle, float(s_ad.min())


def _random_D(L, rng):
    return DPoint(L.random_group(rng), L.random_group(rng))


def _degenerate_D(L, rng):
    """y whose adjoint action has eigenvalue -1: a rotation by pi about a random axis."""
    if L.abelian:
        return None
    u = L.random_algebra(rng)
    u = u / np.sqrt(L.pair(u, u))
    # on su2 and so3 with the chosen bases, exp(t u) with (u, u) = 1 rotates by t
    return DPoint(L.random_group(rng), L.group_exp(np.pi * u))


def qham_axioms_residual(L: LieInstance, trials: int, seed: int, fd_step: float = 1e-4, variant: str = "stated",
                         rho_sign: int = -1, generic_points: int = 50, degenerate_points: int = 10):
    """The three q-Hamiltonian axioms for (D, omega_D, mu_D).

    ``rho_sign = -1`` is the infinitesimal action d/dt exp(-tv) . m.
    Returns a dict: ``axiom1`` (relative, finite differences), ``axiom2``
    (relative, analytic), ``axiom3_generic`` and ``axiom3_degenerate``, each a
    dict with points, dimension mismatches and the worst principal angle.
    """
    _require_invariant(L)
    a1, s1, a2, s2 = [], [], [], []
    for t in range(trials):
        rng = trial_rng(seed, "qham-axioms", t)
        at = _random_D(L, rng)
        r, s = _axiom1(L, at, rng, variant, fd_step)
        a1.append(r)
        s1.append(s)
        r, s = _axiom2(L, at, rng, variant, rho_sign)
        a2.append(r)
        s2.append(s)
    strata = {"generic": [], "degenerate": []}
    for t in range(generic_points):
        at = _random_D(L, trial_rng(seed, "qham-kernel", t))
        m, ang, smin = _axiom3(L, at, variant, rho_sign)
        strata["generic" if smin >= 1e-6 else "degenerate"].append((m, ang))
    for t in range(degenerate_points):
        at = _degenerate_D(L, trial_rng(seed, "qham-kernel-degenerate", t))
        if at is not None:
            m, ang, _ = _axiom3(L, at, variant, rho_sign)
            strata["degenerate"].append((m, ang))
    out = {
        "axiom1": ResidualStats.from_samples(a1, s1),
        "axiom2": ResidualStats.from_samples(a2, s2),
    }
    for k, v in strata.items():
        out[f"axiom3_{k}"] = {
            "points": len(v),
            "dimension_mismatches": sum(1 for m, _ in v if not m),
            "max_angle": max((a for _, a in v), default=0.0),
        }
    return out


def adjudicate_conventions(L: LieInstance, trials: int, seed: int, fd_step: float = 1e-4,
                           tol_axiom1: float = 1e-4, tol_axiom2: float = 1e-10):
    """Evaluate axioms (1) and (2) for every omega_D reading and generating-field sign.

    Returns (table, chosen) where table maps (variant, rho_sign) to
    (axiom1 relative max, axiom2 relative max) and chosen is the first pair
    passing both, trying the literal reading (stated, -1) first, or None.
    """
    table = {}
    for variant in OMEGA_D_VARIANTS:
        for rho_sign in (-1, 1):
            r = qham_axioms_residual(L, trials, seed, fd_step, variant, rho_sign, 0, 0)
            table[(variant, rho_sign)] = (r["axiom1"].relative_max, r["axiom2"].relative_max)
    order = sorted(table, key=lambda k: (k != ("stated", -1), list(OMEGA_D_VARIANTS).index(k[0]), k[1]))
    chosen = next((k for k in order if table[k][0] < tol_axiom1 and table[k][1] < tol_axiom2), None)
    return table, chosen


# --- (LG x LG)-action, moment condition, morphism ---------------------------------


def lg2_action(g1: DiscreteLoop, g2: DiscreteLoop, at: LoopGroupoidPoint, method: str = "spectral") -> LoopGroupoidPoint:
    """(g1, g2) . (gamma, A) = (g1 gamma (I*g2)^{-1}, (I*g2) . A)."""
    Ig2 = pullback_loop(g2)
    gamma = loop_mul(loop_mul(g1, at.gamma), loop_inv(Ig2))
    return LoopGroupoidPoint(gamma, gauge_action(Ig2, at.A, method))


def _sigma(at, t1, t2, substeps, method):
    T = _identity_terms(at, t1, t2, substeps, method)
    return T["f_omega_D"] - T["varpi_target"] - T["varpi_inv"], T


def moment_condition_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                              method: str = "spectral", band_limit: int = BAND_LIMIT):
    """iota_{rho(u,w)} sigma = d int (Phi, (u, w)) for both generator families.

    rho(u, 0) = (-Ad_{gamma^{-1}} u, 0) and rho(0, w) = (I*w, -[I*w, A] - d(I*w));
    the right side is int (Phi_* X, (u, w)).  Keys ``first`` and ``second``
    (relative), plus ``first_vs_omega`` for iota_{rho(u,0)} omega = iota_{rho(u,0)} sigma.
    """
    _require_invariant(L)
    out = {k: ([], []) for k in ("first", "second", "first_vs_omega")}
    for t in range(trials):
        rng = trial_rng(seed, "moment", t)
        at = random_loop_point(L, rng, n, band_limit)
        X = random_loop_tangent(L, rng, n, band_limit)
        u = random_trig_poly(rng, L.dim, band_limit).sample(n)
        w = random_trig_poly(rng, L.dim, band_limit).sample(n)
        g = at.gamma.samples
        px = phi_pushforward(at, X, method)
        r1 = (-L.coeffs(L.inv(g) @ L.to_matrix(u) @ g), np.zeros_like(u))
        Iw = reverse_samples(w)
        r2 = (Iw, -L.bracket(Iw, at.A.samples) - derivative(Iw, method))
        for key, rho, dmu in (
            ("first", r1, _mean_pair(L, px[0], u)),
            ("second", r2, _mean_pair(L, px[1], w)),
        ):
            sig, T = _sigma(at, rho, X, substeps, method)
            out[key][0].append(sig - dmu)
            out[key][1].append(max(max(abs(v) for v in T.values()), abs(dmu)))
            if key == "first":
                om = omega_loop(at, rho, X, method)
                out["first_vs_omega"][0].append(om - sig)
                out["first_vs_omega"][1].append(max(abs(om), abs(sig)))
    return {k: ResidualStats.from_samples(*v) for k, v in out.items()}


def lg2_action_residuals(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                         method: str = "spectral", band_limit: int = BAND_LIMIT):
    """``action_law``: (g1 g1', g2 g2') . p = (g1, g2) . ((g1', g2') . p);
    ``phi_equivariance``: Phi((g1, g2) . p) = (g1 . Phi_1(p), g2 . Phi_2(p)).
    Both relative, samplewise maxima.
    """
    _require_invariant(L)
    law, eqv = ([], []), ([], [])
    for t in range(trials):
        rng = trial_rng(seed, "lg2-action", t)
        at = random_loop_point(L, rng, n, band_limit)
        g = [sample_loop(L, random_loop_function(rng, L.dim, band_limit), n) for _ in range(4)]
        lhs = lg2_action(loop_mul(g[0], g[2]), loop_mul(g[1], g[3]), at, method)
        rhs = lg2_action(g[0], g[1], lg2_action(g[2], g[3], at, method), method)
        r = max(np.abs(lhs.gamma.samples - rhs.gamma.samples).max(), np.abs(lhs.A.samples - rhs.A.samples).max())
        law[0].append(r)
        law[1].append(max(1.0, np.abs(rhs.A.samples).max()))
        moved = lg2_action(g[0], g[1], at, method)
        p1, p2 = phi_map(moved, method)
        q1, q2 = phi_map(at, method)
        e1 = gauge_action(g[0], q1, method).samples
        e2 = gauge_action(g[1], q2, method).samples
        r = max(np.abs(p1.samples - e1).max(), np.abs(p2.samples - e2).max())
        eqv[0].append(r)
        eqv[1].append(max(1.0, np.abs(e1).max(), np.abs(e2).max()))
    return {"action_law": ResidualStats.from_samples(*law), "phi_equivariance": ResidualStats.from_samples(*eqv)}


def f_morphism_residual(L: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                        method: str = "spectral", band_limit: int = BAND_LIMIT):
    """f against source, target, product and units of the two groupoids, and Hol o Phi = mu_D o f.

    On D = G x G over G the arrow (x, y) goes from y to x y x^{-1} and
    (x1, y1)(x2, y2) = (x1 x2, y2).
    """
    morph, square = [], []
    for t in range(trials):
        rng = trial_rng(seed, "f-morphism", t)
        q = random_loop_point(L, rng, n, band_limit)
        g1 = sample_loop(L, random_loop_function(rng, L.dim, band_limit), n)
        p = LoopGroupoidPoint(g1, gauge_action(q.gamma, q.A, method))
        m = LoopGroupoidPoint(loop_mul(p.gamma, q.gamma), q.A)
        fp, fq, fm = f_map(p, substeps), f_map(q, substeps), f_map(m, substeps)
        hol_s = fq.y
        r = [
            np.abs(fp.y - fq.x @ fq.y @ L.inv(fq.x)).max(),  # t(f q) = s(f p)
            np.abs(fm.x - fp.x @ fq.x).max(),
            np.abs(fm.y - fq.y).max(),
        ]
        unit = f_map(LoopGroupoidPoint(DiscreteLoop(L, np.broadcast_to(L.identity(), q.gamma.samples.shape).copy()), q.A), substeps)
        r.append(np.abs(unit.x - L.identity()).max())
        r.append(np.abs(unit.y - hol_s).max())
        morph.append(max(r))
        phi1, phi2 = phi_map(q, method)
        mu = mu_D(L, fq)
        h1 = transport(phi1, (), substeps, GAUGE_SIGN).path[-1]
        h2 = transport(phi2, (), substeps, GAUGE_SIGN).path[-1]
        square.append(max(np.abs(h1 - mu[0]).max(), np.abs(h2 - mu[1]).max()))
    return {"morphism": ResidualStats.from_samples(morph), "square": ResidualStats.from_samples(square)}


def omega_loop_multiplicativity(L: LieInstance, trials: int, seed: int, n: int = 256, method: str = "spectral",
                                band_limit: int = BAND_LIMIT) -> ResidualStats:
    """pr1* omega - m* omega + pr2* omega on the gauge action groupoid."""
    _require_invariant(L)
    G = loop_groupoid(L, method)
    omega = EvaluatedForm(
        2, 1,
        lambda pt, ts: omega_loop(
            LoopGroupoidPoint(DiscreteLoop(L, pt.arrows[0]), DiscreteConnection(L, pt.base)),
            (ts[0].vs[0], ts[0].xi), (ts[1].vs[0], ts[1].xi), method,
        ),
    )

    def sampler(rng):
        g = sample_loop(L, random_loop_function(rng, L.dim, band_limit), n).samples
        h = sample_loop(L, random_loop_function(rng, L.dim, band_limit), n).samples
        A, _ = random_connection(L, rng, n, band_limit)
        tans = []
        for _ in range(2):
            v1, B = random_loop_tangent(L, rng, n, band_limit)
            v2 = random_trig_poly(rng, L.dim, band_limit).sample(n)
            tans.append(NerveTangent((v1, v2), B))
        return NervePoint((g, h), A.samples), tans[0], tans[1]

    return multiplicativity_residual(G, omega, sampler, trials, seed, "omega-loop-multiplicativity")
