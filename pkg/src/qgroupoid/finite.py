"""The symplectic groupoid G x g* of an affine Poisson structure, and its central-extension picture.

Points of Gamma = G x g* are pairs (g, eta) with eta the source; tangents are
pairs (v, xi) with v left-trivialized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, expm_frechet, lu_factor, lu_solve

from .affine import GroupOneCocycle, TwoCocycle, affine_action, area_cocycle, builtin_chi
from .groupoid import ActionGroupoid, EvaluatedForm, NervePoint, NerveTangent, simplicial_partial
from .lie import LieInstance, get_instance
from .sampling import NumericalFailure, ResidualStats, trial_rng

__all__ = [
    "gamma_groupoid",
    "omega_gamma",
    "omega_gamma_form",
    "omega_gamma_matrix",
    "omega_gamma_chart_fd",
    "nondegeneracy_margin",
    "realization_residual",
    "hamiltonian_space_residual",
    "ExtendedAlgebra",
    "ExtendedGroupInstance",
    "heisenberg_extension",
    "reduced_form_residual",
    "moment_level_reduction",
    "pseudo_curvature_residual",
    "COND_LIMIT",
]

COND_LIMIT = 1e12


def gamma_groupoid(chi: GroupOneCocycle, lam: TwoCocycle) -> ActionGroupoid:
    """Gamma = G x g* acting through the affine action."""
    L = chi.instance

    def act_tangent(h, eta, w, xi):
        # d/dt (h e^{tw}).(eta + t xi) = Ad*_{h^-1}(xi - ad*_w eta - lambda_flat(w))
        return L.coadjoint(h, xi - L.ad_star(w, eta) - lam.flat(w))

    return ActionGroupoid(
        name=f"Gamma[{L.name}]",
        mul=lambda g, h: g @ h,
        inv=L.inv,
        identity=L.identity,
        Ad=L.adjoint,
        act=lambda g, x: affine_action(chi, g, x),
        act_tangent=act_tangent,
    )


def omega_gamma(lam: TwoCocycle, eta, t1, t2) -> float:
    """<xi1, v2> - <xi2, v1> - <eta, [v1, v2]> - lambda(v1, v2) at a point with source eta.

    The group component of the point does not enter.
    """
    L = lam.instance
    (v1, x1), (v2, x2) = t1, t2
    return L.pair(x1, v2) - L.pair(x2, v1) - L.pair(eta, L.bracket(v1, v2)) - lam(v1, v2)


def omega_gamma_form(lam: TwoCocycle) -> EvaluatedForm:
    def ev(pt: NervePoint, ts):
        t1, t2 = ((t.vs[0], t.xi) for t in ts)
        return omega_gamma(lam, pt.base, t1, t2)

    return EvaluatedForm(2, 1, ev)


def omega_gamma_matrix(lam: TwoCocycle, eta) -> np.ndarray:
    """Gram matrix W[i, j] = omega(e_i, e_j) in (v, xi) coordinates."""
    d = lam.instance.dim
    e = np.eye(2 * d)
    W = np.empty((2 * d, 2 * d))
    for i in range(2 * d):
        for j in range(2 * d):
            W[i, j] = omega_gamma(lam, eta, (e[i, :d], e[i, d:]), (e[j, :d], e[j, d:]))
    return W


def nondegeneracy_margin(lam: TwoCocycle, eta) -> float:
    """Smallest singular value of omega_Gamma at a point."""
    return float(np.linalg.svd(omega_gamma_matrix(lam, eta), compute_uv=False).min())


def omega_gamma_chart_fd(lam: TwoCocycle, g, eta, t1, t2, step: float = 1e-4) -> float:
    """Independent evaluation of -phi*omega_M through an exponential chart.

    The Liouville form pulled back to (u, eta) -> (g exp(u), eta) has
    components alpha_k = <eta, theta(d/du_k g exp(u))>, computed with the exact
    Frechet derivative of expm.  Its exterior derivative is taken by central
    differences in u and exactly in eta (alpha is linear in eta); the magnetic
    term -lambda is added.  At u = 0 chart vectors are left-trivialized tangents.
    """
    L = lam.instance
    d = L.dim

    def alpha(u, et):
        U = L.to_matrix(u)
        eU = expm(U)
        ginv = np.linalg.inv(g @ eU)
        comps = np.empty(d)
        for k in range(d):
            dk = g @ expm_frechet(U, L.basis[k], compute_expm=False)
            comps[k] = L.pair(et, L.coeffs(ginv @ dk))
        return comps

    dalpha = np.zeros((d, d))  # d alpha restricted to the u-directions
    for k in range(d):
        uk = np.zeros(d)
        uk[k] = step
        dk = (alpha(uk, eta) - alpha(-uk, eta)) / (2 * step)  # partial_k alpha_l
        dalpha[k, :] += dk
        dalpha[:, k] -= dk
    (v1, x1), (v2, x2) = t1, t2
    # mixed terms: partial_eta alpha_u = identity pairing
    val = v1 @ dalpha @ v2 + L.pair(x1, v2) - L.pair(x2, v1)
    return float(val - lam(v1, v2))


def _solve_checked(W, rhs, where):
    cond = np.linalg.cond(W)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise NumericalFailure(f"omega_Gamma singular (cond {cond:.2e})", where)
    return lu_solve(lu_factor(W), rhs)


def realization_residual(lam: TwoCocycle, trials: int, seed: int) -> ResidualStats:
    """Hamiltonian vector fields of s*l_v and the induced bracket on Gamma.

    For each random point, solves W^T x = s*(dl_v) and compares with the
    closed form (-v, -ad*_v eta - lambda_flat(v)); then compares
    pi_Gamma(s*dl_v1, s*dl_v2) := -omega(x1, x2) with -pi_lambda(dl_v1, dl_v2).
    """
    L = lam.instance
    d = L.dim
    res = []
    for t in range(trials):
        rng = trial_rng(seed, "realization", t)
        eta = L.random_algebra(rng)
        W = omega_gamma_matrix(lam, eta)
        v1, v2 = L.random_algebra(rng), L.random_algebra(rng)
        xs = []
        r = 0.0
        for v in (v1, v2):
            rhs = np.concatenate([np.zeros(d), L.pairing_matrix @ v])
            x = _solve_checked(W.T, rhs, ("realization", seed, t))
            ref = np.concatenate([-v, -L.ad_star(v, eta) - lam.flat(v)])
            r = max(r, np.abs(x - ref).max())
            xs.append(x)
        pi_gamma = -xs[0] @ W @ xs[1]
        pi_lam = L.pair(eta, L.bracket(v1, v2)) + lam(v1, v2)
        res.append(max(r, abs(pi_gamma + pi_lam)))
    return ResidualStats.from_samples(res)


def hamiltonian_space_residual(instance: LieInstance, trials: int, seed: int, step: float = 1e-5):
    """The canonical (lambda = 0) groupoid as a Hamiltonian G-space.

    Returns a dict of ResidualStats: ``identity`` for omega_flat(rho(u)) = d f_u
    with the analytic differential, ``gradient_fd`` comparing that
    differential with central differences, and ``equivariance`` for the
    moment map t under left multiplication.
    """
    L = instance
    lam = TwoCocycle(L, np.zeros((L.dim, L.dim)))
    chi = builtin_chi(L, lam)
    ident, grad, equi = [], [], []
    for t in range(trials):
        rng = trial_rng(seed, "hamiltonian-space", t)
        g, xi = L.random_group(rng), L.random_algebra(rng)
        u, v2, x2 = L.random_algebra(rng), L.random_algebra(rng), L.random_algebra(rng)
        w = L.adjoint(L.inv(g), u)
        rho = (-w, np.zeros(L.dim))
        lhs = omega_gamma(lam, xi, rho, (v2, x2))
        df = L.pair(x2, w) - L.pair(xi, L.bracket(v2, w))
        ident.append(lhs - df)

        def f(gg, xx):
            return L.pair(u, L.coadjoint(gg, xx))

        fd = (f(g @ L.group_exp(step * v2), xi + step * x2) - f(g @ L.group_exp(-step * v2), xi - step * x2)) / (2 * step)
        grad.append(fd - df)

        h = L.random_group(rng)
        t_left = affine_action(chi, h @ g, xi)
        equi.append(np.abs(t_left - L.coadjoint(h, affine_action(chi, g, xi))).max())
    return {
        "identity": ResidualStats.from_samples(ident),
        "gradient_fd": ResidualStats.from_samples(grad),
        "equivariance": ResidualStats.from_samples(equi),
    }


# --- central extension -------------------------------------------------------


@dataclass(frozen=True)
class ExtendedAlgebra:
    """g~ = g + R with bracket ([v1, v2], lambda(v1, v2)); elements are (d + 1)-vectors."""

    base: LieInstance
    cocycle: TwoCocycle

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    def bracket(self, x, y):
        d = self.base.dim
        top = self.base.bracket(x[..., :d], y[..., :d])
        return np.concatenate([top, np.asarray(self.cocycle(x[..., :d], y[..., :d]))[..., None]], axis=-1)

    def j(self, xi):
        """j(xi) = (xi, 1)."""
        return np.concatenate([xi, np.ones(np.shape(xi)[:-1] + (1,))], axis=-1)

    def jacobi_residual(self, trials: int, seed: int) -> ResidualStats:
        res = []
        for t in range(trials):
            rng = trial_rng(seed, "extended-jacobi", t)
            u, v, w = (rng.uniform(-1, 1, self.dim) for _ in range(3))
            b = self.bracket
            s = b(u, b(v, w)) + b(v, b(w, u)) + b(w, b(u, v))
            c = b(u, np.eye(self.dim)[-1])  # centrality
            res.append(max(np.abs(s).max(), np.abs(c).max()))
        return ResidualStats.from_samples(res)


@dataclass(frozen=True)
class ExtendedGroupInstance:
    """An R-central extension G~ -> G realized by matrices.

    Algebra coordinates of ``group`` are ordered (g-coordinates, central).
    """

    group: LieInstance
    base: LieInstance
    algebra: ExtendedAlgebra
    projection: object
    center: object

    def p(self, h):
        return self.projection(h)

    def coadjoint(self, h, zeta):
        return self.group.coadjoint(h, zeta)

    def chi_from_extension(self, h):
        """<chi(p(h)), v> = -pr_R(Ad_{h^-1}(v, 0)), returned as a covector of g."""
        d = self.base.dim
        m = self.group.Ad_matrix(self.group.inv(h))
        return -m[d, :d] @ np.linalg.inv(self.base.pairing_matrix).T

    def action(self, h, xi):
        """Quotient action on g* x {1}: first d components of Ad*_{h^-1}(xi, 1)."""
        return self.coadjoint(h, self.algebra.j(xi))[: self.base.dim]

    def groupoid(self) -> ActionGroupoid:
        G, A = self.group, self.algebra
        d = self.base.dim

        def act_tangent(h, xi, w, dxi):
            zeta = A.j(xi)
            dz = np.concatenate([dxi, [0.0]]) - G.ad_star(w, zeta)
            return G.coadjoint(h, dz)[:d]

        return ActionGroupoid(
            name=f"R[{G.name}->{self.base.name}]",
            mul=lambda g, h: g @ h,
            inv=G.inv,
            identity=G.identity,
            Ad=G.adjoint,
            act=self.action,
            act_tangent=act_tangent,
        )


def heisenberg_extension() -> ExtendedGroupInstance:
    """The Heisenberg group as the R-central extension of abelian2 by the area cocycle."""
    H = get_instance("heisenberg3")
    A = get_instance("abelian2")
    lam = area_cocycle(A)

    def proj(h):
        h = np.asarray(h)
        out = np.broadcast_to(np.eye(3), h.shape).copy()
        out[..., 0, 2] = h[..., 0, 1]
        out[..., 1, 2] = h[..., 1, 2]
        return out

    def center(c):
        return H.group_exp(np.array([0.0, 0.0, c]))

    return ExtendedGroupInstance(H, A, ExtendedAlgebra(A, lam), proj, center)


def _canonical_extended(ext: ExtendedGroupInstance, zeta, t1, t2):
    """Canonical form of G~ x g~* at (h, zeta) on tangents (v~, dzeta), lambda = 0."""
    G = ext.group
    (v1, z1), (v2, z2) = t1, t2
    return G.pair(z1, v2) - G.pair(z2, v1) - G.pair(zeta, G.bracket(v1, v2))


def reduced_form_residual(ext: ExtendedGroupInstance, trials: int, seed: int):
    """-j~*phi~*omega~_can against p~*omega_Gamma on the level set mu~ = 1.

    Returns a dict with the main residual, the pure-center check and the
    lambda-isolation check.
    """
    lam = ext.algebra.cocycle
    zero = TwoCocycle(ext.base, np.zeros_like(lam.matrix))
    d = ext.base.dim
    main, center, iso = [], [], []
    for t in range(trials):
        rng = trial_rng(seed, "reduced-form", t)
        eta = ext.base.random_algebra(rng)
        vt1, vt2 = rng.uniform(-1, 1, d + 1), rng.uniform(-1, 1, d + 1)
        x1, x2 = ext.base.random_algebra(rng), ext.base.random_algebra(rng)
        zeta = ext.algebra.j(eta)
        # -phi~*omega~_can is the canonical formula itself
        lhs = _canonical_extended(ext, zeta, (vt1, np.append(x1, 0.0)), (vt2, np.append(x2, 0.0)))
        rhs = omega_gamma(lam, eta, (vt1[:d], x1), (vt2[:d], x2))
        main.append(lhs - rhs)
        c = np.zeros(d + 1)
        c[-1] = rng.uniform(-1, 1)
        lc = _canonical_extended(ext, zeta, (c, np.zeros(d + 1)), (vt2, np.append(x2, 0.0)))
        rc = omega_gamma(lam, eta, (c[:d], np.zeros(d)), (vt2[:d], x2))
        center.append(max(abs(lc), abs(rc)))
        diff = rhs - omega_gamma(zero, eta, (vt1[:d], x1), (vt2[:d], x2))
        iso.append(diff + lam(vt1[:d], vt2[:d]))
    return {
        "reduction": ResidualStats.from_samples(main),
        "center": ResidualStats.from_samples(center),
        "lambda_isolation": ResidualStats.from_samples(iso),
    }


def moment_level_reduction(ext: ExtendedGroupInstance, trials: int, seed: int):
    """Level-1 reduction of the cotangent groupoid of G~.

    Checks, as ResidualStats in a dict: invariance of mu~ = pr_R o t~ under the
    center, the quotient action against the affine action, the extracted chi
    against builtin_chi, p being a homomorphism, and descent of multiplication.
    """
    G, B = ext.group, ext.base
    lam = ext.algebra.cocycle
    chi = builtin_chi(B, lam)
    d = B.dim
    out = {k: [] for k in ("center_invariance", "affine_action", "chi_extraction", "homomorphism", "descent")}
    for t in range(trials):
        rng = trial_rng(seed, "moment-level", t)
        g, h = G.random_group(rng), G.random_group(rng)
        zeta = rng.uniform(-1, 1, d + 1)
        c = ext.center(rng.uniform(-3, 3))
        out["center_invariance"].append(G.coadjoint(c @ g, zeta)[-1] - G.coadjoint(g, zeta)[-1])
        xi = B.random_algebra(rng)
        full = G.coadjoint(h, ext.algebra.j(xi))
        r = max(np.abs(full[:d] - affine_action(chi, ext.p(h), xi)).max(), abs(full[-1] - 1))
        out["affine_action"].append(r)
        out["chi_extraction"].append(np.abs(ext.chi_from_extension(h) - chi(ext.p(h))).max())
        out["homomorphism"].append(np.abs(ext.p(g @ h) - ext.p(g) @ ext.p(h)).max())
        # composable pair ((g, h.xi), (h, xi)) in the extended groupoid vs Gamma
        up = (g @ h, xi)
        down_first = (ext.p(g), affine_action(chi, ext.p(h), xi))
        down = (down_first[0] @ ext.p(h), xi)
        r = max(
            np.abs(ext.p(up[0]) - down[0]).max(),
            np.abs(up[1] - down[1]).max(),
            np.abs(ext.action(h, xi) - down_first[1]).max(),
        )
        out["descent"].append(r)
    return {k: ResidualStats.from_samples(v) for k, v in out.items()}


def pseudo_curvature_residual(ext: ExtendedGroupInstance, trials: int, seed: int):
    """Pseudo-connection theta = j~*phi~*theta_L with B = 0.

    Returns ResidualStats for ``d_theta`` (d theta against p~*omega_Gamma),
    ``partial_theta`` (the simplicial differential on composable pairs),
    ``fiber`` (theta on central tangents equals r) and ``pushforward_fd``
    (closed-form face pushforward against central differences).
    """
    G, B = ext.group, ext.base
    lam = ext.algebra.cocycle
    d = B.dim
    groupoid = ext.groupoid()

    def theta_ev(pt: NervePoint, ts):
        (t,) = ts
        return G.pair(ext.algebra.j(pt.base), t.vs[0])

    theta = EvaluatedForm(1, 1, theta_ev)
    d_theta_simplicial = simplicial_partial(groupoid, theta)

    out = {k: [] for k in ("d_theta", "partial_theta", "fiber", "pushforward_fd")}
    step = 1e-5
    for t in range(trials):
        rng = trial_rng(seed, "pseudo-curvature", t)
        g, h = G.random_group(rng), G.random_group(rng)
        xi = B.random_algebra(rng)
        v1, v2 = rng.uniform(-1, 1, d + 1), rng.uniform(-1, 1, d + 1)
        x1, x2 = B.random_algebra(rng), B.random_algebra(rng)
        # d theta(X, Y) = X theta(Y) - Y theta(X) - theta([X, Y]) with
        # left-invariant extensions in G~ and constant ones in g*
        zeta = ext.algebra.j(xi)
        br = G.coeffs(G.to_matrix(v1) @ G.to_matrix(v2) - G.to_matrix(v2) @ G.to_matrix(v1))
        dth = B.pair(x1, v2[:d]) - B.pair(x2, v1[:d]) - G.pair(zeta, br)
        out["d_theta"].append(dth - omega_gamma(lam, xi, (v1[:d], x1), (v2[:d], x2)))

        pt = NervePoint((g, h), xi)
        tan = NerveTangent((v1, v2), x1)
        out["partial_theta"].append(d_theta_simplicial(pt, tan))

        r = rng.uniform(-1, 1)
        cen = np.zeros(d + 1)
        cen[-1] = r
        out["fiber"].append(theta(NervePoint((g,), xi), NerveTangent((cen,), x1)) - r)

        fd = (
            ext.action(h @ G.group_exp(step * v2), xi + step * x1)
            - ext.action(h @ G.group_exp(-step * v2), xi - step * x1)
        ) / (2 * step)
        out["pushforward_fd"].append(np.abs(fd - groupoid.act_tangent(h, xi, v2, x1)).max())
    return {k: ResidualStats.from_samples(v) for k, v in out.items()}
