"""Affine Poisson structures on g*, Lie algebra 2-cocycles and their integrations."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Callable

import numpy as np

from .lie import LieInstance
from .sampling import ResidualStats, trial_rng

__all__ = [
    "TwoCocycle",
    "GroupOneCocycle",
    "AffinePoissonStructure",
    "area_cocycle",
    "exact_cocycle",
    "zero_cocycle",
    "poisson_bracket_linear",
    "jacobi_residual",
    "affine_action",
    "builtin_chi",
    "integrate_lemma_residual",
    "chi_cocycle_residual",
    "van_est_residual",
    "affine_action_law_residual",
    "UnsupportedCocycle",
]


class UnsupportedCocycle(ValueError):
    """No closed-form integration is available for this (instance, cocycle) pair."""


class TwoCocycle:
    """A Lie algebra 2-cocycle lambda(u, v) = u @ M @ v.

    With ``validate=False`` the antisymmetry and cocycle checks are skipped,
    which is how negative controls are built.
    """

    def __init__(self, instance: LieInstance, matrix, validate: bool = True, xi0=None):
        self.instance = instance
        self.matrix = np.array(matrix, dtype=float)
        self.xi0 = None if xi0 is None else np.asarray(xi0, dtype=float)
        if self.matrix.shape != (instance.dim, instance.dim):
            raise ValueError("cocycle matrix has the wrong shape")
        if validate:
            if np.any(self.matrix != -self.matrix.T):
                raise ValueError("2-cocycle matrix must be exactly antisymmetric")
            res = self.cocycle_residual()
            if res > 1e-12:
                raise ValueError(f"cocycle identity violated on basis triples ({res:.2e})")

    def __call__(self, u, v):
        return np.einsum("...i,ij,...j->...", u, self.matrix, v)

    def flat(self, u):
        """lambda_flat(u), the covector with <lambda_flat(u), v> = lambda(u, v)."""
        L = self.instance
        return np.einsum("ij,kj,...k->...i", np.linalg.inv(L.pairing_matrix), self.matrix, u)

    def cocycle_residual(self) -> float:
        L = self.instance
        e = np.eye(L.dim)
        worst = 0.0
        for i, j, k in product(range(L.dim), repeat=3):
            u, v, w = e[i], e[j], e[k]
            c = self(u, L.bracket(v, w)) + self(v, L.bracket(w, u)) + self(w, L.bracket(u, v))
            worst = max(worst, abs(c))
        return float(worst)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.matrix)


def zero_cocycle(instance: LieInstance) -> TwoCocycle:
    return TwoCocycle(instance, np.zeros((instance.dim, instance.dim)))


def area_cocycle(instance: LieInstance, scale: float = 1.0) -> TwoCocycle:
    """The area form on a 2-dimensional abelian algebra."""
    if instance.dim != 2 or not instance.abelian:
        raise ValueError("the area cocycle needs a 2-dimensional abelian algebra")
    return TwoCocycle(instance, scale * np.array([[0.0, 1.0], [-1.0, 0.0]]))


def exact_cocycle(instance: LieInstance, xi0) -> TwoCocycle:
    """lambda(u, v) = <xi0, [u, v]>."""
    xi0 = np.asarray(xi0, dtype=float)
    m = np.einsum("a,ab,ijb->ij", xi0, instance.pairing_matrix, instance.structure_constants)
    m = 0.5 * (m - m.T)  # removes rounding asymmetry only
    return TwoCocycle(instance, m, xi0=xi0)


@dataclass(frozen=True)
class AffinePoissonStructure:
    cocycle: TwoCocycle

    @property
    def instance(self) -> LieInstance:
        return self.cocycle.instance


@dataclass(frozen=True)
class GroupOneCocycle:
    """A group 1-cocycle chi: G -> g*."""

    instance: LieInstance
    evaluate: Callable[[np.ndarray], np.ndarray]
    description: str = ""

    def __call__(self, g):
        return self.evaluate(g)


def poisson_bracket_linear(pi: AffinePoissonStructure, u, v, xi) -> float:
    """{l_u, l_v}(xi) = <xi, [u, v]> + lambda(u, v)."""
    L = pi.instance
    return L.pair(xi, L.bracket(u, v)) + pi.cocycle(u, v)


def _bracket_affine(pi, f, g):
    # affine functions xi -> <xi, a> + c; constants are Casimirs
    (a, _), (b, _) = f, g
    return pi.instance.bracket(a, b), pi.cocycle(a, b)


def _jacobi_sum(pi, u, v, w, xi):
    L = pi.instance
    total = 0.0
    for a, b, c in ((u, v, w), (v, w, u), (w, u, v)):
        inner = _bracket_affine(pi, (a, 0.0), (b, 0.0))
        vec, const = _bracket_affine(pi, inner, (c, 0.0))
        total += L.pair(xi, vec) + const
    return total


def jacobi_residual(pi: AffinePoissonStructure, trials: int, seed: int) -> ResidualStats:
    """Cyclic Jacobi sum of the bracket on linear functions.

    Every basis triple is visited once at a random covector, then ``trials``
    random basis triples at fresh random covectors.
    """
    L = pi.instance
    e = np.eye(L.dim)
    rng0 = trial_rng(seed, "jacobi-exhaustive", 0)
    res = [
        _jacobi_sum(pi, e[i], e[j], e[k], L.random_algebra(rng0))
        for i, j, k in product(range(L.dim), repeat=3)
    ]
    for t in range(trials):
        rng = trial_rng(seed, "jacobi", t)
        i, j, k = rng.integers(0, L.dim, 3)
        res.append(_jacobi_sum(pi, e[i], e[j], e[k], L.random_algebra(rng)))
    return ResidualStats.from_samples(res)


def affine_action(chi: GroupOneCocycle, g, xi):
    """g . xi = Ad*_{g^-1} xi - chi(g)."""
    return chi.instance.coadjoint(g, xi) - chi(g)


def _exact_xi0(lam: TwoCocycle):
    if lam.xi0 is not None:
        return lam.xi0
    L = lam.instance
    # solve lambda_ij = <xi0, [e_i, e_j]> in the least-squares sense
    a = np.einsum("ab,ijb->ija", L.pairing_matrix, L.structure_constants).reshape(-1, L.dim)
    xi0, *_ = np.linalg.lstsq(a, lam.matrix.ravel(), rcond=None)
    if np.abs(a @ xi0 - lam.matrix.ravel()).max() > 1e-12:
        raise UnsupportedCocycle(f"{L.name}: cocycle is not of the form <xi0, [.,.]>")
    return xi0


def builtin_chi(instance: LieInstance, lam: TwoCocycle) -> GroupOneCocycle:
    """Closed-form integration chi of lambda_flat.

    * lambda = 0 on any instance: chi = 0.
    * abelian2 with any lambda: chi(g) = lambda_flat(log g), log read off the
      translation column.
    * su2, so3 with lambda = <xi0, [.,.]>: chi(g) = xi0 - Ad*_{g^-1} xi0.
    """
    if lam.instance is not instance:
        raise ValueError("cocycle belongs to a different instance")
    L = instance
    if lam.is_zero:
        return GroupOneCocycle(L, lambda g: np.zeros(np.shape(g)[:-2] + (L.dim,)), "zero")
    if L.name == "abelian2":
        return GroupOneCocycle(L, lambda g: lam.flat(np.asarray(g)[..., :2, 2]), "lambda_flat(log g)")
    if L.name in ("su2", "so3"):
        xi0 = _exact_xi0(lam)
        return GroupOneCocycle(L, lambda g: xi0 - L.coadjoint(g, xi0), "xi0 - Ad*_{g^-1} xi0")
    if L.name == "torus2":
        raise UnsupportedCocycle(
            "torus2: a nonzero cocycle lambda_flat does not integrate to the torus "
            "(pi_1(T^2) = Z^2 obstructs lifting log); use abelian2, its universal cover"
        )
    raise UnsupportedCocycle(f"{L.name}: no closed-form integration of a nonzero cocycle is built in")


def chi_cocycle_residual(chi: GroupOneCocycle, trials: int, seed: int) -> ResidualStats:
    """|chi(gh) - Ad*_{g^-1} chi(h) - chi(g)| on random pairs."""
    L = chi.instance
    res = []
    for t in range(trials):
        rng = trial_rng(seed, "chi-cocycle", t)
        g, h = L.random_group(rng), L.random_group(rng)
        r = chi(g @ h) - L.coadjoint(g, chi(h)) - chi(g)
        res.append(np.abs(r).max())
    return ResidualStats.from_samples(res)


def van_est_residual(chi: GroupOneCocycle, lam: TwoCocycle, trials: int, seed: int, step: float = 1e-5):
    """d/dt chi(exp(tu)) at t = 0 against lambda_flat(u), by central differences."""
    L = chi.instance
    res = []
    for t in range(trials):
        rng = trial_rng(seed, "van-est", t)
        u = L.random_algebra(rng)
        d = (chi(L.group_exp(step * u)) - chi(L.group_exp(-step * u))) / (2 * step)
        res.append(np.abs(d - lam.flat(u)).max())
    return ResidualStats.from_samples(res)


def affine_action_law_residual(chi: GroupOneCocycle, trials: int, seed: int) -> ResidualStats:
    """(gh).xi against g.(h.xi)."""
    L = chi.instance
    res = []
    for t in range(trials):
        rng = trial_rng(seed, "affine-action", t)
        g, h, xi = L.random_group(rng), L.random_group(rng), L.random_algebra(rng)
        r = affine_action(chi, g @ h, xi) - affine_action(chi, g, affine_action(chi, h, xi))
        res.append(np.abs(r).max())
    return ResidualStats.from_samples(res)


def integrate_lemma_residual(chi: GroupOneCocycle, lam: TwoCocycle, trials: int, seed: int) -> ResidualStats:
    """<chi(h), [v1, v2]> - lambda(v1, v2) + lambda(Ad_{h^-1} v1, Ad_{h^-1} v2)."""
    L = chi.instance
    res = []
    for t in range(trials):
        rng = trial_rng(seed, "integrate-lemma", t)
        h = L.random_group(rng)
        v1, v2 = L.random_algebra(rng), L.random_algebra(rng)
        hi = L.inv(h)
        r = (
            L.pair(chi(h), L.bracket(v1, v2))
            - lam(v1, v2)
            + lam(L.adjoint(hi, v1), L.adjoint(hi, v2))
        )
        res.append(r)
    return ResidualStats.from_samples(res)
