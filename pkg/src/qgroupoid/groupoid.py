"""Action groupoids G x M => M, their nerves, and differentials of forms on them.

A point of the nerve level p is stored in reduced coordinates

    NervePoint(arrows=(g_1, ..., g_p), base=x)

meaning the composable chain (g_1, g_2...g_p.x), ..., (g_p, x): ``base`` is the
source of the last arrow.  Tangents are ``NerveTangent(vs=(v_1, ..., v_p), xi)``
with each v_i left-trivialized at g_i and xi a tangent to M at x.  Face maps and
their tangent pushforwards are closed-form in these coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, NamedTuple, Sequence

import numpy as np

from .sampling import ResidualStats, trial_rng

__all__ = [
    "ActionGroupoid",
    "NervePoint",
    "NerveTangent",
    "EvaluatedForm",
    "simplicial_partial",
    "exterior_d_flat",
    "multiplicativity_residual",
    "groupoid_axioms_residual",
    "alternation_residual",
    "DEFAULT_FD_STEP",
]

DEFAULT_FD_STEP = 1e-4


class NervePoint(NamedTuple):
    arrows: tuple
    base: Any

    @property
    def level(self) -> int:
        return len(self.arrows)


class NerveTangent(NamedTuple):
    vs: tuple
    xi: Any


@dataclass(frozen=True)
class ActionGroupoid:
    """Action groupoid of a group acting on a base space.

    ``act_tangent(g, x, v, xi)`` must return d/dt (g exp(tv)) . (x + t xi) at
    t = 0, in whatever tangent model the base uses; ``Ad(g, v)`` is the adjoint
    action on left-trivialized group tangents.
    """

    name: str
    mul: Callable
    inv: Callable
    identity: Callable
    Ad: Callable
    act: Callable
    act_tangent: Callable
    base_flat: bool = True

    # structure maps on arrows (g, x): x -> g.x
    def source(self, arrow):
        return arrow[1]

    def target(self, arrow):
        g, x = arrow
        return self.act(g, x)

    def compose(self, a1, a2):
        """m((g, x), (h, y)) = (gh, y), defined when x = h.y."""
        return (self.mul(a1[0], a2[0]), a2[1])

    def inverse(self, arrow):
        g, x = arrow
        return (self.inv(g), self.act(g, x))

    def unit(self, x):
        return (self.identity(), x)

    # nerve ------------------------------------------------------------------
    def face(self, i: int, point: NervePoint, tangent: NerveTangent | None = None):
        """The i-th face map of the nerve and its tangent pushforward."""
        p = point.level
        if not 0 <= i <= p or p == 0:
            raise ValueError(f"face {i} undefined at level {p}")
        gs, x = list(point.arrows), point.base
        vs = None if tangent is None else list(tangent.vs)
        xi = None if tangent is None else tangent.xi
        if i == 0:
            new_pt = NervePoint(tuple(gs[1:]), x)
            new_t = None if tangent is None else NerveTangent(tuple(vs[1:]), xi)
        elif i < p:
            g, h = gs[i - 1], gs[i]
            merged = self.mul(g, h)
            new_pt = NervePoint(tuple(gs[: i - 1] + [merged] + gs[i + 1 :]), x)
            if tangent is None:
                new_t = None
            else:
                # d/dt g e^{tv} h e^{tw} = gh exp(t(Ad_{h^-1} v + w))
                w = self.Ad(self.inv(h), vs[i - 1]) + vs[i]
                new_t = NerveTangent(tuple(vs[: i - 1] + [w] + vs[i + 1 :]), xi)
        else:
            g = gs[-1]
            new_pt = NervePoint(tuple(gs[:-1]), self.act(g, x))
            new_t = None if tangent is None else NerveTangent(
                tuple(vs[:-1]), self.act_tangent(g, x, vs[-1], xi)
            )
        return new_pt, new_t

    def composable(self, arrows: Sequence, base) -> NervePoint:
        return NervePoint(tuple(arrows), base)


@dataclass(frozen=True)
class EvaluatedForm:
    """A q-form on the nerve level p, given pointwise.

    ``evaluator(point, tangents)`` receives a NervePoint (or a bare base point
    when p = 0) and a list of q tangents.  ``flat`` marks level-0 forms on a
    vector-space base, the only ones ``exterior_d_flat`` accepts.
    """

    degree: int
    level: int
    evaluator: Callable
    flat: bool = False

    def __call__(self, point, *tangents):
        if len(tangents) != self.degree:
            raise ValueError(f"form of degree {self.degree} given {len(tangents)} tangents")
        return self.evaluator(point, list(tangents))


def simplicial_partial(groupoid: ActionGroupoid, phi: EvaluatedForm) -> EvaluatedForm:
    """The simplicial differential sum_i (-1)^i d_i^* phi, one level up."""
    p = phi.level + 1

    def ev(point, tangents):
        pt = point if isinstance(point, NervePoint) else NervePoint((), point)
        if pt.level != p:
            raise ValueError(f"expected a point of nerve level {p}, got level {pt.level}")
        tangents = [t if isinstance(t, NerveTangent) else NerveTangent((), t) for t in tangents]
        total = 0.0
        for i in range(p + 1):
            faces = [groupoid.face(i, pt, t) for t in tangents]
            fpt = groupoid.face(i, pt)[0]
            arg = fpt if phi.level > 0 else fpt.base
            ts = [f[1] if phi.level > 0 else f[1].xi for f in faces]
            total += (-1) ** i * phi.evaluator(arg, ts)
        return total

    return EvaluatedForm(phi.degree, p, ev)


def exterior_d_flat(phi: EvaluatedForm, step: float = DEFAULT_FD_STEP) -> EvaluatedForm:
    """Exterior derivative along a flat base by central differences.

    With constant-coefficient extensions of the tangents all brackets vanish:
    d phi(X_0..X_q) = sum_i (-1)^i D_{X_i} phi(X_0..^X_i..X_q).
    """
    if not phi.flat or phi.level != 0:
        raise ValueError(
            "exterior_d_flat only differentiates level-0 forms on a flat base; "
            "group factors need their exact formulas"
        )

    def ev(x, tangents):
        total = 0.0
        for i, X in enumerate(tangents):
            rest = tangents[:i] + tangents[i + 1 :]
            fp = phi.evaluator(x + step * X, rest)
            fm = phi.evaluator(x - step * X, rest)
            total += (-1) ** i * (fp - fm) / (2 * step)
        return total

    return EvaluatedForm(phi.degree + 1, 0, ev, flat=True)


def alternation_residual(form: EvaluatedForm, point, tangents, scalars=(0.7, -1.3)) -> float:
    """Antisymmetry under swapping the first two slots plus linearity in the first."""
    val = form(point, *tangents)
    swapped = list(tangents)
    if len(tangents) >= 2:
        swapped[0], swapped[1] = swapped[1], swapped[0]
    r = abs(val + form(point, *swapped)) if len(tangents) >= 2 else 0.0
    a, b = scalars
    t0, t1 = tangents[0], tangents[-1]

    def comb(x, y):
        if isinstance(x, NerveTangent):
            return NerveTangent(tuple(a * p + b * q for p, q in zip(x.vs, y.vs)), a * x.xi + b * y.xi)
        return a * x + b * y

    lin = form(point, comb(t0, t1), *tangents[1:])
    lin_ref = a * val + b * form(point, t1, *tangents[1:])
    return float(max(r, abs(lin - lin_ref)))


def multiplicativity_residual(
    groupoid: ActionGroupoid,
    omega: EvaluatedForm,
    sampler: Callable,
    trials: int,
    seed: int,
    tag: str = "multiplicativity",
) -> ResidualStats:
    """max |pr1*omega + pr2*omega - m*omega| over random composable pairs.

    ``sampler(rng)`` returns (point, tangent1, tangent2) at nerve level 2.
    """
    if omega.degree != 2 or omega.level != 1:
        raise ValueError("multiplicativity is defined for 2-forms on arrows")
    d_omega = simplicial_partial(groupoid, omega)
    res, scale = [], []
    for t in range(trials):
        pt, t1, t2 = sampler(trial_rng(seed, tag, t))
        res.append(d_omega(pt, t1, t2))
        terms = [omega(groupoid.face(i, pt)[0], groupoid.face(i, pt, t1)[1], groupoid.face(i, pt, t2)[1]) for i in range(3)]
        scale.append(max(1.0, max(abs(x) for x in terms)))
    return ResidualStats.from_samples(res, scale)


def groupoid_axioms_residual(
    groupoid: ActionGroupoid,
    sampler: Callable,
    distance: Callable,
    trials: int,
    seed: int,
) -> ResidualStats:
    """Source/target of products, associativity, units and inverses.

    ``sampler(rng)`` returns (g, h, k, x) and ``distance(a, b)`` compares two
    objects of the same kind (group elements or base points).
    """
    G = groupoid
    res = []
    for t in range(trials):
        g, h, k, x = sampler(trial_rng(seed, "groupoid-axioms", t))
        a3 = (k, x)
        a2 = (h, G.target(a3))
        a1 = (g, G.target(a2))
        m12 = G.compose(a1, a2)
        r = [
            distance(G.source(m12), G.source(a2)),
            distance(G.target(m12), G.target(a1)),
        ]
        left = G.compose(m12, a3)
        right = G.compose(a1, G.compose(a2, a3))
        r.append(distance(left[0], right[0]))
        r.append(distance(left[1], right[1]))
        u = G.compose(G.unit(G.target(a1)), a1)
        r.append(distance(u[0], a1[0]))
        u = G.compose(a1, G.unit(G.source(a1)))
        r.append(distance(u[0], a1[0]))
        inv = G.inverse(a1)
        r.append(distance(G.compose(inv, a1)[0], G.identity()))
        r.append(distance(G.compose(a1, inv)[0], G.identity()))
        r.append(distance(G.target(inv), G.source(a1)))
        res.append(max(r))
    return ResidualStats.from_samples(res)
