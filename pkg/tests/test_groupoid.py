import numpy as np
import pytest

from qgroupoid.affine import builtin_chi, exact_cocycle, zero_cocycle
from qgroupoid.finite import gamma_groupoid, omega_gamma, omega_gamma_form
from qgroupoid.groupoid import (
    EvaluatedForm,
    NervePoint,
    NerveTangent,
    alternation_residual,
    exterior_d_flat,
    groupoid_axioms_residual,
    multiplicativity_residual,
    simplicial_partial,
)
from qgroupoid.lie import get_instance

SU2 = get_instance("su2")
XI0 = np.array([0.3, -0.7, 0.5])
LAM = exact_cocycle(SU2, XI0)
G = gamma_groupoid(builtin_chi(SU2, LAM), LAM)


def dist(a, b):
    return float(np.abs(a - b).max())


def axiom_sampler(rng):
    return SU2.random_group(rng), SU2.random_group(rng), SU2.random_group(rng), SU2.random_algebra(rng)


def level2_sampler(rng):
    g, h, x = SU2.random_group(rng), SU2.random_group(rng), SU2.random_algebra(rng)
    ts = [NerveTangent((SU2.random_algebra(rng), SU2.random_algebra(rng)), SU2.random_algebra(rng)) for _ in range(2)]
    return NervePoint((g, h), x), ts[0], ts[1]


def test_groupoid_axioms_many_tuples():
    assert groupoid_axioms_residual(G, axiom_sampler, dist, 10_000, 5).max < 1e-12


def test_constant_function_partial_zero():
    f = EvaluatedForm(0, 0, lambda x, ts: 3.25)
    df = simplicial_partial(G, f)
    r = np.random.default_rng(0)
    assert df(NervePoint((SU2.random_group(r),), SU2.random_algebra(r))) == 0.0


def test_partial_squared_zero():
    r = np.random.default_rng(1)
    M = r.standard_normal((3, 3))
    c = r.standard_normal(3)
    # random 0-form and 1-form on the base, and a 1-form on arrows
    f = EvaluatedForm(0, 0, lambda x, ts: float(np.sin(x @ c) + x @ M @ x))
    a = EvaluatedForm(1, 0, lambda x, ts: float((M @ x + np.cos(x)) @ ts[0]))

    def arrow_form(pt, ts):
        g = pt.arrows[0]
        (t,) = ts
        return float(np.real(np.trace(g @ M[:2, :2])) * (c @ t.vs[0]) + (pt.base @ M) @ t.xi)

    b = EvaluatedForm(1, 1, arrow_form)
    for k in range(20):
        gs = [SU2.random_group(r) for _ in range(3)]
        x = SU2.random_algebra(r)
        p2 = NervePoint(tuple(gs[:2]), x)
        t2 = NerveTangent(tuple(SU2.random_algebra(r) for _ in range(2)), SU2.random_algebra(r))
        assert abs(simplicial_partial(G, simplicial_partial(G, f))(p2)) < 1e-10
        assert abs(simplicial_partial(G, simplicial_partial(G, a))(p2, t2)) < 1e-10
        p3 = NervePoint(tuple(gs), x)
        t3 = NerveTangent(tuple(SU2.random_algebra(r) for _ in range(3)), SU2.random_algebra(r))
        assert abs(simplicial_partial(G, simplicial_partial(G, b))(p3, t3)) < 1e-10


def test_face_pushforwards_match_fd():
    r = np.random.default_rng(2)
    h = 1e-5
    for _ in range(10):
        pt, tan, _ = level2_sampler(r)
        g, k = pt.arrows
        v, w = tan.vs
        for i in range(3):
            _, ft = G.face(i, pt, tan)

            def moved(s):
                q = NervePoint((g @ SU2.group_exp(s * v), k @ SU2.group_exp(s * w)), pt.base + s * tan.xi)
                return G.face(i, q)[0]

            p_plus, p_minus, p0 = moved(h), moved(-h), G.face(i, pt)[0]
            fd_base = (p_plus.base - p_minus.base) / (2 * h)
            assert np.abs(fd_base - ft.xi).max() < 1e-7
            g0 = p0.arrows[0]
            fd_arrow = SU2.maurer_cartan_left(g0, (p_plus.arrows[0] - p_minus.arrows[0]) / (2 * h), tol=1e-6)
            assert np.abs(fd_arrow - ft.vs[0]).max() < 1e-7


def test_exterior_d_constant_one_form():
    u = np.array([0.2, -1.0, 0.5])
    a = EvaluatedForm(1, 0, lambda x, ts: float(u @ ts[0]), flat=True)
    da = exterior_d_flat(a)
    r = np.random.default_rng(3)
    assert abs(da(r.standard_normal(3), r.standard_normal(3), r.standard_normal(3))) < 1e-9


def test_exterior_d_quadratic_gradient():
    r = np.random.default_rng(4)
    u, v, xi, X = (r.standard_normal(3) for _ in range(4))
    f = EvaluatedForm(0, 0, lambda x, ts: float((x @ u) * (x @ v)), flat=True)
    df = exterior_d_flat(f)
    assert abs(df(xi, X) - ((X @ u) * (xi @ v) + (xi @ u) * (X @ v))) < 1e-9


def test_d_squared_is_second_order():
    def ev(x, ts):
        return float(np.sin(x[0] * x[1]) * ts[0][0] + np.exp(0.3 * x[2]) * x[0] * ts[0][1] + np.cos(x @ x) * ts[0][2])

    a = EvaluatedForm(1, 0, ev, flat=True)
    r = np.random.default_rng(5)
    x, X, Y, Z = (r.standard_normal(3) for _ in range(4))
    errs = [abs(exterior_d_flat(exterior_d_flat(a, h), h)(x, X, Y, Z)) for h in (1e-2, 5e-3)]
    assert errs[1] < 1e-4
    assert 3.0 < errs[0] / errs[1] < 5.0


def test_exterior_d_rejects_curved():
    with pytest.raises(ValueError):
        exterior_d_flat(omega_gamma_form(LAM))


def test_multiplicativity_canonical_and_exact():
    zero = zero_cocycle(SU2)
    G0 = gamma_groupoid(builtin_chi(SU2, zero), zero)
    assert multiplicativity_residual(G0, omega_gamma_form(zero), level2_sampler, 300, 1).max < 1e-11
    assert multiplicativity_residual(G, omega_gamma_form(LAM), level2_sampler, 300, 1).max < 1e-10


def test_multiplicativity_negative_control():
    # lambda term dropped from omega while the groupoid still uses chi
    broken = omega_gamma_form(zero_cocycle(SU2))
    assert multiplicativity_residual(G, broken, level2_sampler, 20, 1).max > 1e-3


def test_alternation():
    r = np.random.default_rng(6)
    pt, t1, t2 = level2_sampler(r)
    one = NervePoint(pt.arrows[:1], pt.base)
    ta, tb = (NerveTangent(t.vs[:1], t.xi) for t in (t1, t2))
    assert alternation_residual(omega_gamma_form(LAM), one, [ta, tb]) < 1e-14


def test_form_degree_enforced():
    with pytest.raises(ValueError):
        omega_gamma_form(LAM)(NervePoint((SU2.identity(),), np.zeros(3)), None)


def test_omega_gamma_value():
    r = np.random.default_rng(7)
    eta = r.standard_normal(3)
    t1 = (SU2.random_algebra(r), SU2.random_algebra(r))
    t2 = (SU2.random_algebra(r), SU2.random_algebra(r))
    val = omega_gamma(LAM, eta, t1, t2)
    assert abs(val + omega_gamma(LAM, eta, t2, t1)) < 1e-15
