import numpy as np
import pytest

from qgroupoid.affine import area_cocycle, builtin_chi, exact_cocycle, zero_cocycle
from qgroupoid.finite import (
    heisenberg_extension,
    hamiltonian_space_residual,
    moment_level_reduction,
    nondegeneracy_margin,
    omega_gamma,
    omega_gamma_chart_fd,
    omega_gamma_matrix,
    pseudo_curvature_residual,
    realization_residual,
    reduced_form_residual,
)
from qgroupoid.lie import get_instance

SU2 = get_instance("su2")
A2 = get_instance("abelian2")
XI0 = np.array([0.3, -0.7, 0.5])
EXT = heisenberg_extension()


def test_omega_gamma_canonical_reduction():
    r = np.random.default_rng(0)
    lam = zero_cocycle(SU2)
    v1, x1, v2, x2 = (SU2.random_algebra(r) for _ in range(4))
    val = omega_gamma(lam, np.zeros(3), (v1, x1), (v2, x2))
    assert abs(val - (x1 @ v2 - x2 @ v1)) < 1e-15


def test_omega_gamma_area_frozen():
    lam = area_cocycle(A2)
    for eta in (np.zeros(2), np.array([5.0, -2.0])):
        val = omega_gamma(lam, eta, (np.array([1.0, 0.0]), np.zeros(2)), (np.array([0.0, 1.0]), np.zeros(2)))
        assert val == -1.0


def test_omega_gamma_matches_chart_fd():
    lam = exact_cocycle(SU2, XI0)
    r = np.random.default_rng(1)
    for _ in range(10):
        g, eta = SU2.random_group(r), SU2.random_algebra(r)
        t1 = (SU2.random_algebra(r), SU2.random_algebra(r))
        t2 = (SU2.random_algebra(r), SU2.random_algebra(r))
        assert abs(omega_gamma_chart_fd(lam, g, eta, t1, t2) - omega_gamma(lam, eta, t1, t2)) < 1e-6


@pytest.mark.parametrize("lam", [exact_cocycle(SU2, XI0), area_cocycle(A2)])
def test_nondegenerate(lam):
    r = np.random.default_rng(2)
    for _ in range(20):
        eta = lam.instance.random_algebra(r)
        W = omega_gamma_matrix(lam, eta)
        assert np.abs(W + W.T).max() == 0.0
        assert nondegeneracy_margin(lam, eta) > 1e-8


def test_realization():
    assert realization_residual(zero_cocycle(SU2), 200, 3).max < 1e-11
    assert realization_residual(exact_cocycle(SU2, XI0), 200, 3).max < 1e-10
    assert realization_residual(area_cocycle(A2), 200, 3).max < 1e-14


@pytest.mark.parametrize("name", ["abelian2", "su2", "so3"])
def test_hamiltonian_space(name):
    res = hamiltonian_space_residual(get_instance(name), 200, 4)
    assert res["identity"].max < 1e-10
    assert res["gradient_fd"].max < 1e-7
    assert res["equivariance"].max < 1e-10


def test_hamiltonian_space_abelian_exact():
    assert hamiltonian_space_residual(A2, 50, 4)["identity"].max == 0.0


def test_extended_algebra():
    assert EXT.algebra.jacobi_residual(500, 5).max < 1e-12
    e = np.eye(3)
    # [(X,0),(Y,0)] = (0, lambda(X, Y)) = (0, 1)
    np.testing.assert_array_equal(EXT.algebra.bracket(e[0], e[1]), e[2])
    np.testing.assert_array_equal(EXT.algebra.bracket(e[0], e[2]), np.zeros(3))


def test_heisenberg_bracket_matches_extension():
    H = EXT.group
    r = np.random.default_rng(6)
    x, y = r.uniform(-1, 1, 3), r.uniform(-1, 1, 3)
    np.testing.assert_allclose(H.bracket(x, y), EXT.algebra.bracket(x, y), atol=1e-15)


def test_projection_homomorphism_and_center():
    H = EXT.group
    r = np.random.default_rng(7)
    g, h = H.random_group(r), H.random_group(r)
    assert np.abs(EXT.p(g @ h) - EXT.p(g) @ EXT.p(h)).max() < 1e-12
    c = EXT.center(1.3)
    v = np.array([0.4, -0.2, 0.0])
    assert np.abs(H.adjoint(c, v) - v).max() < 1e-15


def test_reduced_form():
    res = reduced_form_residual(EXT, 500, 8)
    assert res["reduction"].max < 1e-11
    assert res["center"].max == 0.0
    assert res["lambda_isolation"].max < 1e-12


def test_moment_level_reduction():
    res = moment_level_reduction(EXT, 500, 9)
    assert res["center_invariance"].max == 0.0
    for k in ("affine_action", "chi_extraction"):
        assert res[k].max < 1e-10
    for k in ("homomorphism", "descent"):
        assert res[k].max < 1e-12


def test_pseudo_curvature():
    res = pseudo_curvature_residual(EXT, 500, 10)
    assert res["d_theta"].max < 1e-11
    assert res["partial_theta"].max < 1e-11
    assert res["fiber"].max < 1e-15
    assert res["pushforward_fd"].max < 1e-7
