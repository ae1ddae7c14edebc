"""Matrix Lie group and Lie algebra kernels for a handful of small instances.

Algebra elements and covectors are coefficient vectors against a fixed basis.
Group elements are plain matrices.  Covectors are identified with algebra
elements through the pairing, so that ``<xi, v> = xi @ P @ v``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

__all__ = [
    "LieInstance",
    "get_instance",
    "INSTANCE_NAMES",
    "PROJ_UNITARY",
    "PROJ_TORUS",
    "PROJ_PATTERN",
]

INSTANCE_NAMES = ("su2", "so3", "torus2", "abelian2", "heisenberg3")

PROJ_UNITARY = 0
PROJ_TORUS = 1
PROJ_PATTERN = 2

_PAULI = np.array(
    [[[0, 1], [1, 0]], [[0, -1j], [1j, 0]], [[1, 0], [0, -1]]], dtype=complex
)


def _realify(m: np.ndarray) -> np.ndarray:
    """Flatten trailing (m, m) matrices into real vectors of length 2 m^2."""
    flat = m.reshape(m.shape[:-2] + (-1,))
    return np.concatenate([flat.real, flat.imag], axis=-1)


@dataclass(frozen=True, eq=False)
class LieInstance:
    """A concrete matrix Lie group with a chosen basis of its Lie algebra.

    Parameters
    ----------
    name : str
        One of ``INSTANCE_NAMES``.
    basis : ndarray, shape (d, m, m)
        Basis matrices of the Lie algebra.
    pairing_matrix : ndarray, shape (d, d)
        Gram matrix of the pairing ``(.,.)`` on the basis.
    proj_kind : int
        How matrices are pushed back onto the group after integration.
    invariant : bool
        Whether the pairing is Ad-invariant.
    """

    name: str
    basis: np.ndarray
    pairing_matrix: np.ndarray
    proj_kind: int
    invariant: bool = True
    free_mask: np.ndarray | None = None
    special: bool = False
    _extract: np.ndarray = field(init=False, repr=False)
    _struct: np.ndarray = field(init=False, repr=False)
    _pinv_pairing: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        d = self.basis.shape[0]
        bm = _realify(self.basis).T  # (2 m^2, d)
        gram = bm.T @ bm
        if np.linalg.matrix_rank(gram) < d:
            raise ValueError(f"{self.name}: basis matrices are linearly dependent")
        object.__setattr__(self, "_basis_real", bm)
        object.__setattr__(self, "_extract", np.linalg.solve(gram, bm.T))
        comm = (
            np.einsum("iab,jbc->ijac", self.basis, self.basis)
            - np.einsum("jab,ibc->ijac", self.basis, self.basis)
        )
        c, res = self._coeffs_with_residual(comm)
        if res > 1e-12:
            raise ValueError(f"{self.name}: basis not closed under the bracket ({res:.2e})")
        object.__setattr__(self, "_struct", c)  # c[i, j, k] = coefficient of e_k in [e_i, e_j]
        object.__setattr__(self, "_pinv_pairing", np.linalg.inv(self.pairing_matrix))
        self.basis.setflags(write=False)
        self.pairing_matrix.setflags(write=False)

    # -- basic data ---------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def mat_size(self) -> int:
        return self.basis.shape[1]

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.basis)

    @property
    def abelian(self) -> bool:
        return not np.any(self._struct)

    @property
    def structure_constants(self) -> np.ndarray:
        return self._struct

    def identity(self) -> np.ndarray:
        return np.eye(self.mat_size, dtype=self.basis.dtype)

    def _check(self, *xs):
        for x in xs:
            if np.shape(x)[-1] != self.dim:
                raise ValueError(
                    f"{self.name}: expected coefficient vectors of length {self.dim}, got shape {np.shape(x)}"
                )

    # -- coordinates --------------------------------------------------------
    def to_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of the algebra element(s) with coefficients ``x``."""
        self._check(x)
        return np.tensordot(x, self.basis, axes=([-1], [0]))

    def _coeffs_with_residual(self, mats):
        r = _realify(np.asarray(mats))
        c = r @ self._extract.T
        res = np.abs(c @ self._basis_real.T - r).max() if r.size else 0.0
        return c, float(res)

    def coeffs(self, mats: np.ndarray, tol: float | None = None) -> np.ndarray:
        """Express matrices in the basis; raise if the residual exceeds ``tol``."""
        c, res = self._coeffs_with_residual(mats)
        if tol is not None and res > tol:
            raise ValueError(f"{self.name}: matrix not in the Lie algebra (residual {res:.2e})")
        return c

    def coeffs_residual(self, mats: np.ndarray) -> tuple[np.ndarray, float]:
        return self._coeffs_with_residual(mats)

    # -- algebra ------------------------------------------------------------
    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        self._check(x, y)
        return np.einsum("...i,...j,ijk->...k", x, y, self._struct)

    def ad_matrix(self, v: np.ndarray) -> np.ndarray:
        """Matrix of ad_v acting on coefficient vectors (column convention)."""
        self._check(v)
        return np.einsum("...i,ijk->...kj", v, self._struct)

    def pair(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """The pairing (x, y); also the dual pairing <xi, v> of a covector and a vector."""
        self._check(x, y)
        return np.einsum("...i,ij,...j->...", x, self.pairing_matrix, y)

    # -- group --------------------------------------------------------------
    def inv(self, g: np.ndarray) -> np.ndarray:
        if self.proj_kind in (PROJ_UNITARY, PROJ_TORUS):
            return np.conj(np.swapaxes(g, -1, -2))
        return np.linalg.inv(g)

    def project(self, g: np.ndarray) -> np.ndarray:
        """Nearest group element (polar or pattern projection)."""
        g = np.asarray(g)
        if self.proj_kind == PROJ_UNITARY:
            u, _, vh = np.linalg.svd(g)
            p = u @ vh
            if self.special:
                det = np.linalg.det(p)
                if self.is_complex:
                    p = p / (det ** (1.0 / self.mat_size))[..., None, None]
                elif np.any(det < 0):
                    raise ValueError(f"{self.name}: projection left the identity component")
            return p.astype(self.basis.dtype, copy=False)
        if self.proj_kind == PROJ_TORUS:
            diag = np.diagonal(g, axis1=-2, axis2=-1)
            diag = diag / np.abs(diag)
            return diag[..., :, None] * np.eye(self.mat_size)
        mask = self.free_mask
        return np.where(mask, g, np.eye(self.mat_size)).astype(self.basis.dtype, copy=False)

    def membership_residual(self, g: np.ndarray) -> float:
        g = np.asarray(g)
        if self.proj_kind == PROJ_UNITARY:
            gh = np.conj(np.swapaxes(g, -1, -2))
            r = np.abs(gh @ g - np.eye(self.mat_size)).max()
            if self.special:
                r = max(r, float(np.abs(np.linalg.det(g) - 1).max()))
            return float(r)
        if self.proj_kind == PROJ_TORUS:
            diag = np.diagonal(g, axis1=-2, axis2=-1)
            off = g - diag[..., :, None] * np.eye(self.mat_size)
            return float(max(np.abs(off).max(), np.abs(np.abs(diag) - 1).max()))
        return float(np.abs(np.where(self.free_mask, 0, g - np.eye(self.mat_size))).max())

    def group_exp(self, x: np.ndarray) -> np.ndarray:
        """Matrix exponential followed by projection onto the group."""
        m = self.to_matrix(x)
        if m.ndim == 2:
            return self.project(expm(m))
        flat = m.reshape((-1,) + m.shape[-2:])
        out = np.stack([expm(a) for a in flat]).reshape(m.shape)
        return self.project(out)

    def Ad_matrix(self, g: np.ndarray) -> np.ndarray:
        """Matrix of Ad_g on coefficient vectors, shape (..., d, d)."""
        gi = self.inv(g)
        conj = np.einsum("...ab,kbc,...cd->...kad", g, self.basis, gi)
        return np.swapaxes(self.coeffs(conj), -1, -2)

    def adjoint(self, g: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Ad_g x = g x g^{-1} in basis coordinates."""
        self._check(x)
        return self.coeffs(g @ self.to_matrix(x) @ self.inv(g))

    def coadjoint(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """Coadjoint action g.xi, defined by <g.xi, v> = <xi, Ad_{g^{-1}} v>."""
        self._check(xi)
        m = self.Ad_matrix(self.inv(g))
        P, Pi = self.pairing_matrix, self._pinv_pairing
        return np.einsum("ij,...kj,kl,...l->...i", Pi, m, P, xi)

    def ad_star(self, v: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """ad*_v xi with <ad*_v xi, w> = <xi, [v, w]>."""
        self._check(v, xi)
        a = self.ad_matrix(v)
        P, Pi = self.pairing_matrix, self._pinv_pairing
        return np.einsum("ij,...kj,kl,...l->...i", Pi, a, P, xi)

    def maurer_cartan_left(self, g: np.ndarray, delta: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """theta(delta) = g^{-1} delta."""
        return self.coeffs(self.inv(g) @ delta, tol=tol)

    def maurer_cartan_right(self, g: np.ndarray, delta: np.ndarray, tol: float = 1e-8) -> np.ndarray:
        """theta_bar(delta) = delta g^{-1}."""
        return self.coeffs(delta @ self.inv(g), tol=tol)

    def cartan3(self, v1: np.ndarray, v2: np.ndarray, v3: np.ndarray) -> np.ndarray:
        """Cartan 3-form on three left-trivialized tangents at a common base point.

        Evaluates (1/12)(theta, [theta, theta]) as 1/2 (v1, [v2, v3]).  Being
        left-invariant, the value does not depend on the base point.
        """
        return 0.5 * self.pair(v1, self.bracket(v2, v3))

    # -- sampling -----------------------------------------------------------
    def random_algebra(self, rng: np.random.Generator, size=None) -> np.ndarray:
        shape = (self.dim,) if size is None else tuple(np.atleast_1d(size)) + (self.dim,)
        return rng.uniform(-1.0, 1.0, shape)

    def random_group(self, rng: np.random.Generator, size=None, scale: float = np.pi) -> np.ndarray:
        return self.group_exp(scale * self.random_algebra(rng, size))


def _su2() -> LieInstance:
    basis = -0.5j * _PAULI
    return LieInstance("su2", basis, np.eye(3), PROJ_UNITARY, special=True)


def _so3() -> LieInstance:
    basis = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                eps = np.linalg.det(np.eye(3)[[i, j, k]])
                basis[i, j, k] = -eps
    return LieInstance("so3", basis, np.eye(3), PROJ_UNITARY, special=True)


def _torus2() -> LieInstance:
    basis = np.zeros((2, 2, 2), dtype=complex)
    basis[0, 0, 0] = 1j
    basis[1, 1, 1] = 1j
    return LieInstance("torus2", basis, np.eye(2), PROJ_TORUS)


def _abelian2() -> LieInstance:
    basis = np.zeros((2, 3, 3))
    basis[0, 0, 2] = 1.0
    basis[1, 1, 2] = 1.0
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 2] = mask[1, 2] = True
    return LieInstance("abelian2", basis, np.eye(2), PROJ_PATTERN, free_mask=mask)


def _heisenberg3() -> LieInstance:
    # X = E12, Y = E23, Z = E13 so that [X, Y] = Z
    basis = np.zeros((3, 3, 3))
    basis[0, 0, 1] = 1.0
    basis[1, 1, 2] = 1.0
    basis[2, 0, 2] = 1.0
    mask = np.triu(np.ones((3, 3), dtype=bool), 1)
    # the coefficient dot product is not Ad-invariant here
    return LieInstance("heisenberg3", basis, np.eye(3), PROJ_PATTERN, invariant=False, free_mask=mask)


_BUILDERS = {
    "su2": _su2,
    "so3": _so3,
    "torus2": _torus2,
    "abelian2": _abelian2,
    "heisenberg3": _heisenberg3,
}
_CACHE: dict[str, LieInstance] = {}


def get_instance(name: str) -> LieInstance:
    """Return the (cached, immutable) instance called ``name``."""
    if name not in _BUILDERS:
        raise ValueError(f"unknown Lie instance {name!r}; choose from {INSTANCE_NAMES}")
    if name not in _CACHE:
        _CACHE[name] = _BUILDERS[name]()
    return _CACHE[name]
