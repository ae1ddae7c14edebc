"""Discretized loop groups: periodic grids, gauge action, holonomy and its first variation.

Connections A = a(s) ds and loop-algebra elements are stored as (n, d) arrays
of coefficient samples at s_k = k / n; loops as (n, m, m) arrays of group
matrices.  Loop tangents are left-trivialized (n, d) samples.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .lie import PROJ_PATTERN, PROJ_TORUS, PROJ_UNITARY, LieInstance
from .sampling import NumericalFailure, ResidualStats, trial_rng

__all__ = [
    "check_grid",
    "grid_points",
    "TrigPoly",
    "random_trig_poly",
    "DiscreteConnection",
    "DiscreteLoop",
    "random_connection",
    "random_loop_function",
    "sample_loop",
    "derivative",
    "trig_upsample",
    "loop_cocycle",
    "gauge_action",
    "inversion",
    "pullback_loop",
    "loop_mul",
    "loop_inv",
    "holonomy_path",
    "holonomy",
    "holonomy_tangent",
    "transport",
    "Transport",
    "lemma_residuals",
    "PROJECTION_LIMIT",
    "GAUGE_SIGN",
    "BAND_LIMIT",
]

PROJECTION_LIMIT = 1e-6
BAND_LIMIT = 5
# Hol^{-1} dHol/ds = A is equivariant for Ad_g A - (dg) g^{-1}, not for the
# gauge action Ad_g A + (dg) g^{-1} used here.  Holonomy paired with that
# action therefore solves the ODE with -A; this sign is the one under which
# equivariance, the moment map square and the equivalence identity all hold.
GAUGE_SIGN = -1


def check_grid(n: int) -> int:
    n = int(n)
    if n < 32 or n & (n - 1):
        raise ValueError(f"grid size must be a power of two >= 32, got {n}")
    return n


def grid_points(n: int) -> np.ndarray:
    return np.arange(check_grid(n)) / n


# --- band-limited random data ----------------------------------------------


@dataclass(frozen=True)
class TrigPoly:
    """f(s) = c_0 + sum_k a_k cos(2 pi k s) + b_k sin(2 pi k s), vector valued.

    ``cos_c`` and ``sin_c`` have shape (K + 1, d); row 0 of ``sin_c`` is unused.
    """

    cos_c: np.ndarray
    sin_c: np.ndarray

    @property
    def band_limit(self) -> int:
        return self.cos_c.shape[0] - 1

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        k = np.arange(self.cos_c.shape[0])
        ph = 2 * np.pi * np.multiply.outer(s, k)
        return np.cos(ph) @ self.cos_c + np.sin(ph) @ self.sin_c

    def sample(self, n: int) -> np.ndarray:
        return self(grid_points(n))

    def derivative(self) -> "TrigPoly":
        k = 2 * np.pi * np.arange(self.cos_c.shape[0])[:, None]
        return TrigPoly(k * self.sin_c, -k * self.cos_c)


def random_trig_poly(rng, dim: int, band_limit: int = BAND_LIMIT, amplitude: float = 1.0) -> TrigPoly:
    """Coefficients i.i.d. uniform in [-amplitude, amplitude]."""
    c = rng.uniform(-amplitude, amplitude, (band_limit + 1, dim))
    s = rng.uniform(-amplitude, amplitude, (band_limit + 1, dim))
    s[0] = 0.0
    return TrigPoly(c, s)


def random_loop_function(rng, dim: int, band_limit: int = BAND_LIMIT) -> TrigPoly:
    """Exponent X(s) of a random loop exp(X(s)).

    The constant term and the coefficients of dX/ds are uniform in [-1, 1],
    so loop speeds stay O(1) at every band limit.
    """
    d = random_trig_poly(rng, dim, band_limit)
    k = 2 * np.pi * np.arange(1, band_limit + 1)[:, None]
    cos_c = np.vstack([d.cos_c[:1], -d.sin_c[1:] / k])
    sin_c = np.vstack([np.zeros((1, dim)), d.cos_c[1:] / k])
    return TrigPoly(cos_c, sin_c)


@dataclass(frozen=True)
class DiscreteConnection:
    instance: LieInstance
    samples: np.ndarray
    band_limit: int | None = None

    def __post_init__(self):
        check_grid(self.samples.shape[0])
        if self.samples.shape[1:] != (self.instance.dim,):
            raise ValueError("connection samples must have shape (n, dim)")

    @property
    def n(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True)
class DiscreteLoop:
    instance: LieInstance
    samples: np.ndarray

    def __post_init__(self):
        check_grid(self.samples.shape[0])
        r = self.instance.membership_residual(self.samples)
        if r > 1e-10:
            raise ValueError(f"loop samples leave the group (residual {r:.2e})")

    @property
    def n(self) -> int:
        return self.samples.shape[0]


def random_connection(instance: LieInstance, rng, n: int, band_limit: int = BAND_LIMIT):
    """A random connection together with its generating trigonometric polynomial."""
    f = random_trig_poly(rng, instance.dim, band_limit)
    return DiscreteConnection(instance, f.sample(n), band_limit), f


def sample_loop(instance: LieInstance, f: TrigPoly, n: int) -> DiscreteLoop:
    return DiscreteLoop(instance, instance.group_exp(f.sample(n)))


# --- calculus on the grid ---------------------------------------------------


def derivative(x: np.ndarray, method: str = "spectral") -> np.ndarray:
    """d/ds of periodic samples along axis 0.

    ``spectral`` differentiates the trigonometric interpolant (Nyquist mode
    dropped); ``fd4`` is the 4th-order central stencil.
    """
    x = np.asarray(x)
    n = x.shape[0]
    if method == "fd4":
        return (-np.roll(x, -2, 0) + 8 * np.roll(x, -1, 0) - 8 * np.roll(x, 1, 0) + np.roll(x, 2, 0)) * (n / 12.0)
    if method != "spectral":
        raise ValueError(f"unknown derivative method {method!r}")
    k = np.fft.fftfreq(n, 1.0 / n)
    if n % 2 == 0:
        k[n // 2] = 0.0
    k = (2j * np.pi * k).reshape((n,) + (1,) * (x.ndim - 1))
    out = np.fft.ifft(k * np.fft.fft(x, axis=0), axis=0)
    return out.real if np.isrealobj(x) else out


def trig_upsample(x: np.ndarray, factor: int) -> np.ndarray:
    """Trigonometric interpolant of real periodic samples on a grid ``factor`` times finer."""
    n = x.shape[0]
    c = np.fft.rfft(x, axis=0)
    if n % 2 == 0:
        c[n // 2] *= 0.5  # split the Nyquist mode symmetrically
    N = n * factor
    return np.fft.irfft(c, n=N, axis=0) * (N / n)


def loop_cocycle(instance: LieInstance, v: np.ndarray, w: np.ndarray, method: str = "spectral") -> float:
    """Trapezoidal quadrature of the integral of (v, dw/ds) over the circle."""
    if v.shape != w.shape:
        raise ValueError("loop_cocycle: grid mismatch")
    n = v.shape[0]
    return float(instance.pair(v, derivative(w, method)).sum() / n)


def loop_mul(g: DiscreteLoop, h: DiscreteLoop) -> DiscreteLoop:
    return DiscreteLoop(g.instance, g.instance.project(g.samples @ h.samples))


def loop_inv(g: DiscreteLoop) -> DiscreteLoop:
    return DiscreteLoop(g.instance, g.instance.inv(g.samples))


def gauge_action(gamma: DiscreteLoop, A: DiscreteConnection, method: str = "spectral") -> DiscreteConnection:
    """gamma . A = Ad_gamma a + (d gamma / ds) gamma^{-1}, samplewise."""
    L = A.instance
    if gamma.n != A.n:
        raise ValueError("gauge_action: grid mismatch")
    g = gamma.samples
    gi = L.inv(g)
    ad = L.coeffs(g @ L.to_matrix(A.samples) @ gi)
    dg = derivative(g, method)
    drift, res = L.coeffs_residual(dg @ gi)
    if res > 1e-6:
        raise NumericalFailure(f"gauge_action: derivative term leaves the algebra ({res:.2e}); data under-resolved")
    return DiscreteConnection(L, ad + drift, None)


def inversion(A: DiscreteConnection) -> DiscreteConnection:
    """inv(A): sample k -> -a_{(n - k) mod n}."""
    idx = (-np.arange(A.n)) % A.n
    return DiscreteConnection(A.instance, -A.samples[idx], A.band_limit)


def reverse_samples(x: np.ndarray) -> np.ndarray:
    """Sample k -> x_{(n - k) mod n}, the pullback along s -> 1 - s."""
    n = x.shape[0]
    return x[(-np.arange(n)) % n]


def pullback_loop(gamma: DiscreteLoop) -> DiscreteLoop:
    return DiscreteLoop(gamma.instance, reverse_samples(gamma.samples))


# --- holonomy ---------------------------------------------------------------


@numba.njit(cache=True)
def _coeffs(M, extract):
    m = M.shape[0]
    d = extract.shape[0]
    out = np.zeros(d)
    for a in range(d):
        acc = 0.0
        for i in range(m):
            for j in range(m):
                acc += extract[a, i * m + j] * M[i, j].real + extract[a, m * m + i * m + j] * M[i, j].imag
        out[a] = acc
    return out


@numba.njit(cache=True)
def _project(H, kind, free, special, real):
    m = H.shape[0]
    if kind == 0:
        u, s, vh = np.linalg.svd(H)
        P = u @ vh
        if special and not real:
            det = np.linalg.det(P)
            P = P / det ** (1.0 / m)
    elif kind == 1:
        P = np.zeros_like(H)
        for i in range(m):
            P[i, i] = H[i, i] / abs(H[i, i])
    else:
        P = np.zeros_like(H)
        for i in range(m):
            for j in range(m):
                if free[i, j]:
                    P[i, j] = H[i, j]
                elif i == j:
                    P[i, j] = 1.0
    if real:
        for i in range(m):
            for j in range(m):
                P[i, j] = P[i, j].real
    return P


@numba.njit(cache=True)
def _rhs(idx, H, V, a_up, b_up, extract, pairing, kind):
    k = b_up.shape[0]
    d = extract.shape[0]
    dH = H @ a_up[idx]
    if kind == 2:
        Hinv = np.linalg.inv(H)
    else:
        Hinv = H.conj().T
    W = np.zeros((k, d))
    for i in range(k):
        W[i] = _coeffs(H @ b_up[i, idx] @ Hinv, extract)
    dP = np.zeros((k, k))
    for i in range(k):
        pv = pairing @ V[i]
        for j in range(i + 1, k):
            val = 0.5 * (pv @ W[j] - (pairing @ V[j]) @ W[i])
            dP[i, j] = val
            dP[j, i] = -val
    return dH, W, dP


@numba.njit(cache=True)
def _rk4_transport(a_up, b_up, extract, pairing, n, sub, kind, free, special, real, out_H, out_V):
    N = a_up.shape[0]
    m = a_up.shape[1]
    k = b_up.shape[0]
    d = extract.shape[0]
    dt = 1.0 / (n * sub)
    H = np.eye(m, dtype=np.complex128)
    V = np.zeros((k, d))
    P = np.zeros((k, k))
    out_H[0] = H
    for i in range(k):
        out_V[i, 0] = V[i]
    max_corr = 0.0
    for step in range(n * sub):
        i0 = 2 * step
        i1 = i0 + 1
        i2 = (i0 + 2) % N
        h1, w1, p1 = _rhs(i0, H, V, a_up, b_up, extract, pairing, kind)
        h2, w2, p2 = _rhs(i1, H + 0.5 * dt * h1, V + 0.5 * dt * w1, a_up, b_up, extract, pairing, kind)
        h3, w3, p3 = _rhs(i1, H + 0.5 * dt * h2, V + 0.5 * dt * w2, a_up, b_up, extract, pairing, kind)
        h4, w4, p4 = _rhs(i2, H + dt * h3, V + dt * w3, a_up, b_up, extract, pairing, kind)
        Hn = H + (dt / 6.0) * (h1 + 2 * h2 + 2 * h3 + h4)
        V = V + (dt / 6.0) * (w1 + 2 * w2 + 2 * w3 + w4)
        P = P + (dt / 6.0) * (p1 + 2 * p2 + 2 * p3 + p4)
        H = _project(Hn, kind, free, special, real)
        corr = np.abs(H - Hn).max()
        if corr > max_corr:
            max_corr = corr
        if (step + 1) % sub == 0:
            c = (step + 1) // sub
            out_H[c] = H
            for i in range(k):
                out_V[i, c] = V[i]
    return P, max_corr


class Transport(NamedTuple):
    """Holonomy path, first variations and the varpi matrix of a connection.

    ``path[k]`` is Hol_{s_k}; ``V[i, k]`` is the right-trivialized derivative
    of Hol_{s_k} along tangent i; ``varpi[i, j]`` is varpi_A(B_i, B_j).
    """

    path: np.ndarray
    V: np.ndarray
    varpi: np.ndarray
    max_correction: float


def _kernel_kind(L: LieInstance) -> int:
    return {PROJ_UNITARY: 0, PROJ_TORUS: 1, PROJ_PATTERN: 2}[L.proj_kind]


def transport(A: DiscreteConnection, tangents=(), substeps: int = 4, sign: int = 1) -> Transport:
    """Integrate H' = sign * H a(s) with RK4, together with V_i' = sign * Ad_H B_i and the varpi accumulator.

    a and B_i are evaluated between grid points by trigonometric
    interpolation.  Each step is followed by a projection onto the group.
    ``sign = -1`` gives the gauge-compatible holonomy (see ``GAUGE_SIGN``).
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    L = A.instance
    n = A.n
    tangents = sign * np.asarray(tangents, dtype=float).reshape((-1, n, L.dim))
    factor = 2 * substeps
    basis = L.basis.astype(np.complex128)
    a_up = np.ascontiguousarray(np.tensordot(trig_upsample(sign * A.samples, factor), basis, axes=([1], [0])))
    if tangents.shape[0]:
        b_up = trig_upsample(np.moveaxis(tangents, 1, 0), factor)  # (N, k, d)
        b_up = np.ascontiguousarray(np.moveaxis(np.tensordot(b_up, basis, axes=([2], [0])), 1, 0))
    else:
        b_up = np.zeros((0, n * factor, L.mat_size, L.mat_size), dtype=np.complex128)
    k = tangents.shape[0]
    out_H = np.empty((n + 1, L.mat_size, L.mat_size), dtype=np.complex128)
    out_V = np.empty((k, n + 1, L.dim))
    free = L.free_mask if L.free_mask is not None else np.zeros((L.mat_size, L.mat_size), dtype=bool)
    P, corr = _rk4_transport(
        a_up, b_up, np.ascontiguousarray(L._extract), np.ascontiguousarray(L.pairing_matrix, dtype=float),
        n, substeps, _kernel_kind(L), free, L.special, not L.is_complex, out_H, out_V,
    )
    if corr > PROJECTION_LIMIT:
        raise NumericalFailure(f"holonomy: projection correction {corr:.2e} exceeds {PROJECTION_LIMIT:g}; step too large")
    path = out_H if L.is_complex else out_H.real.copy()
    return Transport(path, out_V, P, float(corr))


def holonomy_path(A: DiscreteConnection, substeps: int = 4, sign: int = 1) -> np.ndarray:
    """Hol_{s_k}(A) for k = 0..n, shape (n + 1, m, m), solving Hol^{-1} dHol/ds = sign * a."""
    return transport(A, (), substeps, sign).path


def holonomy(A: DiscreteConnection, substeps: int = 4, sign: int = 1) -> np.ndarray:
    return holonomy_path(A, substeps, sign)[-1]


def holonomy_tangent(A: DiscreteConnection, B: np.ndarray, substeps: int = 4, sign: int = 1) -> np.ndarray:
    """V_{s_k} = sign * int_0^{s_k} Ad_{Hol_u} B(u) du for k = 0..n, shape (n + 1, d).

    This is the right-trivialized derivative of Hol_{s_k} along B.  It is
    integrated by the same RK4 stages as the holonomy (4th order) rather
    than by a cumulative trapezoid.
    """
    return transport(A, [B], substeps, sign).V[0]


# --- lemma residuals --------------------------------------------------------


def _rel(diff, ref):
    return float(np.abs(diff).max()), float(max(np.abs(ref).max(), 1e-300))


def lemma_residuals(instance: LieInstance, trials: int, seed: int, n: int = 256, substeps: int = 4,
                    method: str = "spectral", band_limit: int = BAND_LIMIT):
    """Residuals of the holonomy lemmas on random band-limited data.

    Keys: ``equivariance`` Hol(gamma.A) = Ad_{gamma(0)} Hol(A) for the
    gauge-compatible holonomy (sign ``GAUGE_SIGN``); ``equivariance_literal``
    the same with Hol^{-1} dHol/ds = +A, reported for information only, as it
    fails at O(1); ``inversion`` Hol_s(inv A) = Hol_1(A)^{-1} Hol_{1-s}(A) on
    the grid; ``inversion_action`` gamma.inv(A) = inv((I*gamma).A);
    ``inverse_law`` gamma^{-1}.(gamma.A) = A.  Values are ResidualStats with
    relative maxima.
    """
    L = instance
    keys = ("equivariance", "equivariance_literal", "inversion", "inversion_action", "inverse_law")
    out = {k: ([], []) for k in keys}

    def put(key, diff, ref):
        a, b = _rel(diff, ref)
        out[key][0].append(a)
        out[key][1].append(b)

    for t in range(trials):
        rng = trial_rng(seed, "holonomy-lemmas", t)
        A, _ = random_connection(L, rng, n, band_limit)
        gamma = sample_loop(L, random_loop_function(rng, L.dim, band_limit), n)
        gA = gauge_action(gamma, A, method)
        g0 = gamma.samples[0]
        for key, sign in (("equivariance", GAUGE_SIGN), ("equivariance_literal", 1)):
            ref = g0 @ holonomy(A, substeps, sign) @ L.inv(g0)
            put(key, holonomy(gA, substeps, sign) - ref, ref)
        path = holonomy_path(A, substeps)
        ref = L.inv(path[-1]) @ path[::-1]
        put("inversion", holonomy_path(inversion(A), substeps) - ref, ref)
        lhs = gauge_action(gamma, inversion(A), method).samples
        rhs = inversion(gauge_action(pullback_loop(gamma), A, method)).samples
        put("inversion_action", lhs - rhs, rhs)
        back = gauge_action(loop_inv(gamma), gA, method).samples
        put("inverse_law", back - A.samples, A.samples)
    return {k: ResidualStats.from_samples(v[0], v[1]) for k, v in out.items()}
