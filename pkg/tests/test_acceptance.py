"""The eleven acceptance criteria, each at its stated tolerance.

Every test prints one line ``PASS criterion N: ...`` or ``FAIL criterion N: ...``;
the lines are repeated in the terminal summary.
"""
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from qgroupoid import cli, finite, loops
from qgroupoid.affine import (
    AffinePoissonStructure,
    TwoCocycle,
    builtin_chi,
    chi_cocycle_residual,
    exact_cocycle,
    integrate_lemma_residual,
    jacobi_residual,
)
from qgroupoid.groupoid import multiplicativity_residual
from qgroupoid.lie import get_instance
from qgroupoid.sampling import trial_rng
from qgroupoid.suites import SuiteConfig, _gamma_sampler, _lam_for

DEFAULT = SuiteConfig(suite="all", group="su2", grid_n=256, trials=100, seed=42)


def verdict(capsys, n: int, ok: bool, text: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    ACCEPTANCE_LINES.append(line)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


@pytest.fixture(scope="module")
def full_run():
    t0 = time.perf_counter()
    records, findings, skipped = cli.run(DEFAULT)
    elapsed = time.perf_counter() - t0
    report = cli.render_report(DEFAULT, records, findings, skipped)
    by = {(r.suite, r.check): r for r in records}
    return {"records": by, "findings": findings, "report": report, "elapsed": elapsed}


def value(r):
    return r.relative_max if r.relative_max is not None else r.max_residual


# 1 ---------------------------------------------------------------------------------


def _lie_jacobi(L, trials, seed):
    worst_ = 0.0
    for t in range(trials):
        r = trial_rng(seed, "acceptance-lie-jacobi", t)
        x, y, z = (L.random_algebra(r) for _ in range(3))
        b = L.bracket
        worst_ = max(worst_, np.abs(b(x, b(y, z)) + b(y, b(z, x)) + b(z, b(x, y))).max())
    return worst_


def test_criterion_01_algebraic_suites(capsys):
    T, seed = 1000, 2024
    t0 = time.perf_counter()
    res = {}
    for name in ("abelian2", "su2"):
        L = get_instance(name)
        lam = _lam_for(L)
        chi = builtin_chi(L, lam)
        G = finite.gamma_groupoid(chi, lam)
        ham = finite.hamiltonian_space_residual(L, T, seed)
        res[name] = max(
            _lie_jacobi(L, T, seed),
            lam.cocycle_residual(),
            jacobi_residual(AffinePoissonStructure(lam), T, seed).max,
            chi_cocycle_residual(chi, T, seed).max,
            integrate_lemma_residual(chi, lam, T, seed).max,
            multiplicativity_residual(G, finite.omega_gamma_form(lam), _gamma_sampler(L, lam, chi), T, seed).max,
            finite.realization_residual(lam, T, seed).max,
            ham["identity"].max,
            ham["equivariance"].max,
        )
    ext = finite.heisenberg_extension()
    red = finite.reduced_form_residual(ext, T, seed)
    pc = finite.pseudo_curvature_residual(ext, T, seed)
    res["heisenberg3"] = max(
        ext.algebra.jacobi_residual(T, seed).max,
        red["reduction"].max,
        red["lambda_isolation"].max,
        pc["partial_theta"].max,
        pc["d_theta"].max,
    )
    elapsed = time.perf_counter() - t0
    ok = all(v < 1e-10 for v in res.values()) and elapsed < 30
    detail = ", ".join(f"{k} {v:.1e}" for k, v in res.items())
    verdict(capsys, 1, ok, f"algebraic identities over {T} trials: {detail}; {elapsed:.1f} s (< 30 s)")


# 2 ---------------------------------------------------------------------------------


def test_criterion_02_negative_controls(capsys):
    L = get_instance("su2")
    lam = exact_cocycle(L, [0.3, -0.7, 0.5])
    m = lam.matrix.copy()
    m[0, 0] += 0.1
    bad = TwoCocycle(L, m, validate=False)
    chi = builtin_chi(L, lam)
    G = finite.gamma_groupoid(chi, lam)
    jac = jacobi_residual(AffinePoissonStructure(bad), 10, 1).max
    mult = multiplicativity_residual(G, finite.omega_gamma_form(bad), _gamma_sampler(L, lam, chi), 10, 1).max
    ok = jac > 1e-3 and mult > 1e-3
    verdict(capsys, 2, ok, f"bumped cocycle: Jacobi {jac:.2e}, multiplicativity {mult:.2e} (both > 1e-3)")


# 3 ---------------------------------------------------------------------------------


def test_criterion_03_holonomy(full_run, capsys):
    rec = full_run["records"]
    const = rec[("loop-basics", "holonomy_constant")].max_residual
    drift = rec[("loop-basics", "membership_drift")].max_residual
    order = rec[("loop-basics", "holonomy_order")].convergence_order
    ok = const < 1e-10 and drift < 1e-12 and (order == "saturated" or order >= 3.5)
    verdict(capsys, 3, ok, f"constant-coefficient {const:.1e} (< 1e-10), drift {drift:.1e} (< 1e-12), "
                           f"order over n=64/128/256 {order if isinstance(order, str) else f'{order:.2f}'} (>= 3.5)")


# 4 ---------------------------------------------------------------------------------


def test_criterion_04_holonomy_lemmas(capsys):
    t0 = time.perf_counter()
    res = loops.lemma_residuals(get_instance("su2"), 100, 42, 256, 4)
    elapsed = time.perf_counter() - t0
    keys = ("equivariance", "inversion", "inversion_action", "inverse_law")
    vals = {k: res[k].relative_max for k in keys}
    ok = all(v < 1e-6 for v in vals.values()) and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in vals.items())
    verdict(capsys, 4, ok, f"100 trials, n=256: {detail} (< 1e-6); {elapsed:.1f} s (< 60 s)")


# 5 ---------------------------------------------------------------------------------


def test_criterion_05_varpi(full_run, capsys):
    rec = full_run["records"]
    inv = value(rec[("varpi", "inv_minus")])
    tan = value(rec[("varpi", "holonomy_tangent_fd")])
    dv = rec[("varpi", "d_varpi")]
    order = dv.convergence_order
    ok = inv < 1e-6 and tan < 1e-6 and dv.max_residual < 1e-4 and isinstance(order, float) and 1.5 <= order <= 2.5
    verdict(capsys, 5, ok, f"inv*varpi=-varpi {inv:.1e}, tangent vs FD {tan:.1e} (< 1e-6); "
                           f"d varpi + Hol*Omega {dv.max_residual:.1e} (< 1e-4), FD order {order:.2f} (1.5 to 2.5)")


# 6 ---------------------------------------------------------------------------------


def test_criterion_06_equivalence(full_run, capsys):
    rec = full_run["records"]
    vals = {k: value(rec[("amm-equivalence", k)]) for k in ("identity", "delta_arrow", "inv_minus")}
    ok = all(v < 1e-6 for v in vals.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in vals.items())
    verdict(capsys, 6, ok, f"su2, n=256, 100 trials, relative: {detail} (< 1e-6)")


# 7 ---------------------------------------------------------------------------------


def test_criterion_07_delta_cocycle(full_run, capsys):
    rec = full_run["records"]
    arrow = value(rec[("delta-cocycle", "arrow")])
    base = rec[("delta-cocycle", "base")].max_residual
    ok = arrow < 1e-6 and base < 1e-4
    verdict(capsys, 7, ok, f"arrow {arrow:.1e} (< 1e-6), base {base:.1e} (< 1e-4)")


# 8 ---------------------------------------------------------------------------------


def test_criterion_08_qham(full_run, capsys):
    rec = full_run["records"]
    a1 = value(rec[("qham", "axiom1")])
    a2 = value(rec[("qham", "axiom2")])
    gen, deg = rec[("qham", "axiom3_generic")], rec[("qham", "axiom3_degenerate")]
    adjudication = [f for f in full_run["findings"] if f.startswith("qham/su2: adjudicated")]
    ok = (a1 < 1e-4 and a2 < 1e-10 and gen.passed and deg.passed
          and gen.trials + deg.trials >= 60 and deg.trials >= 10 and len(adjudication) == 1)
    verdict(capsys, 8, ok, f"axiom1 {a1:.1e} (< 1e-4), axiom2 {a2:.1e} (< 1e-10), axiom3 kernels agree at "
                           f"{gen.trials} generic + {deg.trials} degenerate points; {adjudication[0] if adjudication else 'no adjudication'}")


# 9 ---------------------------------------------------------------------------------


def test_criterion_09_moment(full_run, capsys):
    rec = full_run["records"]
    mom = {k: value(rec[("moment", k)]) for k in ("first", "second", "first_vs_omega")}
    act = {k: value(rec[("moment", k)]) for k in ("action_law", "phi_equivariance")}
    ok = all(v < 1e-6 for v in mom.values()) and all(v < 1e-8 for v in act.values())
    detail = ", ".join(f"{k} {v:.1e}" for k, v in {**mom, **act}.items())
    verdict(capsys, 9, ok, f"{detail} (moment < 1e-6, action and equivariance < 1e-8)")


# 10 --------------------------------------------------------------------------------


def test_criterion_10_morphism(full_run, capsys):
    rec = full_run["records"]
    mor = rec[("amm-equivalence", "f_morphism")].max_residual
    sq = rec[("amm-equivalence", "hol_phi_square")].max_residual
    ok = mor < 1e-8 and sq < 1e-8
    verdict(capsys, 10, ok, f"f vs s, t, m, units {mor:.1e}; Hol o Phi = mu_D o f {sq:.1e} (< 1e-8)")


# 11 --------------------------------------------------------------------------------


def test_criterion_11_determinism(full_run, capsys):
    t0 = time.perf_counter()
    records, findings, skipped = cli.run(DEFAULT)
    elapsed = time.perf_counter() - t0
    again = cli.render_report(DEFAULT, records, findings, skipped)
    same = again == full_run["report"]
    all_pass = all(r.passed for r in records)
    slowest = max(elapsed, full_run["elapsed"])
    ok = same and slowest < 300 and all_pass
    verdict(capsys, 11, ok, f"run(all, su2, n=256, trials=100, seed=42) twice: byte-identical={same}, "
                            f"all checks pass={all_pass}, wall-clock {full_run['elapsed']:.0f} s / {elapsed:.0f} s (< 300 s)")
