"""Acceptance criteria 1-8, one PASS/FAIL line each.

Lines are collected while the tests run and printed in the terminal summary
(and directly when this file is executed as a script).  Sub-items that fail
for a documented reason are reported as such rather than loosened.
"""

import time

import numpy as np
import pytest

from symcalabi import conventions
from symcalabi import exterior as ext
from symcalabi import stable3
from symcalabi import verify
from symcalabi.config import manufactured_phi
from symcalabi.equation import (
    diagnose,
    expansion_oracle,
    forward_F,
    intrinsic_ratio,
    local_poly,
    normalize_F,
    residual,
    standard_omega,
    zero_rhs,
)
from symcalabi.fields import FormField, Grid, random_field
from symcalabi.solver import SolveOptions, jvp, solve

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # executed outside pytest
    ACCEPTANCE_LINES = {}

G4 = Grid.with_active(8, (1, 2, 3, 4))


def report(n, ok, summary, seconds, items=()):
    lines = [f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {summary} ({seconds:.1f}s)"]
    lines += [f"        {'ok  ' if good else 'MISS'} {text}" for good, text in items]
    ACCEPTANCE_LINES[n] = lines
    print("\n".join(lines))
    return ok


def test_criterion_1_algebraic_core():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    rng = np.random.default_rng(1)
    d = {
        "anticommutativity": verify.anticommutativity(frame, rng),
        "antiderivation": verify.antiderivation(frame, rng),
        "star involution": verify.star_involution(frame, rng),
        "defining relation": verify.star_defining_relation(frame),
    }
    dt = time.perf_counter() - t
    items = [(v <= 1e-12, f"{k}: defect {v:.2e} <= 1e-12") for k, v in d.items()]
    items.append((dt < 10, f"runtime {dt:.1f}s < 10s"))
    ok = all(g for g, _ in items)
    assert report(1, ok, "wedge/interior/star identities on 10^4 random cases", dt, items)


def test_criterion_2_hitchin_suite():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    rng = np.random.default_rng(2)
    j2, k2 = verify.hitchin_identities(frame, rng, n=1000)
    lam0 = float(stable3.analyze(ext.basis_form(1, 2, 3), frame).lam)
    r, s = ext.holomorphic_volume()
    a = stable3.analyze(r, frame)
    Jstd = conventions.standard_J()
    dt = time.perf_counter() - t
    items = [
        (j2 <= 1e-8, f"J^2 = -Id on 1000 forms: defect {j2:.2e}"),
        (k2 <= 1e-8, f"K^2 = lambda Id (relative): defect {k2:.2e}"),
        (lam0 == 0.0, f"lambda(e123) = {lam0}"),
        (np.max(np.abs(a.J - Jstd)) <= 1e-12 and np.allclose(Jstd @ np.eye(6)[0], np.eye(6)[1]),
         "J(Re dz123) is the standard structure, J e1 = e2"),
        (np.max(np.abs(a.dual - s.coeffs)) <= 1e-12, "dual(Re dz123) = +Im dz123"),
        (dt < 10, f"runtime {dt:.1f}s < 10s"),
    ]
    ok = all(g for g, _ in items)
    assert report(2, ok, "Hitchin invariants and the standard structure", dt, items)


def test_criterion_3_calculus_suite():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    d = verify.calculus_identities(frame, np.random.default_rng(3), grid=G4)
    dt = time.perf_counter() - t
    names = {"d2": "d^2 = 0", "ds2": "(d^s)^2 = 0", "anticomm": "d d^s + d^s d = 0"}
    items = [(v <= 1e-10, f"{names[k]}: relative defect {v:.2e}") for k, v in d.items()]
    items.append((dt < 30, f"runtime {dt:.1f}s < 30s"))
    ok = all(g for g, _ in items)
    assert report(3, ok, "calculus identities on the 4096-point grid", dt, items)


def test_criterion_4_example():
    t = time.perf_counter()
    a, b = conventions.example_dds_factor()
    c_om = conventions.c_omega()
    var = verify.c_omega_constancy()
    dt = time.perf_counter() - t
    items = [
        (abs(a + b) <= 1e-12, f"dd^s(phi sigma) = {a:g} rho and dd^s(phi rho) = {b:g} sigma, exactly opposite"),
        (abs(a - 3) <= 1e-12 and abs(b + 3) <= 1e-12,
         f"stated factors 3 and -3 (measured {a:g} and {b:g}; factor 3 holds for phi = sum|z|^2 / 2)"),
        (var <= 1e-12, f"dd^c phi = c_omega omega with c_omega = {c_om:g}, variation {var:.1e}"),
    ]
    ok = all(g for g, _ in items)
    assert report(4, ok, "closed-form example under the analytic backend", dt, items)


def test_criterion_5_expansion_oracle():
    t = time.perf_counter()
    rep = expansion_oracle(samples=100, seed=5)
    L_id = float(intrinsic_ratio(np.eye(6)) - 1.0 - rep.kappa * local_poly(np.eye(6)))
    Q_id = float(rep.kappa * local_poly(np.eye(6)))
    dt = time.perf_counter() - t
    p = rep.pinned
    items = [
        (rep.taylor_defect <= 1e-10, f"1 + L + Q decomposition: Taylor defect {rep.taylor_defect:.1e} over 100 Hessians"),
        (rep.linear_is_trace_multiple, f"L(H) = {rep.trace_coefficient:.12g} tr(H)"),
        (abs(p["L_2I"] - 6) <= 1e-9,
         f"pinned L(2 Id) = 6 (measured {p['L_2I']:.12g}; L(Id) = {L_id:.12g}, the half-normalized potential)"),
        (abs(p["Q_2I"] - 9) <= 1e-9,
         f"pinned Q(2 Id) = 9 (measured {p['Q_2I']:.12g}; Q(Id) = {Q_id:.12g}, the half-normalized potential)"),
        (rep.kappa_fit_residual <= 1e-8, f"kappa = {rep.kappa:.12g}, fit residual {rep.kappa_fit_residual:.1e}"),
        (True, f"candidate kappa = 1/16 {'confirmed' if rep.kappa_candidate_confirmed else 'refuted'} by the oracle"),
        (rep.shifted_fit_residual <= 1e-10,
         f"ratio(H) = kappa local_poly(H + {rep.shift:.6g} Id), residual {rep.shifted_fit_residual:.1e}"),
    ]
    ok = all(g for g, _ in items)
    assert report(5, ok, "intrinsic expansion vs the coordinate polynomial", dt, items)


def test_criterion_6_conservation():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    Om = standard_omega(G4)
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(20):
        phi = random_field(G4, 0, rng, amplitude=0.05)
        worst = max(worst, diagnose(phi, zero_rhs(G4), frame, Om, with_ricci=False).volume_conservation_defect)
    dt = time.perf_counter() - t
    ok = worst <= 1e-10
    assert report(6, ok, f"volume conservation over 20 random phi: worst defect {worst:.1e} <= 1e-10", dt)


def test_criterion_7_solver():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    Om = standard_omega(G4)
    phi_star = manufactured_phi(G4)
    rhs = normalize_F(forward_F(phi_star, frame, Om))
    rep = solve(rhs, frame, Om, SolveOptions(with_ricci=False))
    err = float(np.max(np.abs(rep.phi.values - (phi_star.values - phi_star.values.mean()))))
    dt_solve = time.perf_counter() - t

    rng = np.random.default_rng(7)
    phi = random_field(G4, 0, rng, amplitude=0.05)
    psi = random_field(G4, 0, rng)
    h = 1e-5
    fd = (residual(phi + psi * h, rhs, frame, Om).values - residual(phi + psi * (-h), rhs, frame, Om).values) / (2 * h)
    J = jvp(phi, psi, rhs, frame, Om).values
    jerr = float(np.max(np.abs(fd - J)) / np.max(np.abs(J)))
    dt = time.perf_counter() - t
    items = [
        (rep.converged, f"converged: {rep.converged}"),
        (err <= 1e-6, f"max-norm error {err:.1e} <= 1e-6"),
        (rep.residual_history[-1] <= 1e-9, f"final residual {rep.residual_history[-1]:.1e} <= 1e-9"),
        (rep.iterations <= 12, f"Newton iterations {rep.iterations} <= 12"),
        (dt_solve < 300, f"solve runtime {dt_solve:.1f}s < 300s"),
        (jerr <= 1e-6, f"jvp vs central differences: relative {jerr:.1e} <= 1e-6"),
    ]
    ok = all(g for g, _ in items)
    assert report(7, ok, "manufactured solution on the 8^4 grid", dt, items)


def _fit_defect(eps, q):
    """Relative defect of the least-squares fit q ≈ a ε + b ε²."""
    V = np.stack([eps, eps**2], axis=1)
    coef, *_ = np.linalg.lstsq(V, q, rcond=None)
    return float(np.max(np.abs(V @ coef - q)) / np.max(np.abs(q))), coef


def test_criterion_8_conjecture_probes():
    t = time.perf_counter()
    frame = ext.SymplecticFrame.standard()
    g = Grid.with_active(16, (1, 2))
    Om = standard_omega(g)
    x1 = np.broadcast_to(g.coords()[0], g.sizes)
    base = diagnose(FormField.zeros(g), zero_rhs(g), frame, Om)
    eps = np.array([0.005, 0.01, 0.02])
    probes = {"duality_worst": [], "ricci_norm": [], "positivity_defect": []}
    finite = True
    verdicts = []
    for e in eps:
        rep = solve(normalize_F(FormField.scalar(g, e * np.cos(x1))), frame, Om)
        d = rep.diagnostics
        verdicts.append((d.positivity_worst["verdict"], d.negativity_worst["verdict"]))
        vals = [d.duality_worst, d.ricci_norm, d.positivity_worst["min_eig"], d.residual_norm]
        finite &= rep.converged and all(v is not None and np.isfinite(v) for v in vals)
        probes["duality_worst"].append(d.duality_worst)
        probes["ricci_norm"].append(d.ricci_norm)
        probes["positivity_defect"].append(1.0 - d.positivity_worst["min_eig"])
    dt = time.perf_counter() - t

    zero = (base.residual_norm == 0 and base.duality_worst == 0 and base.ricci_norm == 0
            and base.positivity_worst["min_eig"] == 1.0 and base.volume_conservation_defect == 0)
    items = [
        (finite, "all entries finite for eps in {0.005, 0.01, 0.02}"),
        (zero, "phi = 0 baseline gives exact zeros"),
        (True, f"verdicts (rho~, sigma~): {verdicts}"),
    ]
    for name, q in probes.items():
        q = np.asarray(q, dtype=float)
        if np.max(np.abs(q)) <= 1e-12:
            items.append((True, f"{name} = {np.max(np.abs(q)):.1e} at roundoff for all eps"))
            continue
        defect, (a, b) = _fit_defect(eps, q)
        mono = bool(np.all(np.diff(q) > 0))
        items.append((defect <= 0.2 and mono,
                       f"{name} = {', '.join(f'{v:.4g}' for v in q)}; fit a eps + b eps^2 with a = {a:.4g}, "
                       f"b = {b:.4g}, relative defect {defect:.1e}, monotone {mono}"))
    ok = all(ok_ for ok_, _ in items)
    assert report(8, ok, "diagnostic probes under a single-mode F on the 16^2 grid", dt, items)


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
