"""Invariant suite behind ``symcalabi verify``.

Each check returns a :class:`Check` with the measured defect and its
tolerance.  The suite is deterministic for a given seed.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from math import comb

import numpy as np
import sympy

from . import conventions
from . import exterior as ext
from . import stable3
from .equation import (
    deform,
    normalize_F,
    pairing_field,
    residual,
    residual_nonscalar,
    standard_omega,
    zero_rhs,
)
from .fields import (
    X,
    FormField,
    Grid,
    d_c,
    d_s,
    ext_d,
    mul_scalar_field,
    random_field,
)


@dataclass
class Check:
    name: str
    defect: float
    tol: float
    passed: bool
    seconds: float = 0.0
    gating: bool = True
    note: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL" if self.gating else "NOTE")
        return f"[{status}] {self.name}: defect={self.defect:.3e} tol={self.tol:.1e} ({self.seconds:.2f}s){' ' + self.note if self.note else ''}"

    def to_dict(self) -> dict:
        return asdict(self)


def _check(name, tol, fn, gating=True):
    t = time.perf_counter()
    out = fn()
    note = ""
    if isinstance(out, tuple):
        out, note = out
    defect = float(out)
    passed = bool(np.isfinite(defect) and defect <= tol)
    return Check(name, defect, tol, passed, time.perf_counter() - t, gating, note)


def faulty_frame(kind: str = "star-sign") -> ext.SymplecticFrame:
    """A standard frame with a deliberately corrupted star table (test mode)."""
    f = ext.SymplecticFrame.standard()
    if kind != "star-sign":
        raise ValueError(f"unknown fault {kind!r}")
    S = f.star_matrix(2).copy()
    nz = np.argwhere(S != 0)[0]
    S[tuple(nz)] *= -1
    f._star[2] = S
    return f


def random_forms(rng, k, n):
    return rng.uniform(-1, 1, size=(comb(6, k), n))


# exterior


def anticommutativity(frame, rng, n=10_000):
    worst = 0.0
    for k in range(7):
        for l in range(7 - k):
            a, b = random_forms(rng, k, n), random_forms(rng, l, n)
            lhs = ext.wedge_arrays(k, a, l, b)
            rhs = (-1) ** (k * l) * ext.wedge_arrays(l, b, k, a)
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def antiderivation(frame, rng, n=10_000):
    worst = 0.0
    for k in range(1, 6):
        for l in range(1, 7 - k):
            a, b = random_forms(rng, k, n), random_forms(rng, l, n)
            v = rng.uniform(-1, 1, size=(6, n))
            lhs = ext.interior_arrays(v, k + l, ext.wedge_arrays(k, a, l, b))
            rhs = ext.wedge_arrays(k - 1, ext.interior_arrays(v, k, a), l, b) + (-1) ** k * ext.wedge_arrays(
                k, a, l - 1, ext.interior_arrays(v, l, b)
            )
            worst = max(worst, float(np.max(np.abs(lhs - rhs))))
    return worst


def star_involution(frame, rng, n=10_000):
    worst = 0.0
    for k in range(7):
        a = random_forms(rng, k, n)
        back = frame.star_arrays(6 - k, frame.star_arrays(k, a))
        worst = max(worst, float(np.max(np.abs(back - a))))
    return worst


def star_defining_relation(frame):
    worst = 0.0
    eye = {k: np.eye(comb(6, k)) for k in range(7)}
    for k in range(7):
        for i, I in enumerate(ext.basis(k)):
            sa = frame.star_arrays(k, eye[k][i])
            for j, L in enumerate(ext.basis(k)):
                top = ext.wedge_arrays(k, eye[k][j], 6 - k, sa)
                want = float(frame.pairing(k, L, I)) * float(frame.vol_coeff)
                worst = max(worst, abs(float(top[0]) - want))
    return worst


# stable3


def random_complex_type(rng, n):
    """Random 3-forms (entries in [-1, 1]) with λ < 0 and |λ| ≥ 1e-6."""
    frame = ext.SymplecticFrame.standard()
    out = []
    while sum(x.shape[1] for x in out) < n:
        c = rng.uniform(-1, 1, size=(20, 2 * n))
        lam = stable3.analyze(c, frame).lam
        keep = (lam < 0) & (np.abs(lam) >= 1e-6)
        out.append(c[:, keep])
    return np.concatenate(out, axis=1)[:, :n]


def hitchin_identities(frame, rng, n=1000):
    c = random_complex_type(rng, n)
    a = stable3.analyze(c, frame)
    J2 = np.einsum("ij...,jk...->ik...", a.J, a.J) + np.eye(6)[..., None]
    K2 = np.einsum("ij...,jk...->ik...", a.K, a.K) - a.lam * np.eye(6)[..., None]
    knorm = np.max(np.abs(a.K).reshape(36, -1), axis=0)
    return float(np.max(np.abs(J2))), float(np.max(np.max(np.abs(K2).reshape(36, -1), axis=0) / knorm**2))


def standard_hitchin(frame):
    r, s = ext.holomorphic_volume()
    a = stable3.analyze(r, frame)
    Jstd = np.zeros((6, 6))
    for p in (0, 2, 4):
        Jstd[p + 1, p] = 1.0
        Jstd[p, p + 1] = -1.0
    lam0 = abs(float(stable3.analyze(ext.basis_form(1, 2, 3), frame).lam))
    return max(float(np.max(np.abs(a.J - Jstd))), float(np.max(np.abs(a.dual - s.coeffs))), lam0)


# fields


def calculus_identities(frame, rng, grid=None, trials=2):
    grid = grid or Grid.with_active(8, (1, 2, 3, 4))
    worst = {"d2": 0.0, "ds2": 0.0, "anticomm": 0.0}
    for _ in range(trials):
        for k in range(0, 6):
            f = random_field(grid, k, rng)
            dd = ext_d(ext_d(f)) if k <= 4 else None
            if dd is not None:
                worst["d2"] = max(worst["d2"], dd.max_norm() / max(ext_d(f).max_norm(), 1e-300))
        for k in range(1, 7):
            f = random_field(grid, k, rng)
            if k >= 2:
                ss = d_s(d_s(f, frame), frame)
                worst["ds2"] = max(worst["ds2"], ss.max_norm() / max(d_s(f, frame).max_norm(), 1e-300))
            if k <= 5:
                a = ext_d(d_s(f, frame))
                b = d_s(ext_d(f), frame)
                worst["anticomm"] = max(worst["anticomm"], (a + b).max_norm() / max(a.max_norm(), b.max_norm(), 1e-300))
    return worst


def spectral_vs_analytic(frame, grid=None):
    grid = grid or Grid.with_active(8, (1, 2, 3, 4))
    _, s = ext.holomorphic_volume(exact=True)
    S = FormField.analytic_constant(s)
    phi = FormField.analytic(0, [sympy.sin(X[0]) + sympy.cos(X[1] - 2 * X[2]) * sympy.sin(X[3])])
    exact = d_s(mul_scalar_field(phi, S), frame).evaluate(grid)
    spec = d_s(mul_scalar_field(phi.evaluate(grid), S.evaluate(grid)), frame)
    return float(np.max(np.abs(exact.values - spec.values)))


def example_identities(frame):
    a, b = conventions.example_dds_factor()
    # proportionality to (ρ, σ) with opposite factors is established exactly inside
    # example_dds_factor; here we only confirm the pair is (a, -a)
    return abs(a + b)


def c_omega_constancy():
    f = ext.SymplecticFrame.standard(exact=True)
    phi = FormField.analytic(0, [sum(x**2 for x in X)])
    out = ext_d(d_c(phi, conventions.standard_J())).simplify().values
    c = conventions.c_omega()
    grid = Grid.with_active(4, (1, 2, 3, 4, 5, 6))
    vals = FormField.analytic(2, out).evaluate(grid).values
    want = c * np.asarray(f.omega.coeffs, dtype=float).reshape((-1,) + (1,) * 6)
    return float(np.max(np.abs(vals - want)))


# equation


def equation_invariants(frame, rng, grid=None, trials=4):
    grid = grid or Grid.with_active(8, (1, 2, 3, 4))
    Om = standard_omega(grid)
    rhs = normalize_F(random_field(grid, 0, rng, amplitude=0.1))
    out = {"volume": 0.0, "gauge": 0.0, "containment": 0.0, "quadratic": 0.0}
    for _ in range(trials):
        phi = random_field(grid, 0, rng, amplitude=0.02)
        rt, st = deform(phi, Om, frame)
        lhs = pairing_field(rt, st, frame).values.mean()
        base = pairing_field(*Om, frame).values.mean()
        out["volume"] = max(out["volume"], abs(lhs - base) / abs(base))
        r0 = residual(phi, rhs, frame, Om)
        r1 = residual(phi + FormField.scalar(grid, 3.7), rhs, frame, Om)
        out["gauge"] = max(out["gauge"], float(np.max(np.abs(r0.values - r1.values))))
        rn = residual_nonscalar(phi * Om[1], -(phi * Om[0]), rhs, frame, Om)
        out["containment"] = max(out["containment"], float(np.max(np.abs(rn.values - r0.values))))
        ts = np.array([0.0, 0.5, 1.0, 2.0])
        vals = np.stack([residual(phi * t, rhs, frame, Om).values[0].ravel() for t in ts])
        V = np.vander(ts, 3)
        coef, *_ = np.linalg.lstsq(V, vals, rcond=None)
        out["quadratic"] = max(out["quadratic"], float(np.max(np.abs(V @ coef - vals))))
    return out


def run_suite(frame: ext.SymplecticFrame | None = None, seed: int = 0) -> list[Check]:
    frame = frame or ext.SymplecticFrame.standard()
    rng = np.random.default_rng(seed)
    checks = [
        _check("exterior.anticommutativity", 1e-12, lambda: anticommutativity(frame, rng)),
        _check("exterior.antiderivation", 1e-12, lambda: antiderivation(frame, rng)),
        _check("exterior.star_involution", 1e-12, lambda: star_involution(frame, rng)),
        _check("exterior.star_defining_relation", 1e-12, lambda: star_defining_relation(frame)),
    ]
    hj = hitchin_identities(frame, rng)
    checks += [
        Check("stable3.J_squared", hj[0], 1e-8, hj[0] <= 1e-8),
        Check("stable3.K_squared", hj[1], 1e-8, hj[1] <= 1e-8),
        _check("stable3.standard_structure", 1e-12, lambda: standard_hitchin(frame)),
    ]
    t = time.perf_counter()
    calc = calculus_identities(frame, rng)
    dt = time.perf_counter() - t
    checks += [Check(f"fields.{k}", v, 1e-10, v <= 1e-10, dt / 3) for k, v in calc.items()]
    checks.append(_check("fields.spectral_vs_analytic", 1e-12, lambda: spectral_vs_analytic(frame)))
    checks.append(_check("example.dds_pair_opposite", 1e-12, lambda: example_identities(frame)))
    checks.append(_check("example.ddc_constant", 1e-12, c_omega_constancy))
    a, _ = conventions.example_dds_factor()
    checks.append(Check("example.dds_factor_3", abs(a - 3.0), 1e-12, abs(a - 3.0) <= 1e-12,
                        gating=False, note=f"measured dd^s(φσ) = {a:g}ρ"))
    t = time.perf_counter()
    eq = equation_invariants(frame, rng)
    dt = time.perf_counter() - t
    tols = {"volume": 1e-10, "gauge": 1e-12, "containment": 1e-12, "quadratic": 1e-11}
    checks += [Check(f"equation.{k}", v, tols[k], v <= tols[k], dt / 4) for k, v in eq.items()]
    return checks
