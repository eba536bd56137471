"""Newton–Krylov solver for the scalar equation on the flat torus.

Each Newton step solves jvp(φ, δ) = −residual(φ) with GMRES, right-hand side
and iterate both restricted to mean-zero fields (the gauge "modulo a
constant").  The preconditioner is the exact inverse of the linearization at
φ = 0, which is constant-coefficient and therefore a Fourier multiplier.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from . import conventions
from . import stable3
from .equation import Diagnostics, RHSData, diagnose, normalize_F, pairing_field, residual
from .fields import FormField, Grid, dd_s, deform, mul_scalar_field

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    max_newton: int = 20
    newton_tol: float = 1e-10
    krylov_tol: float = 1e-12
    damping: str = "line-search-halving"  # or "none"
    continuation_steps: int = 1
    seed_phi: FormField | None = None
    max_krylov: int = 200
    dealias: bool = True
    with_ricci: bool = True

    def __post_init__(self):
        if self.newton_tol <= 0 or self.krylov_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.continuation_steps < 1:
            raise ValueError("continuation_steps must be >= 1")
        if self.damping not in ("none", "line-search-halving"):
            raise ValueError(f"unknown damping {self.damping!r}")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    residual_history: list
    step_sizes: list
    phi: FormField
    diagnostics: Diagnostics | None
    conventions: dict
    reason: str = ""
    flags: list = field(default_factory=list)
    krylov_iterations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_history": list(self.residual_history),
            "step_sizes": list(self.step_sizes),
            "krylov_iterations": list(self.krylov_iterations),
            "phi_mean": float(self.phi.values.mean()),
            "phi_maxnorm": self.phi.max_norm(),
            "diagnostics": None if self.diagnostics is None else self.diagnostics.to_dict(),
            "conventions": self.conventions,
            "reason": self.reason,
            "flags": list(self.flags),
        }


def _deformation_parts(psi: FormField, frame, Omega):
    rho, sigma = Omega
    return dd_s(mul_scalar_field(psi, sigma), frame), dd_s(mul_scalar_field(psi, rho), frame)


def linearize(phi: FormField, frame, Omega, dealias: bool = True):
    """Return ψ ↦ jvp(φ, ψ), reusing ρ̃(φ), σ̃(φ) across calls."""
    rt, st = deform(phi, Omega, frame, sign=1)

    def apply(psi: FormField) -> FormField:
        a, b = _deformation_parts(psi, frame, Omega)
        return pairing_field(a, st, frame, dealias) - pairing_field(rt, b, frame, dealias)

    return apply


def jvp(phi: FormField, psi: FormField, rhs: RHSData, frame, Omega, dealias: bool = True) -> FormField:
    """Exact directional derivative of residual at φ along ψ.

    residual is quadratic in (dd^s(φσ), dd^s(φρ)), so
    jvp = ratio(dd^s(ψσ)∧σ̃ − ρ̃∧dd^s(ψρ)) with no truncation error.
    """
    return linearize(phi, frame, Omega, dealias)(psi)


def second_order(psi: FormField, frame, Omega, dealias: bool = True) -> FormField:
    """The exact quadratic remainder −ratio(dd^s(ψσ)∧dd^s(ψρ))."""
    a, b = _deformation_parts(psi, frame, Omega)
    return -pairing_field(a, b, frame, dealias)


class Preconditioner:
    """Inverse of jvp(0, ·) as a Fourier multiplier, zero mode projected out."""

    def __init__(self, grid: Grid, frame, Omega, dealias: bool = True):
        self.grid = grid
        delta = np.zeros(grid.sizes)
        delta[(0,) * 6] = 1.0
        resp = jvp(FormField.zeros(grid), FormField.scalar(grid, delta), None, frame, Omega, dealias)
        symbol = np.fft.fftn(resp.values[0]).real
        scale = np.max(np.abs(symbol))
        self.symbol = symbol
        self.inverse = np.where(np.abs(symbol) > 1e-10 * scale, 1.0 / np.where(symbol == 0, 1.0, symbol), 0.0)
        self.inverse[(0,) * 6] = 0.0

    def apply(self, values: np.ndarray) -> np.ndarray:
        return np.fft.ifftn(np.fft.fftn(values.reshape(self.grid.sizes)) * self.inverse).real

    def apply_field(self, f: FormField) -> FormField:
        return FormField.scalar(self.grid, self.apply(f.values[0]))


def _maxnorm(f: FormField) -> float:
    return float(np.max(np.abs(f.values)))


def _mean_free(v: np.ndarray) -> np.ndarray:
    return v - v.mean()


def _newton_solve(phi: FormField, rhs: RHSData, frame, Omega, opts: SolveOptions, pre: Preconditioner,
                  history: list, steps: list, kry: list, flags: list, final_stage: bool):
    grid = rhs.F.grid
    n = grid.npoints
    r = residual(phi, rhs, frame, Omega, opts.dealias)
    rn = _maxnorm(r)
    if final_stage:
        history.append(rn)
    stagnation_window = []
    for it in range(opts.max_newton):
        if rn <= opts.newton_tol:
            return phi, True, ""
        lin = linearize(phi, frame, Omega, opts.dealias)

        def mv(x):
            out = lin(FormField.scalar(grid, _mean_free(x).reshape(grid.sizes)))
            return _mean_free(out.values[0].ravel())

        A = LinearOperator((n, n), matvec=mv, dtype=float)
        M = LinearOperator((n, n), matvec=lambda x: pre.apply(_mean_free(x)).ravel(), dtype=float)
        b = -_mean_free(r.values[0].ravel())
        counter = {"n": 0}

        def cb(_):
            counter["n"] += 1

        bnorm = np.linalg.norm(b)
        sol, info = gmres(A, b, M=M, rtol=opts.krylov_tol, atol=opts.krylov_tol * 1e-3 * max(bnorm, 1e-300),
                          restart=min(opts.max_krylov, n), maxiter=1,
                          callback=cb, callback_type="pr_norm")
        kry.append(counter["n"])
        if info < 0:
            return phi, False, f"krylov breakdown (info={info})"
        delta = FormField.scalar(grid, _mean_free(sol).reshape(grid.sizes))

        t = 1.0
        trial = phi + delta * t
        r_new = residual(trial, rhs, frame, Omega, opts.dealias)
        rn_new = _maxnorm(r_new)
        if opts.damping == "line-search-halving":
            while rn_new >= rn and t > 1.0 / 1024:
                t *= 0.5
                trial = phi + delta * t
                r_new = residual(trial, rhs, frame, Omega, opts.dealias)
                rn_new = _maxnorm(r_new)
        rt, _ = deform(trial, Omega, frame, sign=1)
        if not stable3.analyze(rt.values, frame.float_twin()).all_complex:
            flags.append(f"rho_tilde lost stability at newton step {it + 1}")
        phi, r, rn = trial, r_new, rn_new
        if final_stage:
            history.append(rn)
            steps.append(t)
        log.debug("newton %d: residual %.3e step %.3g krylov %d", it + 1, rn, t, counter["n"])
        stagnation_window.append(rn)
        if len(stagnation_window) > 5:
            old = stagnation_window[-6]
            if old > 0 and (old - rn) / old < 1e-3:
                return phi, False, "stagnation: relative residual drop < 1e-3 over 5 Newton steps"
    return phi, rn <= opts.newton_tol, "" if rn <= opts.newton_tol else "max_newton reached"


def solve(rhs: RHSData, frame, Omega, opts: SolveOptions | None = None) -> SolveReport:
    """Solve residual(φ) = 0 for mean-zero φ."""
    opts = opts or SolveOptions()
    if not rhs.normalized:
        raise ValueError("right-hand side must be normalized")
    grid = rhs.F.grid
    pre = Preconditioner(grid, frame, Omega, opts.dealias)
    phi = opts.seed_phi if opts.seed_phi is not None else FormField.zeros(grid)
    phi = FormField.scalar(grid, phi.values[0] - phi.values[0].mean())
    history: list = []
    steps: list = []
    kry: list = []
    flags: list = []
    converged = False
    reason = ""
    nsteps = opts.continuation_steps
    for j in range(1, nsteps + 1):
        final = j == nsteps
        if final:
            stage = rhs
        else:
            stage = normalize_F(FormField.scalar(grid, rhs.F.values[0] * (j / nsteps)))
        phi, converged, reason = _newton_solve(phi, stage, frame, Omega, opts, pre, history, steps, kry, flags, final)
        if not converged and not final:
            reason = f"continuation stage {j}/{nsteps}: {reason}"
            break
    # exact gauge fix
    phi = FormField.scalar(grid, phi.values[0] - phi.values[0].mean())
    try:
        diag = diagnose(phi, rhs, frame, Omega, with_ricci=opts.with_ricci, dealias=opts.dealias)
    except (ValueError, np.linalg.LinAlgError) as exc:
        diag = None
        flags.append(f"diagnose failed: {exc}")
    return SolveReport(
        converged=converged,
        iterations=max(len(history) - 1, 0),
        residual_history=history,
        step_sizes=steps,
        phi=phi,
        diagnostics=diag,
        conventions=conventions.ledger(),
        reason=reason,
        flags=flags,
        krylov_iterations=kry,
    )
