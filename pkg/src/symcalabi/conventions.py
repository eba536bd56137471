"""Convention constants fixed by computation rather than assumed.

Every value here is produced by evaluating the build's own operators on the
standard frame ω = e¹² + e³⁴ + e⁵⁶ and Ω = dz¹∧dz²∧dz³ (zʲ = x²ʲ⁻¹ + i x²ʲ).
Reports embed :func:`ledger` so that downstream numbers can be interpreted.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy

from . import exterior as ext
from . import stable3
from .fields import X, FormField, d_c, dd_s, ext_d, mul_scalar_field


@lru_cache(maxsize=None)
def c_rho_sigma() -> float:
    """ρ₀∧σ₀ = c_ρσ·vol."""
    f = ext.SymplecticFrame.standard(exact=True)
    r, s = ext.holomorphic_volume(exact=True)
    return float(ext.pairing_ratio(ext.wedge(r, s), f))


@lru_cache(maxsize=None)
def standard_J() -> np.ndarray:
    f = ext.SymplecticFrame.standard()
    r, _ = ext.holomorphic_volume()
    return np.round(stable3.analyze(r, f).J, 12) + 0.0


@lru_cache(maxsize=None)
def c_omega() -> float:
    """dd^c(Σ|zⁱ|²) = c_ω·ω (checked constant over all components)."""
    f = ext.SymplecticFrame.standard(exact=True)
    phi = FormField.analytic(0, [sum(x**2 for x in X)])
    out = ext_d(d_c(phi, standard_J())).simplify().values
    ratios = {sympy.nsimplify(o / w) for o, w in zip(out, f.omega.coeffs) if w != 0}
    if len(ratios) != 1 or any(o != 0 for o, w in zip(out, f.omega.coeffs) if w == 0):
        raise ArithmeticError(f"dd^c φ is not proportional to ω: {out}")
    return float(ratios.pop())


@lru_cache(maxsize=None)
def example_dds_factor() -> tuple[float, float]:
    """(a, b) with dd^s(φσ₀) = a·ρ₀ and dd^s(φρ₀) = b·σ₀ for φ = Σ|zⁱ|²."""
    f = ext.SymplecticFrame.standard(exact=True)
    r, s = ext.holomorphic_volume(exact=True)
    R, S = FormField.analytic_constant(r), FormField.analytic_constant(s)
    phi = FormField.analytic(0, [sum(x**2 for x in X)])
    A = dd_s(mul_scalar_field(phi, S), f).simplify().values
    B = dd_s(mul_scalar_field(phi, R), f).simplify().values
    return _proportionality(A, r.coeffs), _proportionality(B, s.coeffs)


def _proportionality(vals, base) -> float:
    ratios = {sympy.nsimplify(v / b) for v, b in zip(vals, base) if b != 0}
    if len(ratios) != 1 or any(v != 0 for v, b in zip(vals, base) if b == 0):
        raise ArithmeticError("not proportional")
    return float(ratios.pop())


def ledger(kappa: float | None = None) -> dict:
    a, b = example_dds_factor()
    out = {
        "c_rho_sigma": c_rho_sigma(),
        "c_omega": c_omega(),
        "J_sign": stable3.J_SIGN,
        "J_standard_e1": "e2",
        "dds_phi_sigma_over_rho": a,
        "dds_phi_rho_over_sigma": b,
        "pairing_index_order": "G(e^i, e^j) = omega_inv[j, i]",
        "dual_action": "(J rho)(X,Y,Z) = rho(J^-1 X, Y, Z)",
    }
    if kappa is not None:
        out["kappa"] = kappa
    return out
