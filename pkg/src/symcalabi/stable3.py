"""Hitchin analysis of real 3-forms on a symplectic 6-space.

All routines accept batched coefficient arrays (shape ``(20, *batch)``), so a
whole grid of 3-forms is analysed in one call; the :class:`StableAnalysis`
fields then carry the same trailing batch shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .exterior import (
    DIM,
    KForm,
    SymplecticFrame,
    basis,
    interior_arrays,
    wedge_arrays,
    _perm_sign,
)

#: Global sign applied to K/sqrt(-λ); fixed so that Re(dz¹²³) is positive
#: for ω = e¹² + e³⁴ + e⁵⁶ (raw K gives J e₁ = -e₂ there).
J_SIGN = -1.0


class DualityUndefined(ValueError):
    """Raised when the first form is not stable of complex type."""


@dataclass(frozen=True, eq=False)
class StableAnalysis:
    lam: np.ndarray
    K: np.ndarray
    J: np.ndarray | None
    dual: np.ndarray | None
    stable: np.ndarray
    complex_type: np.ndarray

    @property
    def all_complex(self) -> bool:
        return bool(np.all(self.complex_type))


@dataclass(frozen=True, eq=False)
class Positivity:
    primitive_defect: np.ndarray
    taming_matrix: np.ndarray
    antisym_defect: np.ndarray
    min_eig: np.ndarray
    max_eig: np.ndarray
    verdict: np.ndarray  # str array: positive / negative / indefinite / not_stable


def _as_coeffs(rho) -> np.ndarray:
    if isinstance(rho, KForm):
        if rho.degree != 3:
            raise ValueError("expected a 3-form")
        return np.asarray(rho.coeffs, dtype=float)
    return np.asarray(rho, dtype=float)


def vector_volume(frame: SymplecticFrame) -> np.ndarray:
    """Matrix of A: Λ⁵ → V (coefficient against vol), ι_{A(μ)} vol = μ."""
    if "A" not in frame._star:
        eye = np.eye(DIM)
        vol = np.asarray(frame.vol.coeffs, dtype=float)
        M = np.stack([interior_arrays(eye[m], DIM, vol) for m in range(DIM)], axis=1)
        frame._star["A"] = np.linalg.inv(M)
    return frame._star["A"]


def hitchin_K(rho, frame: SymplecticFrame) -> np.ndarray:
    """K_ρ as a ``(6, 6, *batch)`` array, K[:, m] = A(ι_{e_m}ρ ∧ ρ)."""
    c = _as_coeffs(rho)
    A = vector_volume(frame)
    eye = np.eye(DIM)
    cols = []
    for m in range(DIM):
        e = eye[m].reshape((DIM,) + (1,) * (c.ndim - 1))
        five = wedge_arrays(2, interior_arrays(e, 3, c), 3, c)
        cols.append(np.tensordot(A, five, axes=(1, 0)))
    return np.stack(cols, axis=1)


def to_tensor(k: int, coeffs) -> np.ndarray:
    """Fully antisymmetric component tensor ``T[a1..ak, *batch]``."""
    c = np.asarray(coeffs)
    T = np.zeros((DIM,) * k + c.shape[1:], dtype=c.dtype)
    for r, idx in enumerate(basis(k)):
        for p in permutations(range(k)):
            T[tuple(idx[i] for i in p)] = _perm_sign(p) * c[r]
    return T


def from_tensor(k: int, T) -> np.ndarray:
    return np.stack([T[idx] for idx in basis(k)])


def act_first_slot(E, k: int, coeffs) -> tuple[np.ndarray, float]:
    """(E·α)(X, ...) = α(E X, ...) on the first slot.

    Returns the sorted coefficients and the max antisymmetry defect of the
    result (zero when the single-slot action is slot independent).
    """
    T = to_tensor(k, coeffs)
    # (E·α)_{a b c} = Σ_d E[d, a] α_{d b c}
    out = np.einsum("da...,d...->a...", E, T) if k == 1 else _first_slot(E, T, k)
    res = from_tensor(k, out)
    antisym = to_tensor(k, res)
    defect = float(np.max(np.abs(antisym - out), initial=0.0))
    return res, defect


def _first_slot(E, T, k):
    letters = "bcdefg"[: k - 1]
    return np.einsum(f"za...,z{letters}...->a{letters}...", E, T)


def analyze(rho, frame: SymplecticFrame, tol_scale: float = 1e-10) -> StableAnalysis:
    """Hitchin data of a (batched) 3-form.

    λ = tr(K²)/6; stable iff |λ| > tol_scale·‖ρ‖⁴.  Where every point is of
    complex type (λ < 0) ``J = J_SIGN·K/√(−λ)`` and ``dual = J_ρρ`` with the
    natural action on forms, (J_ρρ)(X, Y, Z) = ρ(J⁻¹X, Y, Z).
    """
    c = _as_coeffs(rho)
    K = hitchin_K(c, frame)
    lam = np.einsum("ij...,ji...->...", K, K) / 6.0
    norm = np.max(np.abs(c), axis=0)
    stable = np.abs(lam) > tol_scale * norm**4
    complex_type = stable & (lam < 0)
    J = dual = None
    if np.all(complex_type):
        J = J_SIGN * K / np.sqrt(-lam)
        Jinv = -J
        dual, _ = act_first_slot(Jinv, 3, c)
    return StableAnalysis(lam=lam, K=K, J=J, dual=dual, stable=stable, complex_type=complex_type)


def complex_structure(rho, frame: SymplecticFrame) -> np.ndarray:
    """J_ρ with NaN at points where ρ is not stable of complex type."""
    c = _as_coeffs(rho)
    K = hitchin_K(c, frame)
    lam = np.einsum("ij...,ji...->...", K, K) / 6.0
    norm = np.max(np.abs(c), axis=0)
    ok = (lam < 0) & (np.abs(lam) > 1e-10 * norm**4)
    scale = np.where(ok, 1.0 / np.sqrt(np.where(ok, -lam, 1.0)), np.nan)
    return J_SIGN * K * scale


def classify(rho, frame: SymplecticFrame, tol: float = 1e-10) -> Positivity:
    """Positivity verdict of a (batched) 3-form.

    ``positive``: stable of complex type, ω∧ρ = 0, and ω(X, J_ρX) ≥ 0;
    ``negative``: same with ω(X, J_ρX) ≤ 0; otherwise ``indefinite`` or
    ``not_stable``.
    """
    c = _as_coeffs(rho)
    batch = c.shape[1:]
    wr = wedge_arrays(2, np.asarray(frame.omega.coeffs, dtype=float).reshape((-1,) + (1,) * len(batch)), 3, c)
    prim = np.max(np.abs(wr), axis=0)
    J = complex_structure(c, frame)
    ok = ~np.isnan(J[0, 0])
    Jsafe = np.where(ok, J, 0.0)
    W = np.asarray(frame.omega_matrix, dtype=float)
    G = np.einsum("ac,cb...->ab...", W, Jsafe)
    sym = 0.5 * (G + np.swapaxes(G, 0, 1))
    antisym = np.max(np.abs(G - np.swapaxes(G, 0, 1)).reshape((DIM * DIM,) + batch), axis=0) / 2
    eig = np.linalg.eigvalsh(np.moveaxis(sym, (0, 1), (-2, -1)))
    min_eig = eig[..., 0]
    max_eig = eig[..., -1]
    good = ok & (prim <= tol) & (antisym <= tol)
    verdict = np.full(batch, "indefinite", dtype=object)
    verdict[good & (min_eig >= -tol)] = "positive"
    verdict[good & (max_eig <= tol)] = "negative"
    verdict[~ok] = "not_stable"
    return Positivity(
        primitive_defect=prim,
        taming_matrix=sym,
        antisym_defect=antisym,
        min_eig=np.where(ok, min_eig, np.nan),
        max_eig=np.where(ok, max_eig, np.nan),
        verdict=verdict,
    )


def duality_defect(rho, sigma, frame: SymplecticFrame) -> np.ndarray:
    """max|J_ρρ − σ| / max|σ|, pointwise over the batch."""
    a = analyze(rho, frame)
    if not a.all_complex:
        raise DualityUndefined("ρ is not stable of complex type at every point")
    s = _as_coeffs(sigma)
    num = np.max(np.abs(a.dual - s), axis=0)
    den = np.max(np.abs(s), axis=0)
    return num / den
