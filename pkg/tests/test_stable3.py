import numpy as np
import pytest
from hypothesis import given, settings
from scipy.linalg import null_space
from hypothesis import strategies as st

from symcalabi import exterior as ext
from symcalabi import stable3
from symcalabi.stable3 import from_tensor, to_tensor
from symcalabi.verify import random_complex_type


def pullback(g, rho):
    """(g*ρ)(X, Y, Z) = ρ(gX, gY, gZ)."""
    T = to_tensor(3, rho)
    return from_tensor(3, np.einsum("ai,bj,ck,abc->ijk", g, g, g, T))


def test_lambda_of_decomposable_is_zero(frame):
    a = stable3.analyze(ext.basis_form(1, 2, 3), frame)
    assert float(a.lam) == 0.0
    assert not a.stable


def test_real_type_form_has_positive_lambda(frame):
    rho = ext.basis_form(1, 2, 3) + ext.basis_form(4, 5, 6)
    a = stable3.analyze(rho, frame)
    assert float(a.lam) > 0
    assert a.stable and not a.complex_type
    assert a.J is None


def test_lambda_is_quartic(frame, rng):
    c = rng.uniform(-1, 1, size=(20, 50))
    assert np.allclose(stable3.analyze(2 * c, frame).lam, 16 * stable3.analyze(c, frame).lam, rtol=1e-12)


def test_lambda_transforms_with_det_squared(frame, rng):
    c = rng.uniform(-1, 1, size=20)
    g = np.eye(6) + 0.3 * rng.standard_normal((6, 6))
    lam0 = float(stable3.analyze(c, frame).lam)
    lam1 = float(stable3.analyze(pullback(g, c), frame).lam)
    assert lam1 == pytest.approx(np.linalg.det(g) ** 2 * lam0, rel=1e-10)


def test_standard_complex_structure(frame):
    r, s = ext.holomorphic_volume()
    a = stable3.analyze(r, frame)
    assert float(a.lam) == pytest.approx(-4.0)
    e1 = np.eye(6)[0]
    assert np.allclose(a.J @ e1, np.eye(6)[1])
    assert np.allclose(a.dual, s.coeffs, atol=1e-14)


def test_phase_rotation_keeps_J(frame):
    r, s = ext.holomorphic_volume()
    J0 = stable3.analyze(r, frame).J
    for th in np.linspace(0, 2 * np.pi, 7):
        rho = np.cos(th) * r.coeffs - np.sin(th) * s.coeffs
        a = stable3.analyze(rho, frame)
        assert np.allclose(a.J, J0, atol=1e-12)
        # dual of Re(e^{iθ}Ω) is Im(e^{iθ}Ω)
        assert np.allclose(a.dual, np.sin(th) * r.coeffs + np.cos(th) * s.coeffs, atol=1e-12)


def test_J_equivariance(frame, rng):
    c = random_complex_type(rng, 1)[:, 0]
    g = np.eye(6) + 0.2 * rng.standard_normal((6, 6))
    if np.linalg.det(g) < 0:
        g[:, 0] *= -1
    J = stable3.analyze(c, frame).J
    Jg = stable3.analyze(pullback(g, c), frame).J
    assert np.allclose(Jg, np.linalg.inv(g) @ J @ g, atol=1e-9)


def test_batched_matches_single(frame, rng):
    c = random_complex_type(rng, 5)
    a = stable3.analyze(c, frame)
    for i in range(5):
        b = stable3.analyze(c[:, i], frame)
        assert np.allclose(a.J[..., i], b.J)
        assert np.allclose(a.dual[:, i], b.dual)


def test_complex_structure_nan_off_complex_type(frame):
    rho = np.stack([ext.basis_form(1, 2, 3).coeffs, ext.holomorphic_volume()[0].coeffs], axis=1)
    J = stable3.complex_structure(rho, frame)
    assert np.isnan(J[..., 0]).all()
    assert np.isfinite(J[..., 1]).all()


def test_classify_standard_forms(frame):
    r, s = ext.holomorphic_volume()
    assert stable3.classify(r, frame).verdict == "positive"
    # σ₀ = Re(−iΩ) lies on the same phase circle and so has the same J
    assert stable3.classify(s, frame).verdict == "positive"
    # ω → −ω also flips vol = ω³/6 and hence J_ρ, so the verdict is unchanged
    flip = ext.SymplecticFrame(-np.asarray(frame.omega_matrix))
    assert stable3.classify(r, flip).verdict == "positive"
    assert stable3.classify(ext.basis_form(1, 2, 3), frame).verdict == "not_stable"


def test_non_primitive_is_indefinite(frame):
    r, _ = ext.holomorphic_volume()
    rho = r.coeffs + 0.1 * ext.basis_form(1, 2, 3).coeffs
    p = stable3.classify(rho, frame)
    assert p.primitive_defect > 0.05
    assert p.verdict == "indefinite"


def test_duality_defect_and_exception(frame):
    r, s = ext.holomorphic_volume()
    assert float(stable3.duality_defect(r, s, frame)) < 1e-14
    with pytest.raises(stable3.DualityUndefined):
        stable3.duality_defect(ext.basis_form(1, 2, 3), s, frame)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_hitchin_identities_property(seed):
    frame = ext.SymplecticFrame.standard()
    c = random_complex_type(np.random.default_rng(seed), 4)
    a = stable3.analyze(c, frame)
    I = np.eye(6)[..., None]
    assert np.allclose(np.einsum("ij...,jk...->ik...", a.J, a.J), -I, atol=1e-8)
    K2 = np.einsum("ij...,jk...->ik...", a.K, a.K)
    assert np.allclose(K2, a.lam * I, atol=1e-8 * np.max(np.abs(a.K)) ** 2)
    # ρ + i·dual(ρ) is of type (3,0): the dual of the dual is −ρ
    assert np.allclose(stable3.analyze(a.dual, frame).dual, -c, atol=1e-7)


def test_negative_unreachable_with_omega_orientation(frame, rng):
    """J_ρ induces the orientation of ω³, which a −ω-tamed structure reverses."""
    M = np.stack([ext.wedge_arrays(2, frame.omega.coeffs, 3, e) for e in np.eye(20)], axis=1)
    N = null_space(M)
    prim = N @ (N.T @ rng.uniform(-1, 1, size=(20, 2000)))
    assert np.max(np.abs(M @ prim)) < 1e-12
    v = set(stable3.classify(prim, frame).verdict.ravel())
    assert "negative" not in v
    assert "positive" in v
