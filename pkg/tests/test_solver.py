import numpy as np
import pytest

from symcalabi.config import manufactured_phi
from symcalabi.equation import forward_F, normalize_F, residual, standard_omega, zero_rhs
from symcalabi.fields import FormField, Grid, random_field
from symcalabi.solver import Preconditioner, SolveOptions, jvp, second_order, solve

G4 = Grid.with_active(8, (1, 2, 3, 4))
G2 = Grid.with_active(16, (1, 2))


@pytest.fixture(scope="module")
def Om4():
    return standard_omega(G4)


def test_jvp_matches_central_differences(frame, Om4, rng):
    rhs = normalize_F(random_field(G4, 0, rng, amplitude=0.1))
    phi = random_field(G4, 0, rng, amplitude=0.05)
    psi = random_field(G4, 0, rng, amplitude=1.0)
    h = 1e-5
    fd = (residual(phi + psi * h, rhs, frame, Om4).values - residual(phi + psi * (-h), rhs, frame, Om4).values) / (2 * h)
    J = jvp(phi, psi, rhs, frame, Om4).values
    assert np.max(np.abs(fd - J)) / np.max(np.abs(J)) < 1e-6


def test_exact_second_order_expansion(frame, Om4, rng):
    rhs = normalize_F(random_field(G4, 0, rng, amplitude=0.1))
    phi = random_field(G4, 0, rng, amplitude=0.05)
    psi = random_field(G4, 0, rng, amplitude=0.3)
    lhs = residual(phi + psi, rhs, frame, Om4).values
    rhs_ = (residual(phi, rhs, frame, Om4).values + jvp(phi, psi, rhs, frame, Om4).values
            + second_order(psi, frame, Om4).values)
    assert np.max(np.abs(lhs - rhs_)) < 1e-12


def test_preconditioner_symbol_is_four_laplacian(frame, Om4):
    pre = Preconditioner(G4, frame, Om4)
    k = G4.wavenumbers()
    ksq = sum(np.broadcast_to(k[a] ** 2, G4.sizes) for a in range(6))
    # symbol of jvp(0, ·) is −4|k|² (jvp(0, ψ) = 4Δψ), Nyquist modes aside
    nyq = np.zeros(G4.sizes, dtype=bool)
    for a in G4.active_axes:
        nyq |= np.broadcast_to(np.abs(k[a]) == 4, G4.sizes)
    assert np.allclose(pre.symbol[~nyq], -4 * ksq[~nyq], atol=1e-10)


def test_preconditioner_inverts_linearization(frame, Om4, rng):
    pre = Preconditioner(G4, frame, Om4)
    psi = random_field(G4, 0, rng, kmax=2)
    psi = FormField.scalar(G4, psi.values[0] - psi.values[0].mean())
    back = pre.apply_field(jvp(FormField.zeros(G4), psi, None, frame, Om4))
    assert np.max(np.abs(back.values - psi.values)) < 1e-12


def test_zero_F_converges_immediately(frame, Om4):
    rep = solve(zero_rhs(G4), frame, Om4, SolveOptions(with_ricci=False))
    assert rep.converged and rep.iterations == 0
    assert rep.phi.max_norm() == 0.0


def test_unnormalized_rhs_rejected(frame, Om4):
    from symcalabi.equation import RHSData

    with pytest.raises(ValueError):
        solve(RHSData(FormField.zeros(G4), False, 0.0), frame, Om4)


@pytest.mark.parametrize("kw", [{"newton_tol": 0}, {"continuation_steps": 0}, {"damping": "trust"}])
def test_options_validated(kw):
    with pytest.raises(ValueError):
        SolveOptions(**kw)


def test_linear_regime_matches_preconditioner(frame):
    Om = standard_omega(G2)
    x1 = G2.coords()[0]
    eps = 1e-6
    rhs = normalize_F(FormField.scalar(G2, eps * np.cos(x1)))
    rep = solve(rhs, frame, Om, SolveOptions(with_ricci=False))
    assert rep.converged
    pre = Preconditioner(G2, frame, Om)
    lin = pre.apply(4.0 * rhs.F.values[0])
    assert np.max(np.abs(rep.phi.values[0] - lin)) / np.max(np.abs(lin)) < 1e-3


def test_single_mode_solution_is_exact_linear_profile(frame):
    """For F depending on x1 alone the equation is linear: 4φ'' = 4(e^F − 1)."""
    Om = standard_omega(G2)
    x1 = np.broadcast_to(G2.coords()[0], G2.sizes)
    rhs = normalize_F(FormField.scalar(G2, 0.01 * np.cos(x1)))
    rep = solve(rhs, frame, Om, SolveOptions(with_ricci=False))
    assert rep.converged and rep.iterations <= 2
    pre = Preconditioner(G2, frame, Om)
    want = pre.apply(4.0 * (np.exp(rhs.F.values[0]) - 1.0))
    assert np.max(np.abs(rep.phi.values[0] - want)) < 1e-12


@pytest.mark.slow
def test_manufactured_recovery(frame, Om4):
    phi_star = manufactured_phi(G4)
    rhs = normalize_F(forward_F(phi_star, frame, Om4))
    rep = solve(rhs, frame, Om4, SolveOptions(with_ricci=False))
    assert rep.converged
    assert rep.iterations <= 12
    assert rep.residual_history[-1] <= 1e-9
    err = np.max(np.abs(rep.phi.values - (phi_star.values - phi_star.values.mean())))
    assert err <= 1e-6
    # quadratic convergence once in the basin
    h = rep.residual_history
    assert h[2] < 1e-2 * h[1]


@pytest.mark.slow
def test_seed_independence(frame, Om4, rng):
    phi_star = manufactured_phi(G4)
    rhs = normalize_F(forward_F(phi_star, frame, Om4))
    seed = random_field(G4, 0, rng, amplitude=0.02)
    a = solve(rhs, frame, Om4, SolveOptions(with_ricci=False, newton_tol=1e-12))
    b = solve(rhs, frame, Om4, SolveOptions(with_ricci=False, newton_tol=1e-12, seed_phi=seed))
    assert a.converged and b.converged
    assert np.max(np.abs(a.phi.values - b.phi.values)) < 1e-10


def test_non_convergence_reported(frame, Om4):
    phi_star = manufactured_phi(G4)
    rhs = normalize_F(forward_F(phi_star, frame, Om4))
    rep = solve(rhs, frame, Om4, SolveOptions(with_ricci=False, max_newton=1))
    assert not rep.converged
    assert rep.reason == "max_newton reached"
    assert len(rep.residual_history) == 2


def test_continuation_reaches_same_solution(frame):
    Om = standard_omega(G2)
    x1 = np.broadcast_to(G2.coords()[0], G2.sizes)
    x2 = np.broadcast_to(G2.coords()[1], G2.sizes)
    rhs = normalize_F(FormField.scalar(G2, 0.05 * np.cos(x1) * np.cos(x2)))
    a = solve(rhs, frame, Om, SolveOptions(with_ricci=False))
    b = solve(rhs, frame, Om, SolveOptions(with_ricci=False, continuation_steps=3))
    assert a.converged and b.converged
    assert np.max(np.abs(a.phi.values - b.phi.values)) < 1e-9
