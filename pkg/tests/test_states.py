import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasewig import exprlang as el
from phasewig.numgrid import BoundaryLeakageError, square_grid
from phasewig.states import (
    GaussianFactorState,
    OscillatorParams,
    born_residual,
    factorization_check,
    from_samples,
    gaussian_packet,
    hermite_functions,
    lift_state,
    oscillator_eigenstate,
    oscillator_factor_state,
)


def test_ground_state_matches_closed_form(grid512, unit):
    psi = oscillator_eigenstate(0, unit, grid512)
    q = grid512.q
    assert np.max(np.abs(psi.samples - np.pi**-0.25 * np.exp(-(q**2) / 2))) < 1e-14


def test_orthonormal_up_to_ten(grid512, unit):
    states = [oscillator_eigenstate(n, unit, grid512) for n in range(11)]
    gram = np.array([[a.inner(b) for b in states] for a in states])
    assert np.max(np.abs(gram - np.eye(11))) < 1e-8


def test_high_levels_do_not_overflow():
    xi = np.linspace(-12, 12, 401)
    h = hermite_functions(32, xi)
    assert np.all(np.isfinite(h))
    dx = xi[1] - xi[0]
    assert abs(np.sum(h[32] ** 2) * dx - 1) < 1e-8


def test_level_out_of_range(grid512, unit):
    with pytest.raises(ValueError):
        oscillator_eigenstate(33, unit, grid512)


def test_leakage_is_reported():
    g = square_grid(3.0, 64)
    with pytest.raises(BoundaryLeakageError):
        oscillator_eigenstate(4, OscillatorParams(), g)


@given(st.floats(-2, 2), st.floats(-3, 3), st.floats(0.5, 1.0))
def test_packets_have_unit_norm(q0, p0, sigma):
    psi = gaussian_packet(q0, p0, sigma, square_grid(12.0, 256))
    assert abs(psi.norm - 1) < 1e-8


def test_factor_form_matches_sampled_eigenstates(grid512):
    params = OscillatorParams(1.3, 0.8)
    for n in range(7):
        exact = oscillator_eigenstate(n, params, grid512).samples
        factored = oscillator_factor_state(n, params, grid512.hbar).wavefunction(grid512).samples
        assert np.max(np.abs(exact - factored)) < 1e-12


def test_factorization_check_accepts_gaussian_times_polynomial(grid512):
    st_ = GaussianFactorState(0.5, (1.0, 0.3, -0.2, 0.05))
    rep = factorization_check(st_.wavefunction(grid512), 0.5)
    assert rep.finite


def test_factorization_check_ground_state(grid512, unit):
    psi = oscillator_eigenstate(0, unit, grid512)
    rep = factorization_check(psi, 0.5)
    assert rep.finite
    assert abs(rep.integral - 1) < 1e-8


def test_factorization_check_rejects_growing_phi(grid512, unit):
    psi = oscillator_eigenstate(0, unit, grid512)
    assert not factorization_check(psi, 1.0).finite


def test_factorization_check_rejects_slow_decay(grid512):
    psi = from_samples(1 / np.cosh(grid512.q * 3), grid512, check=False)
    assert not factorization_check(psi, 0.5).finite


def test_factorization_check_needs_positive_a(grid128, unit):
    with pytest.raises(ValueError):
        factorization_check(oscillator_eigenstate(0, unit, grid128), 0.0)


@given(
    st.integers(0, 10),
    st.sampled_from(["p*q/2", "0", "sin(q)*cos(p) + q*p", "tanh(p)*q^2"]),
)
def test_lift_preserves_modulus(n, f):
    g = square_grid(12.0, 128)
    psi = oscillator_eigenstate(n, OscillatorParams(), g)
    Psi = lift_state(psi, f)
    assert born_residual(Psi, psi) < 1e-12


def test_phase_space_norm_carries_momentum_volume(grid256, unit):
    psi = oscillator_eigenstate(2, unit, grid256)
    Psi = lift_state(psi, "p*q/2")
    total = np.sum(np.abs(Psi.samples) ** 2) * grid256.q_axis.h * grid256.p_axis.h
    assert abs(total / (grid256.p_axis.length * psi.norm**2) - 1) < 1e-8


def test_zero_generator_keeps_state_unphased(grid128, unit):
    psi = oscillator_eigenstate(1, unit, grid128)
    Psi = lift_state(psi, "0")
    assert Psi.phase is None
    assert np.array_equal(Psi.samples[:, 5], psi.samples)


def test_lift_rejects_nonfinite_generator(grid128, unit):
    psi = oscillator_eigenstate(0, unit, grid128)
    with pytest.raises(el.DomainError):
        lift_state(psi, "1/q")


def test_phase_state_derivative_matches_samples(grid256, unit):
    psi = oscillator_eigenstate(1, unit, grid256)
    Psi = lift_state(psi, "p*q/2 + 0.2*sin(q)")
    q, p = grid256.mesh()
    f = p * q / 2 + 0.2 * np.sin(q)
    fq = p / 2 + 0.2 * np.cos(q)
    dpsi = -np.sqrt(2) * np.pi**-0.25 * (q**2 - 1) * np.exp(-(q**2) / 2)
    exact = np.exp(-1j * f) * (dpsi - 1j * fq * psi.samples[:, None])
    assert np.max(np.abs(Psi.derivative("q").samples - exact)) < 1e-10


def test_momentum_amplitude_of_ground_state(grid256, unit):
    psi = oscillator_eigenstate(0, unit, grid256)
    phi = psi.momentum_amplitude()
    assert np.max(np.abs(phi - np.pi**-0.25 * np.exp(-(grid256.p**2) / 2))) < 1e-12
