import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasewig.numgrid import BoundaryLeakageError, square_grid
from phasewig.schrod import (
    NonConfiningError,
    PolynomialPotential,
    apply_phase_hamiltonian,
    config_hamiltonian,
    cross_pairing_residuals,
    equivalence_sweep,
    phase_residual,
    rayleigh_energy,
    solve_config,
)
from phasewig.states import PhaseState, lift_state, oscillator_eigenstate
from phasewig.symcalc import (
    canonical_connection,
    connection_from_generating,
    random_band_limited_field,
    random_smooth_expr,
)

V = PolynomialPotential.harmonic()


@pytest.fixture(scope="module")
def pairs(grid256):
    return solve_config(V, 1.0, grid256, 6)


def test_harmonic_spectrum_512(grid512):
    pairs = solve_config(V, 1.0, grid512, 6)
    for n, pr in enumerate(pairs):
        assert abs(pr.energy - (n + 0.5)) / (n + 0.5) < 1e-8
        assert pr.residual < 1e-8


def test_scaled_oscillator_spectrum(grid256):
    m, w = 2.0, 0.7
    pairs = solve_config(PolynomialPotential.harmonic(m, w), m, grid256, 4)
    assert max(abs(p.energy - w * (n + 0.5)) for n, p in enumerate(pairs)) < 1e-8


def test_ground_state_overlap(pairs, grid256, unit):
    assert abs(pairs[0].state.inner(oscillator_eigenstate(0, unit, grid256))) > 1 - 1e-10


def test_quartic_states_are_normalized_and_sorted(grid256):
    pairs = solve_config(PolynomialPotential((0.0, 0.3, -1.0, 0.0, 0.1)), 1.0, grid256, 5)
    energies = [p.energy for p in pairs]
    assert energies == sorted(energies)
    assert all(abs(p.state.norm - 1) < 1e-12 for p in pairs)


@pytest.mark.parametrize("coeffs", [(0.0, 0.0, -1.0), (0.0, 1.0), (0.0, 0.0, 0.0, 1.0), (1.0,)])
def test_non_confining(coeffs, grid128):
    with pytest.raises(NonConfiningError):
        solve_config(PolynomialPotential(coeffs), 1.0, grid128, 2)


def test_degree_cap():
    with pytest.raises(ValueError):
        PolynomialPotential((0, 0, 0, 0, 0, 1.0))


def test_leakage_on_too_small_box():
    with pytest.raises(BoundaryLeakageError):
        solve_config(V, 1.0, square_grid(3.0, 64), 4)


def test_lifted_eigenstates_solve_phase_equation(pairs, grid256):
    A = canonical_connection(grid256)
    for n, pr in enumerate(pairs[:5]):
        Psi = lift_state(pr.state, "p*q/2")
        assert phase_residual(A, V, 1.0, Psi, pr.energy) < 1e-6


def test_wrong_energy_gives_energy_gap(pairs, grid256):
    A = canonical_connection(grid256)
    Psi = lift_state(pairs[2].state, "p*q/2")
    assert abs(phase_residual(A, V, 1.0, Psi, pairs[2].energy + 0.5) - 0.5) < 1e-6


def test_noncanonical_generator(pairs, grid256):
    f = "p*q/2 + 0.1*sin(q)"
    A = connection_from_generating(f, grid256)
    for pr in pairs[:3]:
        assert phase_residual(A, V, 1.0, lift_state(pr.state, f), pr.energy) < 1e-6


def test_zero_generator_is_standard_representation(pairs, grid256):
    A = connection_from_generating("0", grid256)
    psi = pairs[1].state
    out = apply_phase_hamiltonian(A, V, 1.0, lift_state(psi, "0")).samples
    H = config_hamiltonian(V, 1.0, grid256)
    hpsi = H @ psi.samples
    assert np.max(np.abs(out - hpsi[:, None])) < 1e-10


def test_zero_state_maps_to_zero(grid128):
    Z = PhaseState(np.zeros(grid128.shape), grid128)
    out = apply_phase_hamiltonian(canonical_connection(grid128), V, 1.0, Z)
    assert not np.any(out.envelope)


def test_sweep_examples(grid256):
    canon = equivalence_sweep(V, 1.0, grid256, ["p*q/2"], 4)
    assert len(canon) == 4 and max(r.phase_residual for r in canon) < 1e-6
    zero = equivalence_sweep(V, 1.0, grid256, ["0"], 2)
    assert max(r.phase_residual for r in zero) < 1e-8


def test_sweep_random_generators(grid256):
    rng = np.random.default_rng(7)
    rows = equivalence_sweep(V, 1.0, grid256, [random_smooth_expr(rng) for _ in range(5)], 3)
    assert len(rows) == 15
    assert all(not r.error for r in rows)
    assert max(r.phase_residual for r in rows) < 1e-5
    assert max(r.integrability_residual for r in rows) < 1e-8
    assert max(abs(r.rayleigh_energy - r.energy) for r in rows) < 1e-6


def test_sweep_records_bad_cells_without_aborting(grid128):
    rows = equivalence_sweep(V, 1.0, grid128, ["1/q", "p*q/2"], 2)
    assert len(rows) == 4
    assert all(r.error for r in rows[:2]) and not any(r.error for r in rows[2:])


def test_cross_pairing_only_matching_pairs_vanish(grid256):
    R = cross_pairing_residuals(V, 1.0, grid256, ["p*q/2", "0", "p*q/2 + 0.2*cos(q)"], 2)
    assert np.all(np.diagonal(R).T < 1e-6)
    off = ~np.eye(3, dtype=bool)
    assert np.max(R[off]) > 1e-2


@given(st.integers(0, 2**32 - 1))
def test_hermiticity(seed):
    g = square_grid(12.0, 128)
    rng = np.random.default_rng(seed)
    A = connection_from_generating(random_smooth_expr(rng), g)
    Vr = PolynomialPotential(
        (
            0.0,
            rng.uniform(-1, 1),
            rng.uniform(0.1, 1),
            rng.uniform(-0.1, 0.1),
            rng.uniform(0.01, 0.1),
        )
    )
    a, b = random_band_limited_field(rng, g), random_band_limited_field(rng, g)
    lhs = a.inner(apply_phase_hamiltonian(A, Vr, 1.0, b))
    rhs = apply_phase_hamiltonian(A, Vr, 1.0, a).inner(b)
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_rayleigh_energy_matches_spectrum(pairs, grid256):
    f = "p*q/2 + 0.3*tanh(q)*sin(p)"
    A = connection_from_generating(f, grid256)
    for pr in pairs[:3]:
        assert abs(rayleigh_energy(A, V, 1.0, lift_state(pr.state, f)) - pr.energy) < 1e-6
