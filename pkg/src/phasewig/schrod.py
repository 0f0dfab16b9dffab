"""Configuration-space eigenproblem and the phase-space Hamiltonian built from covariant operators."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import asdict, dataclass

import numpy as np
from scipy.linalg import eigh

from . import exprlang as el
from .numgrid import BoundaryLeakageError, PhaseGrid
from .states import PhaseState, Wavefunction, lift_state
from .symcalc import (
    Connection,
    apply_p,
    apply_q,
    as_generating,
    commutator_residual,
    connection_from_generating,
    integrability_residual,
)

MAX_POTENTIAL_DEGREE = 4
LEAKAGE_TOL = 1e-10


class NonConfiningError(ValueError):
    pass


@dataclass(frozen=True)
class PolynomialPotential:
    """V(q) = sum_k c_k q^k, k <= 4, with an even positive leading term."""

    coefficients: tuple

    def __post_init__(self):
        c = [float(x) for x in self.coefficients]
        while len(c) > 1 and c[-1] == 0.0:
            c.pop()
        if len(c) - 1 > MAX_POTENTIAL_DEGREE:
            raise ValueError(f"potential degree {len(c) - 1} exceeds {MAX_POTENTIAL_DEGREE}")
        object.__setattr__(self, "coefficients", tuple(c))

    @classmethod
    def harmonic(cls, mass: float = 1.0, omega: float = 1.0) -> PolynomialPotential:
        return cls((0.0, 0.0, 0.5 * mass * omega**2))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    def is_confining(self) -> bool:
        return self.degree >= 2 and self.degree % 2 == 0 and self.coefficients[-1] > 0

    def __call__(self, q):
        return np.polynomial.polynomial.polyval(q, self.coefficients)


@dataclass(frozen=True)
class EigenPair:
    energy: float
    state: Wavefunction
    residual: float


def laplacian_matrix(n: int, spacing: float) -> np.ndarray:
    """Dense Fourier second-derivative matrix on a periodic grid (symmetric)."""
    k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    col = np.fft.ifft(-(k**2)).real
    idx = np.arange(n)
    return col[(idx[:, None] - idx[None, :]) % n]


def config_hamiltonian(V: PolynomialPotential, mass: float, grid: PhaseGrid) -> np.ndarray:
    lap = laplacian_matrix(grid.q_axis.n, grid.q_axis.h)
    return -(grid.hbar**2) / (2 * mass) * lap + np.diag(V(grid.q))


def solve_config(V: PolynomialPotential, mass: float, grid: PhaseGrid, k: int) -> list[EigenPair]:
    if not V.is_confining():
        raise NonConfiningError(f"potential with coefficients {V.coefficients} is not confining")
    if mass <= 0:
        raise ValueError("mass must be positive")
    H = config_hamiltonian(V, mass, grid)
    energies, vecs = eigh(H, subset_by_index=[0, k - 1])
    h = grid.q_axis.h
    pairs = []
    for n in range(k):
        v = vecs[:, n]
        # deterministic sign: largest component positive
        v = v * np.sign(v[np.argmax(np.abs(v))])
        edge = max(abs(v[0]), abs(v[-1])) / np.abs(v).max()
        if n == k - 1 and edge > LEAKAGE_TOL:
            raise BoundaryLeakageError(f"eigenstate {n} does not decay at the grid edge (edge/peak = {edge:.3e})")
        psi = v / np.sqrt(np.sum(v**2) * h)
        residual = float(np.linalg.norm(H @ psi - energies[n] * psi) / np.linalg.norm(psi))
        pairs.append(
            EigenPair(
                float(energies[n]),
                Wavefunction(psi, grid, {"kind": "eigenstate", "n": n}),
                residual,
            )
        )
    return pairs


def apply_phase_hamiltonian(A: Connection, V: PolynomialPotential, mass: float, Psi: PhaseState) -> PhaseState:
    """(1/2m) P P Psi + V(Q) Psi, with V(Q) composed in Horner order."""
    if V.degree > MAX_POTENTIAL_DEGREE:
        raise ValueError(f"potential degree {V.degree} exceeds {MAX_POTENTIAL_DEGREE}")
    kinetic = apply_p(A, apply_p(A, Psi)).scale(1.0 / (2 * mass))
    coeffs = V.coefficients
    pot = Psi.scale(coeffs[-1])
    for c in reversed(coeffs[:-1]):
        pot = apply_q(A, pot) + Psi.scale(c)
    return kinetic + pot


def phase_residual(
    A: Connection,
    V: PolynomialPotential,
    mass: float,
    Psi: PhaseState,
    E: float,
    margin: float = 0.1,
) -> float:
    """||(H - E) Psi|| / ||Psi|| over the interior of the grid."""
    r = apply_phase_hamiltonian(A, V, mass, Psi) - Psi.scale(E)
    mask = Psi.grid.interior_mask(margin)
    return r.norm(mask) / Psi.norm(mask)


def rayleigh_energy(
    A: Connection,
    V: PolynomialPotential,
    mass: float,
    Psi: PhaseState,
    margin: float = 0.1,
) -> float:
    """Re <Psi, H Psi> / <Psi, Psi> over the interior."""
    HPsi = apply_phase_hamiltonian(A, V, mass, Psi)
    mask = Psi.grid.interior_mask(margin)
    num = np.vdot(np.where(mask, Psi.envelope, 0), HPsi.envelope).real
    den = np.vdot(np.where(mask, Psi.envelope, 0), Psi.envelope).real
    return float(num / den)


@dataclass(frozen=True)
class SweepRow:
    f: str
    n: int
    energy: float
    phase_residual: float
    integrability_residual: float
    commutator_residual: float
    rayleigh_energy: float
    error: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def equivalence_sweep(V: PolynomialPotential, mass: float, grid: PhaseGrid, f_list: Sequence, k: int) -> list[SweepRow]:
    """One row per (f, eigenstate): lift with f, connection from f, residuals. Failures become rows."""
    pairs = solve_config(V, mass, grid, k)
    rows = []
    for f in f_list:
        gf = as_generating(f)
        text = el.to_text(gf.expr)
        try:
            A = connection_from_generating(gf, grid)
            integ = float(np.max(np.abs(integrability_residual(A))))
        except Exception as exc:  # noqa: BLE001 recorded per cell, the sweep goes on
            rows.extend(SweepRow(text, n, pr.energy, np.nan, np.nan, np.nan, np.nan, repr(exc)) for n, pr in enumerate(pairs))
            continue
        for n, pr in enumerate(pairs):
            try:
                Psi = lift_state(pr.state, gf)
                rows.append(
                    SweepRow(
                        text,
                        n,
                        pr.energy,
                        phase_residual(A, V, mass, Psi, pr.energy),
                        integ,
                        commutator_residual(A, Psi),
                        rayleigh_energy(A, V, mass, Psi),
                    )
                )
            except Exception as exc:  # noqa: BLE001
                rows.append(SweepRow(text, n, pr.energy, np.nan, integ, np.nan, np.nan, repr(exc)))
    return rows


def cross_pairing_residuals(V: PolynomialPotential, mass: float, grid: PhaseGrid, f_list: Sequence, k: int) -> np.ndarray:
    """R[i, j, n]: state lifted with f_i, connection built from f_j, eigenstate n."""
    pairs = solve_config(V, mass, grid, k)
    gens = [as_generating(f) for f in f_list]
    conns = [connection_from_generating(g, grid) for g in gens]
    out = np.empty((len(gens), len(gens), k))
    for i, gi in enumerate(gens):
        lifted = [lift_state(pr.state, gi) for pr in pairs]
        for j, A in enumerate(conns):
            for n, pr in enumerate(pairs):
                out[i, j, n] = phase_residual(A, V, mass, lifted[n], pr.energy)
    return out
