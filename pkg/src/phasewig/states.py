"""Configuration-space wavefunctions and their lifts to phase space."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from . import exprlang as el
from .numgrid import BoundaryLeakageError, PhaseGrid, spectral_derivative

MAX_OSCILLATOR_N = 32
MAX_PHI_DEGREE = 32
LEAKAGE_TOL = 1e-10


@dataclass(frozen=True)
class OscillatorParams:
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if not (self.mass > 0 and self.omega > 0):
            raise ValueError("oscillator mass and frequency must be positive")


@dataclass(frozen=True)
class Wavefunction:
    """Samples of psi(q) on the grid's q axis."""

    samples: np.ndarray
    grid: PhaseGrid
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        s = np.array(self.samples, dtype=complex)
        if s.shape != (self.grid.q_axis.n,):
            raise ValueError(f"wavefunction has {s.shape} samples, grid has {self.grid.q_axis.n}")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.grid.q_axis.h))

    def leakage(self) -> float:
        """Edge magnitude relative to peak magnitude."""
        a = np.abs(self.samples)
        return float(max(a[0], a[-1]) / a.max())

    def inner(self, other: Wavefunction) -> complex:
        return complex(np.vdot(self.samples, other.samples) * self.grid.q_axis.h)

    def momentum_amplitude(self, p: np.ndarray | None = None) -> np.ndarray:
        """psi~(p) = (2 pi hbar)^(-1/2) int psi(q) exp(-i p q / hbar) dq on the p axis."""
        g = self.grid
        p = g.p if p is None else np.asarray(p)
        kernel = np.exp(-1j * np.outer(p, g.q) / g.hbar)
        return kernel @ self.samples * g.q_axis.h / np.sqrt(2 * np.pi * g.hbar)


def _check_leakage(psi: np.ndarray, what: str, tol: float = LEAKAGE_TOL) -> None:
    a = np.abs(psi)
    peak = a.max()
    edge = max(a[0], a[-1])
    if peak == 0 or edge > tol * peak:
        raise BoundaryLeakageError(f"{what} does not decay at the grid edge (edge/peak = {edge / peak if peak else np.inf:.3e})")


def _normalize(psi: np.ndarray, h: float) -> np.ndarray:
    return psi / np.sqrt(np.sum(np.abs(psi) ** 2) * h)


def hermite_functions(n_max: int, xi: np.ndarray) -> np.ndarray:
    """Normalized Hermite functions h_0..h_{n_max} at ``xi`` (rows), by the three-term recurrence.

    h_{n+1} = sqrt(2/(n+1)) xi h_n - sqrt(n/(n+1)) h_{n-1}; each row has unit L2 norm in xi.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.empty((n_max + 1,) + xi.shape)
    out[0] = np.pi**-0.25 * np.exp(-0.5 * xi**2)
    if n_max >= 1:
        out[1] = np.sqrt(2.0) * xi * out[0]
    for n in range(1, n_max):
        out[n + 1] = np.sqrt(2.0 / (n + 1)) * xi * out[n] - np.sqrt(n / (n + 1)) * out[n - 1]
    return out


def oscillator_eigenstate(n: int, params: OscillatorParams, grid: PhaseGrid) -> Wavefunction:
    if not (0 <= n <= MAX_OSCILLATOR_N):
        raise ValueError(f"oscillator level must lie in [0, {MAX_OSCILLATOR_N}]")
    scale = np.sqrt(params.mass * params.omega / grid.hbar)
    xi = scale * grid.q
    psi = hermite_functions(n, xi)[n] * np.sqrt(scale)
    _check_leakage(psi, f"oscillator state n={n}")
    psi = _normalize(psi, grid.q_axis.h)
    return Wavefunction(
        psi,
        grid,
        {"kind": "oscillator", "n": n, "mass": params.mass, "omega": params.omega},
    )


def gaussian_packet(q0: float, p0: float, sigma: float, grid: PhaseGrid) -> Wavefunction:
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    q = grid.q
    psi = (2 * np.pi * sigma**2) ** -0.25 * np.exp(-((q - q0) ** 2) / (4 * sigma**2)) * np.exp(1j * p0 * q / grid.hbar)
    _check_leakage(psi, "gaussian packet")
    psi = _normalize(psi, grid.q_axis.h)
    return Wavefunction(psi, grid, {"kind": "gaussian", "q0": q0, "p0": p0, "sigma": sigma})


def from_samples(samples, grid: PhaseGrid, normalize: bool = True, check: bool = True) -> Wavefunction:
    psi = np.asarray(samples, dtype=complex)
    if check:
        _check_leakage(psi, "wavefunction")
    if normalize:
        psi = _normalize(psi, grid.q_axis.h)
    return Wavefunction(psi, grid, {"kind": "samples"})


# ---------------------------------------------------------------- Gaussian-factor states


@dataclass(frozen=True)
class GaussianFactorState:
    """psi(q) = exp(-a q^2) phi(q) with polynomial phi (coefficients ascending in q)."""

    a: float
    phi: tuple

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("Gaussian parameter a must be positive")
        coeffs = tuple(complex(c) for c in self.phi)
        if not coeffs:
            raise ValueError("phi needs at least one coefficient")
        object.__setattr__(self, "phi", coeffs)

    @property
    def degree(self) -> int:
        return len(self.phi) - 1

    def wavefunction(self, grid: PhaseGrid) -> Wavefunction:
        q = grid.q
        psi = np.exp(-self.a * q**2) * np.polynomial.polynomial.polyval(q, np.array(self.phi))
        return Wavefunction(psi, grid, {"kind": "gaussian-factor", "a": self.a, "degree": self.degree})


def oscillator_factor_state(n: int, params: OscillatorParams, hbar: float) -> GaussianFactorState:
    """Exact Gaussian-factor form of the n-th oscillator eigenstate."""
    if not (0 <= n <= MAX_OSCILLATOR_N):
        raise ValueError(f"oscillator level must lie in [0, {MAX_OSCILLATOR_N}]")
    s = np.sqrt(params.mass * params.omega / hbar)
    herm = np.zeros(n + 1)
    herm[n] = 1.0
    coeffs = np.polynomial.hermite.herm2poly(herm)
    coeffs = coeffs * s ** np.arange(n + 1)
    norm = (s**2 / np.pi) ** 0.25 / np.sqrt(2.0**n * factorial(n))
    return GaussianFactorState(a=0.5 * params.mass * params.omega / hbar, phi=tuple(coeffs * norm))


def packet_factor_state(q0: float, p0: float, sigma: float, hbar: float) -> GaussianFactorState | None:
    """Gaussian-factor form of a centred, unboosted packet; None when phi is not polynomial."""
    if q0 != 0 or p0 != 0:
        return None
    return GaussianFactorState(a=1.0 / (4 * sigma**2), phi=((2 * np.pi * sigma**2) ** -0.25,))


@dataclass(frozen=True)
class FactorizationReport:
    finite: bool
    integral: float
    max_phi: float
    fit_residual: float
    growth_exponent: float
    refinement_change: float


OVERFLOW_GUARD = 1e150
FIT_TOL = 1e-8
REFINE_TOL = 1e-6


def factorization_check(psi: Wavefunction, a: float, degree: int = MAX_PHI_DEGREE) -> FactorizationReport:
    """Decide operationally whether psi = exp(-a q^2) phi(q) with a tame phi.

    ``finite`` requires: phi = psi exp(a q^2) below an overflow guard on the grid,
    psi lying in span{exp(-a q^2) q^k, k <= degree} to relative L2 residual
    ``FIT_TOL``, max|phi| growing between half and full range by no more than a
    degree-``degree`` polynomial can (the Chebyshev bound T_degree(2)), and the quadrature value of
    int exp(-2 a q^2) |phi|^2 dq changing by less than ``REFINE_TOL`` between the
    full grid and its every-other-sample subgrid.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    g = psi.grid
    q = g.q
    h = g.q_axis.h
    s = psi.samples
    with np.errstate(over="ignore", invalid="ignore"):
        phi = s * np.exp(a * q**2)
    ok = np.isfinite(phi) & (np.abs(phi) <= OVERFLOW_GUARD)
    max_phi = float(np.max(np.abs(np.where(ok, phi, 0.0))))
    weighted = np.where(ok, np.exp(-2 * a * q**2) * np.abs(np.where(ok, phi, 0.0)) ** 2, 0.0)
    integral = float(weighted.sum() * h)
    coarse = float(weighted[::2].sum() * 2 * h)
    refinement_change = abs(coarse - integral) / abs(integral) if integral else np.inf

    # tempered-growth test: least squares in the Hermite-function basis of width a
    basis = hermite_functions(degree, np.sqrt(2 * a) * q).T
    coef, *_ = np.linalg.lstsq(basis, s, rcond=None)
    resid = s - basis @ coef
    fit_residual = float(np.linalg.norm(resid) / np.linalg.norm(s))

    # growth exponent: log2 of max|phi| over |q| <= L against |q| <= L/2
    r = np.abs(q)
    L = r.max()
    mag = np.abs(np.where(ok, phi, np.inf))
    outer, inner = mag.max(), mag[r <= L / 2].max()
    with np.errstate(divide="ignore", invalid="ignore"):
        growth = float(np.log2(outer / inner)) if inner > 0 else np.inf
    if not np.isfinite(growth):
        growth = np.inf

    growth_bound = float(np.log2(np.cosh(degree * np.arccosh(2.0))))
    finite = bool(ok.all() and fit_residual < FIT_TOL and growth <= growth_bound and refinement_change < REFINE_TOL)
    return FactorizationReport(finite, integral, max_phi, fit_residual, growth, refinement_change)


# ---------------------------------------------------------------- phase-space states


@dataclass(frozen=True)
class PhaseState:
    """Psi(q, p) = exp(-i f(q, p) / hbar) * envelope(q, p).

    Lifted states keep f symbolic so derivatives of the (generally non-periodic)
    phase are exact; the envelope is what gets differentiated spectrally.
    ``phase`` is None for plain sampled fields.
    """

    envelope: np.ndarray
    grid: PhaseGrid
    phase: el.Expr | None = None
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        env = np.array(self.envelope, dtype=complex)
        if env.shape != self.grid.shape:
            raise ValueError(f"envelope shape {env.shape} != grid shape {self.grid.shape}")
        env.setflags(write=False)
        object.__setattr__(self, "envelope", env)

    def phase_values(self) -> np.ndarray:
        if self.phase is None:
            return np.zeros(self.grid.shape)
        return el.eval_on_grid(self.phase, self.grid)

    @property
    def samples(self) -> np.ndarray:
        if self.phase is None:
            return self.envelope
        return np.exp(-1j * self.phase_values() / self.grid.hbar) * self.envelope

    def with_envelope(self, envelope) -> PhaseState:
        return PhaseState(envelope, self.grid, self.phase)

    def derivative(self, axis: str) -> PhaseState:
        """d/dq or d/dp: spectral on the envelope, symbolic on the phase."""
        g = self.grid
        i = 0 if axis == "q" else 1
        d_env = spectral_derivative(self.envelope, g.axis(axis).h, axis=i)
        if self.phase is not None:
            dphase = el.eval_on_grid(el.diff(self.phase, axis), g)
            d_env = d_env - 1j / g.hbar * dphase * self.envelope
        return self.with_envelope(d_env)

    def __add__(self, other: PhaseState) -> PhaseState:
        _same_gauge(self, other)
        return self.with_envelope(self.envelope + other.envelope)

    def __sub__(self, other: PhaseState) -> PhaseState:
        _same_gauge(self, other)
        return self.with_envelope(self.envelope - other.envelope)

    def scale(self, c) -> PhaseState:
        return self.with_envelope(c * self.envelope)

    def multiply(self, values: np.ndarray) -> PhaseState:
        return self.with_envelope(np.asarray(values) * self.envelope)

    def norm(self, mask: np.ndarray | None = None) -> float:
        a = np.abs(self.envelope) ** 2
        if mask is not None:
            a = np.where(mask, a, 0.0)
        return float(np.sqrt(a.sum() * self.grid.q_axis.h * self.grid.p_axis.h))

    def inner(self, other: PhaseState) -> complex:
        _same_gauge(self, other)
        g = self.grid
        return complex(np.vdot(self.envelope, other.envelope) * g.q_axis.h * g.p_axis.h)


def _same_gauge(a: PhaseState, b: PhaseState) -> None:
    if a.grid != b.grid or a.phase != b.phase:
        raise ValueError("phase-space states live on different grids or carry different phases")


def lift_state(psi: Wavefunction, f, grid: PhaseGrid | None = None) -> PhaseState:
    """Psi_f(q, p) = exp(-i f(q, p)/hbar) psi(q)."""
    grid = psi.grid if grid is None else grid
    expr = _generator_expr(f)
    el.eval_on_grid(expr, grid)  # raises DomainError on non-finite f
    env = np.repeat(psi.samples[:, None], grid.p_axis.n, axis=1)
    phase = None if expr == el.ZERO else expr
    return PhaseState(env, grid, phase, {"source": dict(psi.provenance), "f": el.to_text(expr)})


def _generator_expr(f) -> el.Expr:
    expr = getattr(f, "expr", f)
    return el.as_expr(expr)


def born_residual(Psi: PhaseState, psi: Wavefunction) -> float:
    """max | |Psi(q,p)| - |psi(q)| |."""
    if Psi.grid.q_axis.n != psi.samples.shape[0]:
        raise ValueError("phase state and wavefunction have different q samples")
    return float(np.max(np.abs(np.abs(Psi.samples) - np.abs(psi.samples)[:, None])))
