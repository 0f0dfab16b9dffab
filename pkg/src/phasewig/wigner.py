"""Wigner functions by three routes.

* :func:`wigner_direct` evaluates the correlation integral
  ``W(q,p) = (2 pi hbar)^-1 int dy psi*(q - y/2) psi(q + y/2) exp(-i p y / hbar)``.
* :func:`wigner_tegmen` uses the integral-free form for psi = exp(-a q^2) phi(q)
  with polynomial phi: a polynomial differential operator in d/dp applied to a
  Gaussian in p.
* :func:`covariant_wigner` builds the bra and ket from a lifted state and the
  exponentiated covariant momentum, evaluated along its characteristics.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import exprlang as el
from .numgrid import BoundaryLeakageError, PhaseGrid, spectral_shift
from .states import MAX_PHI_DEGREE, GaussianFactorState, Wavefunction
from .symcalc import Connection, connection_from_generating

LEAKAGE_TOL = 1e-10
REALNESS_TOL = 1e-6


class RealnessError(ValueError):
    pass


class DegreeOverflowError(ValueError):
    pass


class ResolutionError(ValueError):
    pass


@dataclass(frozen=True)
class WignerField:
    values: np.ndarray
    grid: PhaseGrid
    route: str
    imag_discarded: float = 0.0
    leakage: float = 0.0
    provenance: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"Wigner values shape {v.shape} != grid shape {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def total(self) -> float:
        g = self.grid
        return float(self.values.sum() * g.q_axis.h * g.p_axis.h)

    def at(self, q: float, p: float) -> float:
        """Value at the grid node nearest to (q, p)."""
        g = self.grid
        i = int(np.argmin(np.abs(g.q - q)))
        j = int(np.argmin(np.abs(g.p - p)))
        return float(self.values[i, j])


def _check_state(psi: Wavefunction) -> float:
    a = np.abs(psi.samples)
    leak = float(max(a[0], a[-1]) / a.max())
    if leak > LEAKAGE_TOL:
        raise BoundaryLeakageError(f"state does not decay at the grid edge (edge/peak = {leak:.3e})")
    return leak


def _check_nyquist(grid: PhaseGrid, y_spacing: float) -> None:
    p_max = max(abs(grid.p_axis.min), abs(grid.p_axis.max))
    limit = np.pi * grid.hbar / y_spacing
    if p_max >= limit:
        raise ResolutionError(f"|p| up to {p_max} exceeds the y-sampling limit {limit:.4g}; refine the q axis")


def wigner_direct(psi: Wavefunction, grid: PhaseGrid | None = None, check_realness: bool = True) -> WignerField:
    grid = psi.grid if grid is None else grid
    leak = _check_state(psi)
    n = grid.q_axis.n
    h = grid.q_axis.h
    hbar = grid.hbar
    _check_nyquist(grid, h)

    # psi on the half-spaced lattice q_min + k h / 2, zero padded on both sides
    half = spectral_shift(psi.samples, h, 0.5 * h)
    fine = np.empty(2 * n, dtype=complex)
    fine[0::2] = psi.samples
    fine[1::2] = half
    pad = 2 * n
    padded = np.concatenate([np.zeros(pad, complex), fine, np.zeros(pad, complex)])

    k = np.arange(-n, n)  # y_k = k h
    j2 = 2 * np.arange(n)[:, None]
    corr = np.conj(padded[pad + j2 - k]) * padded[pad + j2 + k]
    kernel = np.exp(-1j * np.outer(k * h, grid.p) / hbar)
    raw = corr @ kernel * (h / (2 * np.pi * hbar))

    imag = float(np.max(np.abs(raw.imag)))
    if check_realness and imag > REALNESS_TOL:
        raise RealnessError(f"direct transform has imaginary part {imag:.3e}")
    return WignerField(raw.real, grid, "direct", imag, leak, {"source": dict(psi.provenance)})


# ---------------------------------------------------------------- integral-free route


def _gaussian_derivatives(p: np.ndarray, beta: float, order: int) -> np.ndarray:
    """Rows n = 0..order of d^n/dp^n exp(-beta p^2)."""
    out = np.empty((order + 1,) + p.shape)
    out[0] = np.exp(-beta * p**2)
    if order >= 1:
        out[1] = -2 * beta * p * out[0]
    for n in range(1, order):
        out[n + 1] = -2 * beta * p * out[n] - 2 * beta * n * out[n - 1]
    return out


def _taylor_rows(coeffs: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Rows j of phi^(j)(q) / j! for polynomial coefficients (ascending)."""
    d = len(coeffs) - 1
    rows = np.zeros((d + 1, q.size), dtype=complex)
    for j in range(d + 1):
        shifted = np.array([coeffs[k] * comb(k, j) for k in range(j, d + 1)])
        rows[j] = np.polynomial.polynomial.polyval(q, shifted)
    return rows


def wigner_tegmen(state: GaussianFactorState, grid: PhaseGrid, check_realness: bool = True) -> WignerField:
    """W = (hbar sqrt(2 pi a))^-1 exp(-2 a q^2) phi*(q - c d_p) phi(q + c d_p) exp(-p^2 / (2 a hbar^2)), c = i hbar / 2.

    phi* has conjugated coefficients. Both operator polynomials are expanded in
    powers of d/dp (they commute), and d^n/dp^n of the Gaussian comes from its
    three-term recurrence.
    """
    if state.degree > MAX_PHI_DEGREE:
        raise DegreeOverflowError(f"phi has degree {state.degree} > {MAX_PHI_DEGREE}")
    hbar = grid.hbar
    a = state.a
    q, p = grid.q, grid.p
    coeffs = np.array(state.phi)
    d = state.degree
    c = 0.5j * hbar

    ket_rows = _taylor_rows(coeffs, q) * (c ** np.arange(d + 1))[:, None]
    bra_rows = _taylor_rows(np.conj(coeffs), q) * ((-c) ** np.arange(d + 1))[:, None]
    op = np.zeros((2 * d + 1, q.size), dtype=complex)
    for i in range(d + 1):
        op[i : i + d + 1] += bra_rows[i] * ket_rows
    gauss = _gaussian_derivatives(p, 1.0 / (2 * a * hbar**2), 2 * d)
    raw = op.T @ gauss
    raw *= (np.exp(-2 * a * q**2) / (hbar * np.sqrt(2 * np.pi * a)))[:, None]

    imag = float(np.max(np.abs(raw.imag)))
    if check_realness and imag > REALNESS_TOL:
        raise RealnessError(f"integral-free transform has imaginary part {imag:.3e}")
    return WignerField(raw.real, grid, "tegmen", imag, 0.0, {"a": a, "degree": d})


# ---------------------------------------------------------------- covariant route


def effective_generator(f, convention: str = "half") -> el.Expr:
    """The function whose value at (y, p) sets the phase of Psi(y/2, p).

    'half': f is evaluated at (y/2, p), the convention under which f = p q
    reproduces the direct integral with the canonical connection.
    'literal': f is evaluated at (y, p).
    """
    expr = el.as_expr(getattr(f, "expr", f))
    if convention == "half":
        return el.substitute(expr, {"q": el.div(el.Var("q"), el.Num(2.0))})
    if convention == "literal":
        return expr
    raise ValueError(f"unknown convention {convention!r}")


def _phase_integral(A: Connection, y0: np.ndarray, y1: np.ndarray, p: np.ndarray, nodes: int = 24) -> np.ndarray:
    """int_{y0}^{y1} A_q(s, p) ds, exactly from the generator when known."""
    if A.generator is not None:
        return el.eval_points(A.generator, y1, p) - el.eval_points(A.generator, y0, p)
    if A.exprs is None:
        raise ValueError("connection has neither a generator nor component expressions; cannot evaluate off the grid")
    x, w = np.polynomial.legendre.leggauss(nodes)
    mid = 0.5 * (y0 + y1)
    half = 0.5 * (y1 - y0)
    total = np.zeros(np.broadcast(y0, y1, p).shape)
    for xi, wi in zip(x, w):
        total = total + wi * el.eval_points(A.exprs[0], mid + half * xi, p)
    return total * half


def covariant_wigner(
    psi: Wavefunction,
    f,
    grid: PhaseGrid | None = None,
    *,
    convention: str = "half",
    connection: Connection | None = None,
) -> WignerField:
    """Wigner function from the covariant bra/ket construction.

    The ket is exp((2iq/hbar) P)[Psi(y/2, p)] with P = A_q(y, p) - i hbar d/dy.
    Along the characteristics of P that operator is the translation y -> y + 2q
    times exp((i/hbar) int_y^{y+2q} A_q(s, p) ds). The bra is
    exp(-(2iq/hbar) P)[Psi*(-y/2, p)]. W = (2 pi hbar)^-1 int dy bra * ket.

    By default the connection is built from the effective generator (see
    :func:`effective_generator`), which for f = p q is the canonical one.
    """
    grid = psi.grid if grid is None else grid
    leak = _check_state(psi)
    g_eff = effective_generator(f, convention)
    A = connection_from_generating(g_eff, grid) if connection is None else connection
    hbar = grid.hbar
    n = grid.q_axis.n
    h = grid.q_axis.h
    dy = 2 * h
    _check_nyquist(grid, dy)
    q_min = grid.q_axis.min
    p = grid.p[None, :]

    # y lattice Y_m = 2 q_min + dy (m - pad); Y/2 then falls on the q samples for m in [pad, pad + n)
    pad = int(np.ceil(max(abs(grid.q_axis.min), abs(grid.q_axis.max)) / h)) + n // 2 + 2
    size = n + 2 * pad
    Y = 2 * q_min + dy * (np.arange(size) - pad)

    psi_half_arg = np.zeros(size, complex)
    psi_half_arg[pad : pad + n] = psi.samples
    ket_base = np.exp(-1j * el.eval_points(g_eff, Y[:, None], p) / hbar) * psi_half_arg[:, None]

    # psi(-Y/2): reversed index k holds psi(q_last - k h); we need psi(-q_min - (m - pad) h),
    # i.e. reversed index m - pad - t with t = (-q_min - q_last) / h
    t = (-q_min - (grid.q_axis.max - h)) / h
    whole = int(np.round(t))
    reflected = spectral_shift(psi.samples[::-1], h, -(t - whole) * h)
    psi_neg_arg = np.zeros(size, complex)
    lo = pad + whole
    k0, k1 = max(0, -lo), min(n, size - lo)
    psi_neg_arg[lo + k0 : lo + k1] = reflected[k0:k1]
    bra_base = np.conj(np.exp(-1j * el.eval_points(g_eff, -Y[:, None], p) / hbar) * psi_neg_arg[:, None])

    # shifts by +-2 q_j: split into one common fractional part and whole lattice steps
    steps = 2 * grid.q / dy
    frac = float(steps[0] - np.round(steps[0]))
    ket_pre = spectral_shift(ket_base, dy, frac * dy, axis=0)
    bra_pre = spectral_shift(bra_base, dy, -frac * dy, axis=0)
    whole_steps = np.round(steps - frac).astype(int)

    if A.generator is not None:
        # exp(i g / hbar) on the lattice and on its two fractionally shifted copies;
        # the accumulated phase is then a ratio of lattice values
        e0 = np.exp(1j * el.eval_points(A.generator, Y[:, None], p) / hbar)
        e_ket = np.exp(1j * el.eval_points(A.generator, Y[:, None] + frac * dy, p) / hbar)
        e_bra = np.exp(1j * el.eval_points(A.generator, Y[:, None] - frac * dy, p) / hbar)

    raw = np.zeros(grid.shape, dtype=complex)
    support = np.nonzero(np.any(np.abs(ket_base) > 0, axis=1))[0]
    s_lo, s_hi = support[0], support[-1] + 1
    for j, qj in enumerate(grid.q):
        s = whole_steps[j]
        # ket(Y_m) needs ket_pre[m + s], bra(Y_m) needs bra_pre[m - s]
        m_lo = max(s_lo - s, 0, s)
        m_hi = min(s_hi - s, size, size + s)
        if m_hi <= m_lo:
            continue
        m = slice(m_lo, m_hi)
        mk = slice(m_lo + s, m_hi + s)
        mb = slice(m_lo - s, m_hi - s)
        if A.generator is not None:
            back = np.conj(e0[m])
            ket = ket_pre[mk] * (e_ket[mk] * back)
            bra = bra_pre[mb] * (e_bra[mb] * back)
        else:
            Yw = Y[m][:, None]
            ket = ket_pre[mk] * np.exp(1j * _phase_integral(A, Yw, Yw + 2 * qj, p) / hbar)
            bra = bra_pre[mb] * np.exp(1j * _phase_integral(A, Yw, Yw - 2 * qj, p) / hbar)
        raw[j] = np.einsum("ij,ij->j", bra, ket)
    raw *= dy / (2 * np.pi * hbar)

    imag = float(np.max(np.abs(raw.imag)))
    return WignerField(
        raw.real,
        grid,
        "covariant",
        imag,
        leak,
        {"f": el.to_text(el.as_expr(getattr(f, "expr", f))), "convention": convention},
    )


# ---------------------------------------------------------------- diagnostics


def marginals(W: WignerField) -> tuple[np.ndarray, np.ndarray]:
    """(int W dp as a function of q, int W dq as a function of p)."""
    g = W.grid
    return W.values.sum(axis=1) * g.p_axis.h, W.values.sum(axis=0) * g.q_axis.h


@dataclass(frozen=True)
class NegativityReport:
    min_value: float
    min_location: tuple[float, float]
    negative_fraction: float


def negativity_report(W: WignerField) -> NegativityReport:
    v = W.values
    idx = np.unravel_index(int(np.argmin(v)), v.shape)
    total = np.abs(v).sum()
    frac = float(np.abs(np.minimum(v, 0.0)).sum() / total) if total > 0 else 0.0
    return NegativityReport(float(v[idx]), (float(W.grid.q[idx[0]]), float(W.grid.p[idx[1]])), frac)
