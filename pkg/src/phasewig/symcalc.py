"""Forms, connections and gauge transformations on the (q, p) plane.

Connections are stored through their real components ``A_q`` (momentum units)
and ``A_p`` (length units); the covariant operators are

    Q = A_p + i hbar d/dp,     P = A_q - i hbar d/dq.

Everything built from an expression keeps that expression, so derivatives of
non-periodic fields (p q / 2, the canonical form -p dq, ...) are taken
symbolically and never spectrally.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RectBivariateSpline

from . import exprlang as el
from .numgrid import PhaseGrid, fd_derivative, spectral_derivative
from .states import PhaseState

GRADIENT_MISMATCH_WARN = 1e-6
EDGE_DECAY_TOL = 1e-10
CLOSEDNESS_GATE = 1e-6


class NotClosedError(ValueError):
    pass


class PathDomainError(ValueError):
    pass


class GradientMismatchWarning(UserWarning):
    pass


def _decays(values: np.ndarray, tol: float = EDGE_DECAY_TOL) -> bool:
    a = np.abs(values)
    peak = a.max()
    if peak == 0:
        return True
    edge = max(a[0].max(), a[-1].max(), a[:, 0].max(), a[:, -1].max())
    return edge <= tol * peak


# ---------------------------------------------------------------- generating functions


@dataclass(frozen=True)
class GeneratingFunction:
    """An action-valued function f(q, p), from an expression or from samples.

    Sample-only functions must decay at the grid edge: their gradients are
    spectral. Expression-backed functions use symbolic gradients.
    """

    expr: el.Expr | None = None
    samples: np.ndarray | None = None
    grid: PhaseGrid | None = None

    def __post_init__(self):
        if self.expr is None and self.samples is None:
            raise ValueError("generating function needs an expression or samples")
        if self.expr is not None:
            object.__setattr__(self, "expr", el.as_expr(self.expr))
        if self.samples is not None:
            if self.grid is None:
                raise ValueError("sampled generating function needs its grid")
            s = np.array(self.samples, dtype=float)
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)

    @classmethod
    def parse(cls, text: str) -> GeneratingFunction:
        return cls(el.parse(text))

    @property
    def text(self) -> str | None:
        return None if self.expr is None else el.to_text(self.expr)

    def values(self, grid: PhaseGrid) -> np.ndarray:
        if self.expr is not None:
            return el.eval_on_grid(self.expr, grid)
        self._check_grid(grid)
        return np.array(self.samples)

    def gradient_exprs(self) -> tuple[el.Expr, el.Expr] | None:
        if self.expr is None:
            return None
        return el.diff(self.expr, "q"), el.diff(self.expr, "p")

    def gradients(self, grid: PhaseGrid, method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
        """(df/dq, df/dp) on the grid."""
        if method == "auto":
            method = "symbolic" if self.expr is not None else "spectral"
        if method == "symbolic":
            if self.expr is None:
                raise ValueError("no expression to differentiate symbolically")
            dq, dp = self.gradient_exprs()
            return el.eval_on_grid(dq, grid), el.eval_on_grid(dp, grid)
        if method == "spectral":
            vals = self.values(grid)
            if not _decays(vals):
                raise ValueError("generating function does not decay at the grid edge; spectral gradients are not allowed")
            return (
                spectral_derivative(vals, grid.q_axis.h, axis=0),
                spectral_derivative(vals, grid.p_axis.h, axis=1),
            )
        raise ValueError(f"unknown gradient method {method!r}")

    def gradient_mismatch(self, grid: PhaseGrid) -> float | None:
        """Max difference between symbolic and spectral gradients; None if not comparable.

        Emits GradientMismatchWarning above 1e-6.
        """
        if self.expr is None or not _decays(self.values(grid)):
            return None
        sym = self.gradients(grid, "symbolic")
        spec = self.gradients(grid, "spectral")
        mismatch = float(max(np.max(np.abs(a - b)) for a, b in zip(sym, spec)))
        if mismatch > GRADIENT_MISMATCH_WARN:
            warnings.warn(
                f"symbolic and spectral gradients differ by {mismatch:.2e}",
                GradientMismatchWarning,
            )
        return mismatch

    def _check_grid(self, grid: PhaseGrid) -> None:
        if grid != self.grid:
            raise ValueError("sampled generating function used on a different grid")


def as_generating(f) -> GeneratingFunction:
    if isinstance(f, GeneratingFunction):
        return f
    return GeneratingFunction(el.as_expr(f))


CANONICAL = "p*q/2"
PRESETS = {"canonical": CANONICAL, "zero": "0"}


# ---------------------------------------------------------------- one-forms


@dataclass(frozen=True)
class OneForm:
    """alpha = alpha_q dq + alpha_p dp, sampled on a grid, optionally with exact expressions."""

    alpha_q: np.ndarray
    alpha_p: np.ndarray
    grid: PhaseGrid
    exprs: tuple[el.Expr, el.Expr] | None = None

    def __post_init__(self):
        aq = np.array(self.alpha_q, dtype=float)
        ap = np.array(self.alpha_p, dtype=float)
        if aq.shape != self.grid.shape or ap.shape != self.grid.shape:
            raise ValueError("one-form components must match the grid shape")
        if not (np.isfinite(aq).all() and np.isfinite(ap).all()):
            raise ValueError("one-form components must be finite")
        aq.setflags(write=False)
        ap.setflags(write=False)
        object.__setattr__(self, "alpha_q", aq)
        object.__setattr__(self, "alpha_p", ap)

    @classmethod
    def from_exprs(cls, aq, ap, grid: PhaseGrid) -> OneForm:
        eq, ep = el.as_expr(aq), el.as_expr(ap)
        return cls(el.eval_on_grid(eq, grid), el.eval_on_grid(ep, grid), grid, (eq, ep))

    def __add__(self, other: OneForm) -> OneForm:
        if other.grid != self.grid:
            raise ValueError("one-forms live on different grids")
        exprs = None
        if self.exprs is not None and other.exprs is not None:
            exprs = (
                el.add(self.exprs[0], other.exprs[0]),
                el.add(self.exprs[1], other.exprs[1]),
            )
        return OneForm(self.alpha_q + other.alpha_q, self.alpha_p + other.alpha_p, self.grid, exprs)

    def components_at(self, q, p) -> tuple[np.ndarray, np.ndarray]:
        """Off-lattice evaluation: exact with expressions, bicubic spline otherwise."""
        if self.exprs is not None:
            return el.eval_points(self.exprs[0], q, p), el.eval_points(self.exprs[1], q, p)
        g = self.grid
        out = []
        for comp in (self.alpha_q, self.alpha_p):
            spline = RectBivariateSpline(g.q, g.p, comp, kx=3, ky=3)
            out.append(spline.ev(q, p))
        return out[0], out[1]


def exterior_d(f, grid: PhaseGrid) -> OneForm:
    """df = (df/dq) dq + (df/dp) dp."""
    f = as_generating(f)
    if f.expr is not None:
        dq, dp = f.gradient_exprs()
        return OneForm.from_exprs(dq, dp, grid)
    dq, dp = f.gradients(grid)
    return OneForm(dq, dp, grid)


def symplectic_d(f, grid: PhaseGrid) -> OneForm:
    """d'f = -(df/dq) dq + (df/dp) dp."""
    f = as_generating(f)
    if f.expr is not None:
        dq, dp = f.gradient_exprs()
        return OneForm.from_exprs(el.neg(dq), dp, grid)
    dq, dp = f.gradients(grid)
    return OneForm(-dq, dp, grid)


def canonical_theta(grid: PhaseGrid) -> OneForm:
    """theta = -p dq."""
    return OneForm.from_exprs(el.Neg(el.Var("p")), el.ZERO, grid)


def canonical_omega_coefficient(grid: PhaseGrid) -> np.ndarray:
    """Coefficient of dq^dp in omega: the constant 1."""
    return np.ones(grid.shape)


@dataclass(frozen=True)
class PoincareCartan:
    """lambda = theta + H dt on a fixed-time / fixed-energy slice, where it reduces to theta."""

    form: OneForm
    energy: np.ndarray


def poincare_cartan(theta: OneForm, H, grid: PhaseGrid) -> PoincareCartan:
    energy = np.broadcast_to(np.asarray(H, dtype=float), grid.shape).copy()
    return PoincareCartan(theta, energy)


def d_of_oneform(alpha: OneForm, method: str = "auto") -> np.ndarray:
    """dq^dp coefficient of d(alpha): d(alpha_p)/dq - d(alpha_q)/dp.

    'auto' is symbolic when expressions exist, spectral for edge-decaying
    components, second-order finite differences otherwise (exact on linear data).
    """
    g = alpha.grid
    if method == "auto":
        if alpha.exprs is not None:
            method = "symbolic"
        elif _decays(alpha.alpha_q) and _decays(alpha.alpha_p):
            method = "spectral"
        else:
            method = "fd"
    if method == "symbolic":
        if alpha.exprs is None:
            raise ValueError("one-form has no expressions")
        eq, ep = alpha.exprs
        return el.eval_on_grid(el.sub(el.diff(ep, "q"), el.diff(eq, "p")), g)
    if method == "spectral":
        return spectral_derivative(alpha.alpha_p, g.q_axis.h, axis=0) - spectral_derivative(alpha.alpha_q, g.p_axis.h, axis=1)
    if method == "fd":
        return fd_derivative(alpha.alpha_p, g.q_axis.h, axis=0) - fd_derivative(alpha.alpha_q, g.p_axis.h, axis=1)
    raise ValueError(f"unknown method {method!r}")


def closedness_residual(xi: OneForm, method: str = "auto") -> float:
    return float(np.max(np.abs(d_of_oneform(xi, method))))


def gauge_shift_theta(theta_like: OneForm, xi: OneForm, gate: float = CLOSEDNESS_GATE) -> OneForm:
    """theta -> theta + xi for a closed xi."""
    r = closedness_residual(xi)
    if r >= gate:
        raise NotClosedError(f"shift form is not closed: max|d xi| = {r:.3e}")
    return theta_like + xi


# ---------------------------------------------------------------- line integrals


@dataclass(frozen=True)
class PathPolyline:
    vertices: tuple
    samples_per_segment: int = 64

    def __post_init__(self):
        v = tuple((float(a), float(b)) for a, b in self.vertices)
        if len(v) < 2:
            raise ValueError("a path needs at least two vertices")
        if self.samples_per_segment < 1:
            raise ValueError("samples_per_segment must be positive")
        object.__setattr__(self, "vertices", v)

    @classmethod
    def rectangle(cls, q1, q2, p1, p2, samples_per_segment: int = 64) -> PathPolyline:
        """Closed counter-clockwise rectangle (q1, p1) -> (q2, p1) -> (q2, p2) -> (q1, p2) -> (q1, p1)."""
        return cls(((q1, p1), (q2, p1), (q2, p2), (q1, p2), (q1, p1)), samples_per_segment)


def _path_inside(path: PathPolyline, grid: PhaseGrid) -> None:
    q, p = grid.q, grid.p
    for vq, vp in path.vertices:
        if not (q[0] <= vq <= q[-1] and p[0] <= vp <= p[-1]):
            raise PathDomainError(f"path vertex ({vq}, {vp}) lies outside the sampled grid rectangle")


def line_integral(alpha: OneForm, path: PathPolyline) -> float:
    """int alpha along the polyline (no sign flip; the action is minus this for alpha = theta).

    Each segment uses Gauss-Legendre quadrature with ``samples_per_segment`` nodes.
    """
    _path_inside(path, alpha.grid)
    nodes, weights = np.polynomial.legendre.leggauss(path.samples_per_segment)
    t = 0.5 * (nodes + 1.0)
    w = 0.5 * weights
    total = 0.0
    for (q0, p0), (q1, p1) in zip(path.vertices[:-1], path.vertices[1:]):
        dq, dp = q1 - q0, p1 - p0
        aq, ap = alpha.components_at(q0 + t * dq, p0 + t * dp)
        total += float(np.sum(w * (aq * dq + ap * dp)))
    return total


def action(alpha: OneForm, path: PathPolyline) -> float:
    """S = -int alpha."""
    return -line_integral(alpha, path)


# ---------------------------------------------------------------- connections


@dataclass(frozen=True)
class Connection:
    a_q: np.ndarray
    a_p: np.ndarray
    grid: PhaseGrid
    generator: el.Expr | None = None
    exprs: tuple[el.Expr, el.Expr] | None = None

    def __post_init__(self):
        aq = np.array(self.a_q, dtype=float)
        ap = np.array(self.a_p, dtype=float)
        if aq.shape != self.grid.shape or ap.shape != self.grid.shape:
            raise ValueError("connection components must match the grid shape")
        aq.setflags(write=False)
        ap.setflags(write=False)
        object.__setattr__(self, "a_q", aq)
        object.__setattr__(self, "a_p", ap)

    @classmethod
    def from_exprs(cls, aq, ap, grid: PhaseGrid, generator=None) -> Connection:
        eq, ep = el.as_expr(aq), el.as_expr(ap)
        return cls(
            el.eval_on_grid(eq, grid),
            el.eval_on_grid(ep, grid),
            grid,
            generator,
            (eq, ep),
        )


def connection_from_generating(f, grid: PhaseGrid) -> Connection:
    """A_q = df/dq, A_p = q - df/dp."""
    f = as_generating(f)
    if f.expr is None:
        dq, dp = f.gradients(grid)
        return Connection(dq, grid.q[:, None] - dp, grid)
    dq, dp = f.gradient_exprs()
    return Connection.from_exprs(dq, el.sub(el.Var("q"), dp), grid, generator=f.expr)


def canonical_connection(grid: PhaseGrid) -> Connection:
    return connection_from_generating(CANONICAL, grid)


def broken_connection(grid: PhaseGrid) -> Connection:
    """A_q = p, A_p = q: violates integrability ([Q, P] = 2 i hbar)."""
    return Connection.from_exprs("p", "q", grid)


def integrability_residual(A: Connection, method: str = "auto") -> np.ndarray:
    """dA_p/dq + dA_q/dp - 1."""
    g = A.grid
    if method == "auto":
        method = "symbolic" if A.exprs is not None else ("spectral" if _decays(A.a_q) and _decays(A.a_p - g.q[:, None]) else "fd")
    if method == "symbolic":
        eq, ep = A.exprs
        return el.eval_on_grid(el.add(el.diff(ep, "q"), el.diff(eq, "p")), g) - 1.0
    if method == "spectral":
        # d(A_p)/dq = 1 + d(A_p - q)/dq, and A_p - q is the part that decays
        return spectral_derivative(A.a_p - g.q[:, None], g.q_axis.h, axis=0) + spectral_derivative(A.a_q, g.p_axis.h, axis=1)
    if method == "fd":
        return fd_derivative(A.a_p, g.q_axis.h, axis=0) + fd_derivative(A.a_q, g.p_axis.h, axis=1) - 1.0
    raise ValueError(f"unknown method {method!r}")


def gauge_shift_connection(A: Connection, f, hbar: float | None = None, use_exterior_d: bool = False) -> Connection:
    """A -> A + d'f in components: A_q - df/dq, A_p + df/dp.

    ``use_exterior_d`` applies the (wrong) shift by df instead, A_q + df/dq,
    which breaks integrability by 2 d^2f/dqdp. ``hbar`` is accepted for
    signature symmetry; the component convention carries no hbar.
    """
    f = as_generating(f)
    g = A.grid
    sign_q = 1.0 if use_exterior_d else -1.0
    if f.expr is not None and A.exprs is not None:
        dq, dp = f.gradient_exprs()
        eq, ep = A.exprs
        new_q = el.add(eq, dq) if use_exterior_d else el.sub(eq, dq)
        new_p = el.add(ep, dp)
        generator = None
        if A.generator is not None and not use_exterior_d:
            generator = el.sub(A.generator, f.expr)
        return Connection.from_exprs(new_q, new_p, g, generator=generator)
    dq, dp = f.gradients(g)
    return Connection(A.a_q + sign_q * dq, A.a_p + dp, g)


# ---------------------------------------------------------------- covariant operators


def apply_q(A: Connection, psi: PhaseState) -> PhaseState:
    """Q psi = A_p psi + i hbar dpsi/dp."""
    _check(A, psi)
    return psi.multiply(A.a_p) + psi.derivative("p").scale(1j * psi.grid.hbar)


def apply_p(A: Connection, psi: PhaseState) -> PhaseState:
    """P psi = A_q psi - i hbar dpsi/dq."""
    _check(A, psi)
    return psi.multiply(A.a_q) - psi.derivative("q").scale(1j * psi.grid.hbar)


def covariant_ops(
    A: Connection,
) -> tuple[Callable[[PhaseState], PhaseState], Callable[[PhaseState], PhaseState]]:
    return (lambda s: apply_q(A, s)), (lambda s: apply_p(A, s))


def _check(A: Connection, psi: PhaseState) -> None:
    if A.grid != psi.grid:
        raise ValueError("connection and state live on different grids")


def commutator_residual(A: Connection, test: PhaseState, margin: float = 0.1) -> float:
    """max |(QP - PQ - i hbar) test| over the interior."""
    Q, P = covariant_ops(A)
    comm = Q(P(test)) - P(Q(test)) - test.scale(1j * test.grid.hbar)
    mask = test.grid.interior_mask(margin)
    return float(np.max(np.abs(comm.envelope)[mask]))


def random_smooth_expr(rng: np.random.Generator, canonical: bool = True) -> el.Expr:
    """Random generating function: p q / 2 plus small smooth bounded terms."""
    terms = [
        "sin(q)",
        "cos(p)",
        "sin(q)*cos(p)",
        "tanh(q)*sin(p)",
        "exp(-q^2)*cos(p)",
        "cos(q-p)",
        "q*tanh(p)",
    ]
    picks = rng.choice(len(terms), size=3, replace=False)
    coeffs = rng.uniform(-0.3, 0.3, size=3)
    parts = [CANONICAL] if canonical else []
    parts += [f"{c:.6f}*{terms[i]}" for c, i in zip(coeffs, picks)]
    return el.parse(" + ".join(parts))


def random_band_limited_field(rng: np.random.Generator, grid: PhaseGrid, n_bumps: int = 3) -> PhaseState:
    """Sum of a few modulated Gaussian bumps well inside the grid."""
    q, p = grid.mesh()
    Lq = min(abs(grid.q_axis.min), abs(grid.q_axis.max))
    Lp = min(abs(grid.p_axis.min), abs(grid.p_axis.max))
    values = np.zeros(grid.shape, dtype=complex)
    for _ in range(n_bumps):
        q0, p0 = rng.uniform(-0.3, 0.3) * Lq, rng.uniform(-0.3, 0.3) * Lp
        wq, wp = rng.uniform(0.6, 1.2, size=2)
        kq, kp = rng.uniform(-2, 2, size=2)
        amp = rng.normal() + 1j * rng.normal()
        values += amp * np.exp(-((q - q0) ** 2) / (2 * wq**2) - (p - p0) ** 2 / (2 * wp**2) + 1j * (kq * q + kp * p))
    return PhaseState(values, grid)


def random_polylines(rng: np.random.Generator, start, end, n: int, n_interior: int, box) -> list[PathPolyline]:
    """Random polylines sharing endpoints inside ``box = (qmin, qmax, pmin, pmax)``."""
    out = []
    for _ in range(n):
        mids = [(rng.uniform(box[0], box[1]), rng.uniform(box[2], box[3])) for _ in range(n_interior)]
        out.append(PathPolyline((tuple(start), *mids, tuple(end))))
    return out
