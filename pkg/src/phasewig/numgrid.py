"""Uniform phase-space grids and spectral calculus on them.

All 2-D arrays are indexed ``[i_q, i_p]``. Sample points follow the periodic
convention ``x_k = min + k*h`` with ``h = (max - min)/n``; ``max`` itself is
not a sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Axis = Literal["q", "p"]
MIN_SAMPLES = 8


class GridError(ValueError):
    pass


class ShapeMismatchError(ValueError):
    pass


class BoundaryLeakageError(ValueError):
    pass


@dataclass(frozen=True)
class AxisSpec:
    min: float
    max: float
    n: int
    periodic: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.min) and np.isfinite(self.max)):
            raise GridError("axis bounds must be finite")
        if self.max <= self.min:
            raise GridError(f"axis max {self.max} must exceed min {self.min}")
        if int(self.n) != self.n or self.n < MIN_SAMPLES:
            raise GridError(f"axis needs at least {MIN_SAMPLES} samples, got {self.n}")

    @property
    def h(self) -> float:
        return (self.max - self.min) / self.n

    @property
    def length(self) -> float:
        return self.max - self.min

    def points(self) -> np.ndarray:
        return self.min + np.arange(self.n) * self.h

    def wavenumbers(self) -> np.ndarray:
        return 2 * np.pi * np.fft.fftfreq(self.n, d=self.h)


@dataclass(frozen=True)
class PhaseGrid:
    q_axis: AxisSpec
    p_axis: AxisSpec
    hbar: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and np.isfinite(self.hbar)):
            raise GridError(f"hbar must be positive, got {self.hbar}")

    @property
    def q(self) -> np.ndarray:
        return self.q_axis.points()

    @property
    def p(self) -> np.ndarray:
        return self.p_axis.points()

    @property
    def shape(self) -> tuple[int, int]:
        return (self.q_axis.n, self.p_axis.n)

    def axis(self, name: Axis) -> AxisSpec:
        if name == "q":
            return self.q_axis
        if name == "p":
            return self.p_axis
        raise ValueError(f"unknown axis {name!r}")

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.q, self.p, indexing="ij")

    def interior_mask(self, margin: float = 0.1) -> np.ndarray:
        """Boolean (n_q, n_p) mask excluding the outer ``margin`` fraction of each axis."""
        masks = []
        for ax in (self.q_axis, self.p_axis):
            x = ax.points()
            lo = ax.min + margin * ax.length
            hi = ax.max - margin * ax.length
            masks.append((x >= lo) & (x <= hi))
        return masks[0][:, None] & masks[1][None, :]


def make_grid(q_spec: AxisSpec, p_spec: AxisSpec, hbar: float) -> PhaseGrid:
    return PhaseGrid(q_spec, p_spec, float(hbar))


def square_grid(half_width: float, n: int, hbar: float = 1.0) -> PhaseGrid:
    """Convenience: [-L, L) x [-L, L) with n samples per axis."""
    spec = AxisSpec(-half_width, half_width, n)
    return PhaseGrid(spec, spec, hbar)


_ROLES = {"q": ("q",), "p": ("p",), "qp": ("q", "p")}


@dataclass(frozen=True)
class Field:
    """Samples over one or both grid axes. ``role`` is 'q', 'p' or 'qp'."""

    values: np.ndarray
    grid: PhaseGrid
    role: str = "qp"
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        values = np.array(self.values)
        expected = tuple(self.grid.axis(a).n for a in _ROLES[self.role])
        if values.shape != expected:
            raise ShapeMismatchError(f"values shape {values.shape} != grid shape {expected} for role {self.role!r}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def axes(self) -> tuple[str, ...]:
        return _ROLES[self.role]

    def axis_index(self, axis: Axis) -> int:
        if axis not in self.axes:
            raise ShapeMismatchError(f"field with role {self.role!r} has no {axis!r} axis")
        return self.axes.index(axis)

    def replace(self, values) -> Field:
        return Field(values, self.grid, self.role)

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    def boundary_magnitude(self) -> float:
        return boundary_magnitude(self.values)


def boundary_magnitude(values: np.ndarray) -> float:
    """Largest magnitude on the first/last sample of every axis."""
    a = np.abs(np.asarray(values))
    edges = []
    for ax in range(a.ndim):
        edges.append(np.take(a, [0, -1], axis=ax).max())
    return float(max(edges))


# ---------------------------------------------------------------- raw array kernels


def spectral_derivative(values: np.ndarray, spacing: float, axis: int = -1, order: int = 1) -> np.ndarray:
    """Fourier derivative of periodic samples along ``axis``.

    The Nyquist mode is zeroed for odd orders so that real data stays real.
    """
    values = np.asarray(values)
    n = values.shape[axis]
    k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
    mult = (1j * k) ** order
    if n % 2 == 0 and order % 2 == 1:
        mult[n // 2] = 0.0
    shape = [1] * values.ndim
    shape[axis] = n
    out = np.fft.ifft(np.fft.fft(values, axis=axis) * mult.reshape(shape), axis=axis)
    if np.isrealobj(values):
        return out.real
    return out


def fd_derivative(values: np.ndarray, spacing: float, axis: int = -1) -> np.ndarray:
    """Second-order central differences (exact on quadratics, including edges)."""
    return np.gradient(np.asarray(values), spacing, axis=axis, edge_order=2)


def spectral_shift(values: np.ndarray, spacing: float, amount: float, axis: int = -1) -> np.ndarray:
    """Band-limited translation f(x) -> f(x + amount) on a periodic grid.

    Whole-sample parts of ``amount`` are applied with ``np.roll`` (exact for the
    trigonometric interpolant); only the fractional remainder goes through an FFT.
    """
    values = np.asarray(values)
    steps = amount / spacing
    whole = int(np.round(steps))
    frac = steps - whole
    out = values
    if abs(frac) > 1e-13:
        n = values.shape[axis]
        k = 2 * np.pi * np.fft.fftfreq(n, d=spacing)
        phase = np.exp(1j * k * frac * spacing)
        if n % 2 == 0:
            # symmetric treatment of the Nyquist mode keeps real data real
            phase[n // 2] = np.cos(k[n // 2] * frac * spacing)
        shape = [1] * values.ndim
        shape[axis] = n
        out = np.fft.ifft(np.fft.fft(values, axis=axis) * phase.reshape(shape), axis=axis)
        if np.isrealobj(values):
            out = out.real
    if whole:
        out = np.roll(out, -whole, axis=axis)
    return out


# ---------------------------------------------------------------- Field operations


def derivative(f: Field, axis: Axis, method: str = "spectral") -> Field:
    """d/d(axis) of a field. ``method`` is 'spectral' or 'fd'."""
    i = f.axis_index(axis)
    h = f.grid.axis(axis).h
    if method == "spectral":
        return f.replace(spectral_derivative(f.values, h, axis=i))
    if method == "fd":
        return f.replace(fd_derivative(f.values, h, axis=i))
    raise ValueError(f"unknown derivative method {method!r}")


def second_derivative(f: Field, axis: Axis) -> Field:
    i = f.axis_index(axis)
    return f.replace(spectral_derivative(f.values, f.grid.axis(axis).h, axis=i, order=2))


def shift(f: Field, axis: Axis, amount: float) -> Field:
    """Translate so that the result at x equals f(x + amount)."""
    if not np.isfinite(amount):
        raise ValueError("shift amount must be finite")
    i = f.axis_index(axis)
    return f.replace(spectral_shift(f.values, f.grid.axis(axis).h, amount, axis=i))


def integrate(f: Field, axis: str = "both"):
    """Rectangle-rule quadrature over one axis (returns a Field) or all axes (returns a scalar)."""
    if axis == "both":
        total = f.values
        for a in reversed(f.axes):
            total = total.sum(axis=f.axes.index(a)) * f.grid.axis(a).h
        return total.item() if np.ndim(total) == 0 else total
    i = f.axis_index(axis)
    reduced = f.values.sum(axis=i) * f.grid.axis(axis).h
    remaining = [a for a in f.axes if a != axis]
    if not remaining:
        return reduced.item()
    return Field(reduced, f.grid, remaining[0])


def integrate_array(values: np.ndarray, spacing: float, axis: int = -1):
    return np.asarray(values).sum(axis=axis) * spacing
