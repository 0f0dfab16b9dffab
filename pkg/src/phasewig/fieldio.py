"""Field serialization: CSV, a little-endian binary layout, JSON sidecars. All writes are atomic.

Binary layout (every number little-endian)::

    magic      8 bytes   b"PHWFLD01"
    role       int64     1 = q, 2 = p, 3 = qp
    q axis     float64 min, float64 max, int64 n
    p axis     float64 min, float64 max, int64 n
    hbar       float64
    values     row-major (q outer, p inner) float64 pairs re, im

CSV: a ``#``-prefixed header line with role, axes and hbar, a column-name line,
then one row per q sample: q followed by the values (re and im columns for
complex data). Floats are written with 17 significant digits.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .numgrid import AxisSpec, Field, PhaseGrid

MAGIC = b"PHWFLD01"
_ROLE_CODES = {"q": 1, "p": 2, "qp": 3}
_HEADER = np.dtype(
    [
        ("role", "<i8"),
        ("q_min", "<f8"),
        ("q_max", "<f8"),
        ("q_n", "<i8"),
        ("p_min", "<f8"),
        ("p_max", "<f8"),
        ("p_n", "<i8"),
        ("hbar", "<f8"),
    ]
)


class FieldFormatError(ValueError):
    pass


def atomic_write(path, data: bytes | str) -> Path:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


# ---------------------------------------------------------------- binary


def field_to_bytes(f: Field) -> bytes:
    g = f.grid
    head = np.zeros((), dtype=_HEADER)
    head["role"] = _ROLE_CODES[f.role]
    head["q_min"], head["q_max"], head["q_n"] = g.q_axis.min, g.q_axis.max, g.q_axis.n
    head["p_min"], head["p_max"], head["p_n"] = g.p_axis.min, g.p_axis.max, g.p_axis.n
    head["hbar"] = g.hbar
    v = np.asarray(f.values, dtype=complex)
    pairs = np.empty(v.shape + (2,), dtype="<f8")
    pairs[..., 0] = v.real
    pairs[..., 1] = v.imag
    return MAGIC + head.tobytes() + pairs.tobytes(order="C")


def field_from_bytes(data: bytes) -> Field:
    if data[:8] != MAGIC:
        raise FieldFormatError("not a field file (bad magic)")
    off = 8 + _HEADER.itemsize
    if len(data) < off:
        raise FieldFormatError("truncated header")
    head = np.frombuffer(data[8:off], dtype=_HEADER)[0]
    roles = {v: k for k, v in _ROLE_CODES.items()}
    role = roles.get(int(head["role"]))
    if role is None:
        raise FieldFormatError(f"unknown role code {int(head['role'])}")
    g = PhaseGrid(
        AxisSpec(float(head["q_min"]), float(head["q_max"]), int(head["q_n"])),
        AxisSpec(float(head["p_min"]), float(head["p_max"]), int(head["p_n"])),
        float(head["hbar"]),
    )
    shape = tuple(g.axis(a).n for a in ("q", "p") if a in role)
    expected = off + int(np.prod(shape)) * 16
    if len(data) != expected:
        raise FieldFormatError(f"payload has {len(data)} bytes, expected {expected}")
    pairs = np.frombuffer(data[off:], dtype="<f8").reshape(shape + (2,))
    values = pairs[..., 0] + 1j * pairs[..., 1]
    if not np.any(pairs[..., 1]):
        values = values.real
    return Field(values, g, role)


def write_binary(path, f: Field) -> Path:
    return atomic_write(path, field_to_bytes(f))


def read_binary(path) -> Field:
    return field_from_bytes(Path(path).read_bytes())


# ---------------------------------------------------------------- CSV


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def field_to_csv(f: Field, name: str = "value") -> str:
    g = f.grid
    v = np.asarray(f.values)
    is_complex = np.iscomplexobj(v)
    out = io.StringIO()
    out.write(
        f"# role={f.role} q=[{_fmt(g.q_axis.min)},{_fmt(g.q_axis.max)}):{g.q_axis.n} "
        f"p=[{_fmt(g.p_axis.min)},{_fmt(g.p_axis.max)}):{g.p_axis.n} hbar={_fmt(g.hbar)} "
        f"dtype={'complex' if is_complex else 'real'}\n"
    )
    if f.role == "p":
        lead, rows = "p", g.p
        v = v[:, None]
        labels = [name]
    else:
        lead, rows = "q", g.q
        if f.role == "q":
            v = v[:, None]
            labels = [name]
        else:
            labels = [f"{name}[p={_fmt(p)}]" for p in g.p]
    cols = [lead]
    for lab in labels:
        cols += [f"{lab}.re", f"{lab}.im"] if is_complex else [lab]
    out.write(",".join(cols) + "\n")
    for x, row in zip(rows, v):
        if is_complex:
            cells = [c for z in row for c in (_fmt(z.real), _fmt(z.imag))]
        else:
            cells = [_fmt(z) for z in row]
        out.write(_fmt(x) + "," + ",".join(cells) + "\n")
    return out.getvalue()


def write_csv(path, f: Field, name: str = "value") -> Path:
    return atomic_write(path, field_to_csv(f, name))


def read_csv_values(path) -> np.ndarray:
    """Values block of a field CSV (the leading coordinate column is dropped)."""
    text = Path(path).read_text()
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    complex_data = "dtype=complex" in text.splitlines()[0]
    data = np.array([[float(c) for c in ln.split(",")[1:]] for ln in lines[1:]])
    if complex_data:
        data = data[:, 0::2] + 1j * data[:, 1::2]
    return data


# ---------------------------------------------------------------- JSON


def to_jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for strict JSON."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if np.isfinite(x) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


def write_sidecar(field_path, meta: dict) -> Path:
    p = Path(field_path)
    return write_json(p.with_name(p.name + ".json"), meta)
