"""Scenario files: a sectioned ``key = value`` text format.

Grammar::

    file    := line*
    line    := blank | comment | section | entry
    comment := '#' any-text
    section := '[' name ']'
    entry   := key '=' value

Values are JSON literals: numbers, double-quoted strings, ``true``/``false``,
and lists of those. ``print_scenario`` emits the canonical form (one blank line
between sections, ``key = value`` with single spaces, no comments), and
``print_scenario(parse_scenario(text)) == text`` for canonical text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

TASKS = (
    "wigner-direct",
    "wigner-tegmen",
    "wigner-covariant",
    "spectrum",
    "equivalence-sweep",
    "verify",
)
FORMATS = ("csv", "bin", "pgm", "ppm")

# allowed keys per section, with accepted python types
SCHEMA: dict[str, dict[str, tuple]] = {
    "grid": {
        "q_min": (int, float),
        "q_max": (int, float),
        "n_q": (int,),
        "p_min": (int, float),
        "p_max": (int, float),
        "n_p": (int,),
        "hbar": (int, float),
    },
    "state": {
        "kind": (str,),
        "n": (int,),
        "mass": (int, float),
        "omega": (int, float),
        "q0": (int, float),
        "p0": (int, float),
        "sigma": (int, float),
        "path": (str,),
    },
    "generator": {"expr": (str,), "preset": (str,), "convention": (str,)},
    "potential": {"coefficients": (list,), "mass": (int, float)},
    "task": {
        "name": (str,),
        "k": (int,),
        "f_list": (list,),
        "seed": (int,),
        "grid_n": (int,),
        "connection": (str,),
    },
    "output": {"directory": (str,), "formats": (list,)},
}

GRID_KEYS = ("q_min", "q_max", "n_q", "p_min", "p_max", "n_p")
REQUIRED_SECTIONS = {
    "wigner-direct": ("grid", "state"),
    "wigner-tegmen": ("grid", "state"),
    "wigner-covariant": ("grid", "state", "generator"),
    "spectrum": ("grid", "potential"),
    "equivalence-sweep": ("grid", "potential"),
    "verify": (),
}

_SECTION = re.compile(r"^\[([A-Za-z_][A-Za-z0-9_-]*)\]$")
_ENTRY = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*)$")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass
class Scenario:
    sections: dict[str, dict] = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def require(self, section: str, key: str):
        if section not in self.sections:
            raise ConfigError(
                f"missing section [{section}] (needed for {section}.{key})",
                key=f"{section}.{key}",
            )
        if key not in self.sections[section]:
            raise ConfigError(f"missing key {section}.{key}", key=f"{section}.{key}")
        return self.sections[section][key]

    @property
    def task(self) -> str:
        return self.require("task", "name")


def _check_type(section: str, key: str, value, line: int | None) -> None:
    allowed = SCHEMA[section][key]
    ok = isinstance(value, allowed) and not (isinstance(value, bool) and bool not in allowed)
    if not ok:
        names = "/".join(t.__name__ for t in allowed)
        raise ConfigError(
            f"{section}.{key} must be {names}, got {json.dumps(value)}",
            line,
            f"{section}.{key}",
        )


def parse_scenario(text: str) -> Scenario:
    sections: dict[str, dict] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        m = _SECTION.match(line)
        if m:
            current = m.group(1)
            if current not in SCHEMA:
                raise ConfigError(f"unknown section [{current}]", lineno, current)
            if current in sections:
                raise ConfigError(f"duplicate section [{current}]", lineno, current)
            sections[current] = {}
            continue
        m = _ENTRY.match(line)
        if not m:
            raise ConfigError(f"expected '[section]' or 'key = value', got {line!r}", lineno)
        if current is None:
            raise ConfigError("entry before any section", lineno, m.group(1))
        key, rhs = m.group(1), m.group(2)
        if key not in SCHEMA[current]:
            raise ConfigError(f"unknown key {current}.{key}", lineno, f"{current}.{key}")
        if key in sections[current]:
            raise ConfigError(f"duplicate key {current}.{key}", lineno, f"{current}.{key}")
        try:
            value = json.loads(rhs)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"bad value for {current}.{key}: {exc.msg} (column {exc.colno})",
                lineno,
                f"{current}.{key}",
            ) from None
        _check_type(current, key, value, lineno)
        sections[current][key] = value
    return Scenario(sections)


def print_scenario(s: Scenario) -> str:
    blocks = []
    for name, entries in s.sections.items():
        lines = [f"[{name}]"] + [f"{k} = {json.dumps(v)}" for k, v in entries.items()]
        blocks.append("\n".join(lines) + "\n")
    return "\n".join(blocks)


def load_scenario(path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scenario {path}: {exc.strerror}") from None
    return parse_scenario(text)


def validate(s: Scenario) -> None:
    """Cross-section checks: one known task, every section it needs, complete grid."""
    task = s.task
    if task not in TASKS:
        raise ConfigError(
            f"unknown task {task!r}; expected one of {', '.join(TASKS)}",
            key="task.name",
        )
    for sec in REQUIRED_SECTIONS[task]:
        if sec not in s.sections:
            raise ConfigError(f"task {task} needs section [{sec}]", key=sec)
    if "grid" in s.sections:
        for key in GRID_KEYS:
            s.require("grid", key)
    if "state" in s.sections:
        kind = s.require("state", "kind")
        need = {
            "oscillator": ("n",),
            "gaussian": ("q0", "p0", "sigma"),
            "file": ("path",),
        }
        if kind not in need:
            raise ConfigError(
                f"state.kind must be oscillator, gaussian or file, got {kind!r}",
                key="state.kind",
            )
        for key in need[kind]:
            s.require("state", key)
    if "generator" in s.sections:
        g = s.sections["generator"]
        if ("expr" in g) == ("preset" in g):
            raise ConfigError("generator needs exactly one of expr or preset", key="generator.expr")
    if "potential" in s.sections:
        coeffs = s.require("potential", "coefficients")
        if not coeffs or not all(isinstance(c, (int, float)) and not isinstance(c, bool) for c in coeffs):
            raise ConfigError(
                "potential.coefficients must be a non-empty list of numbers",
                key="potential.coefficients",
            )
    fmts = s.get("output", "formats", list(FORMATS))
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown output formats {bad}", key="output.formats")
