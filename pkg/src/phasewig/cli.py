"""``phasewig`` command line: run scenarios, run the invariant suite, print the summary schema.

Exit codes: 0 success, 1 validation failure (bad config or inputs), 2 numerical
gate failure (realness, leakage, resolution, residual gates, failed checks).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from . import exprlang as el
from .config import ConfigError, Scenario, load_scenario, print_scenario, validate
from .fieldio import (
    atomic_write,
    dumps,
    read_binary,
    read_csv_values,
    write_binary,
    write_csv,
    write_sidecar,
)
from .numgrid import AxisSpec, BoundaryLeakageError, Field, GridError, PhaseGrid
from .render import write_pgm, write_ppm
from .schrod import (
    NonConfiningError,
    PolynomialPotential,
    equivalence_sweep,
    solve_config,
)
from .states import (
    OscillatorParams,
    from_samples,
    gaussian_packet,
    oscillator_eigenstate,
    oscillator_factor_state,
    packet_factor_state,
)
from .symcalc import PRESETS
from .verify import DEFAULT_GRID_N, DEFAULT_SEED, verify_suite
from .wigner import (
    DegreeOverflowError,
    RealnessError,
    ResolutionError,
    covariant_wigner,
    marginals,
    negativity_report,
    wigner_direct,
    wigner_tegmen,
)

log = logging.getLogger("phasewig")

OUTPUT_ENV = "PHASEWIG_OUTPUT_DIR"
DEFAULT_OUTPUT = "phasewig-out"
NORMALIZATION_GATE = 1e-6
SWEEP_PHASE_GATE = 1e-5
SWEEP_INTEGRABILITY_GATE = 1e-8

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2
NUMERICAL_ERRORS = (
    RealnessError,
    BoundaryLeakageError,
    ResolutionError,
    DegreeOverflowError,
    el.DomainError,
)
VALIDATION_ERRORS = (ConfigError, GridError, NonConfiningError, el.ExprSyntaxError)


class Outputs:
    """Collects written artifacts for the summary."""

    def __init__(self, directory: Path, formats):
        self.dir = directory
        self.formats = tuple(formats)
        self.files: list[dict] = []
        self.render: dict = {}

    def add(self, name: str, fmt: str):
        self.files.append({"file": name, "format": fmt})

    def field(
        self,
        stem: str,
        f: Field,
        meta: dict,
        heatmap: bool = False,
        diverging: bool = False,
    ):
        if "csv" in self.formats:
            write_csv(self.dir / f"{stem}.csv", f, stem)
            self.add(f"{stem}.csv", "csv")
        if "bin" in self.formats:
            write_binary(self.dir / f"{stem}.bin", f)
            write_sidecar(self.dir / f"{stem}.bin", meta)
            self.add(f"{stem}.bin", "bin")
            self.add(f"{stem}.bin.json", "json")
        if heatmap and "pgm" in self.formats:
            self.render[f"{stem}.pgm"] = write_pgm(self.dir / f"{stem}.pgm", np.real(f.values)).as_dict()
            self.add(f"{stem}.pgm", "pgm")
        if heatmap and diverging and "ppm" in self.formats:
            self.render[f"{stem}.ppm"] = write_ppm(self.dir / f"{stem}.ppm", np.real(f.values)).as_dict()
            self.add(f"{stem}.ppm", "ppm")

    def table(self, name: str, header: list[str], rows: list[list]):
        lines = [",".join(header)]
        for row in rows:
            lines.append(",".join(_cell(v) for v in row))
        atomic_write(self.dir / name, "\n".join(lines) + "\n")
        self.add(name, "csv")


def _cell(v) -> str:
    if isinstance(v, str):
        return '"' + v.replace('"', '""') + '"' if ("," in v or '"' in v) else v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


# ---------------------------------------------------------------- scenario -> objects


def build_grid(s: Scenario) -> PhaseGrid:
    g = s.sections["grid"]
    return PhaseGrid(
        AxisSpec(float(g["q_min"]), float(g["q_max"]), int(g["n_q"])),
        AxisSpec(float(g["p_min"]), float(g["p_max"]), int(g["n_p"])),
        float(g.get("hbar", 1.0)),
    )


def _params(s: Scenario) -> OscillatorParams:
    return OscillatorParams(float(s.get("state", "mass", 1.0)), float(s.get("state", "omega", 1.0)))


def build_state(s: Scenario, grid: PhaseGrid, base: Path):
    kind = s.require("state", "kind")
    if kind == "oscillator":
        return oscillator_eigenstate(int(s.require("state", "n")), _params(s), grid)
    if kind == "gaussian":
        return gaussian_packet(
            float(s.require("state", "q0")),
            float(s.require("state", "p0")),
            float(s.require("state", "sigma")),
            grid,
        )
    path = Path(s.require("state", "path"))
    path = path if path.is_absolute() else base / path
    if not path.exists():
        raise ConfigError(f"state.path {path} does not exist", key="state.path")
    if path.suffix == ".bin":
        f = read_binary(path)
        if f.role != "q" or f.grid.q_axis != grid.q_axis:
            raise ConfigError(
                "state file must hold a q-field on the scenario's q axis",
                key="state.path",
            )
        samples = f.values
    else:
        samples = read_csv_values(path)[:, 0]
        if samples.shape != (grid.q_axis.n,):
            raise ConfigError(
                f"state file has {samples.shape[0]} samples, grid has {grid.q_axis.n}",
                key="state.path",
            )
    return from_samples(samples, grid)


def build_factor_state(s: Scenario, grid: PhaseGrid):
    kind = s.require("state", "kind")
    if kind == "oscillator":
        return oscillator_factor_state(int(s.require("state", "n")), _params(s), grid.hbar)
    if kind == "gaussian":
        st = packet_factor_state(
            float(s.require("state", "q0")),
            float(s.require("state", "p0")),
            float(s.require("state", "sigma")),
            grid.hbar,
        )
        if st is not None:
            return st
    raise ConfigError(
        "wigner-tegmen needs an oscillator state or a centred unboosted Gaussian",
        key="state.kind",
    )


def generator_text(value: str) -> str:
    return PRESETS.get(value, value)


def build_generator(s: Scenario) -> str:
    g = s.sections["generator"]
    if "preset" in g:
        if g["preset"] not in PRESETS:
            raise ConfigError(
                f"unknown generator preset {g['preset']!r}; known: {', '.join(PRESETS)}",
                key="generator.preset",
            )
        return PRESETS[g["preset"]]
    el.parse(g["expr"])
    return g["expr"]


def build_potential(s: Scenario) -> tuple[PolynomialPotential, float]:
    try:
        V = PolynomialPotential(tuple(s.require("potential", "coefficients")))
    except ValueError as exc:
        raise ConfigError(str(exc), key="potential.coefficients") from None
    mass = float(s.get("potential", "mass", 1.0))
    if mass <= 0:
        raise ConfigError("potential.mass must be positive", key="potential.mass")
    return V, mass


# ---------------------------------------------------------------- tasks


def task_wigner(s: Scenario, out: Outputs, base: Path) -> tuple[dict, bool]:
    grid = build_grid(s)
    task = s.task
    psi = build_state(s, grid, base)
    if task == "wigner-direct":
        W = wigner_direct(psi)
        meta = {"f": None}
    elif task == "wigner-tegmen":
        W = wigner_tegmen(build_factor_state(s, grid), grid)
        meta = {"f": None}
    else:
        f = build_generator(s)
        conv = s.get("generator", "convention", "half")
        if conv not in ("half", "literal"):
            raise ConfigError(
                "generator.convention must be half or literal",
                key="generator.convention",
            )
        W = covariant_wigner(psi, f, convention=conv)
        meta = {"f": f, "convention": conv}
    total = W.total()
    neg = negativity_report(W)
    mq, mp = marginals(W)
    results = {
        "route": W.route,
        "normalization": total,
        "imag_discarded": W.imag_discarded,
        "leakage": W.leakage,
        "min_value": neg.min_value,
        "min_location": list(neg.min_location),
        "negative_fraction": neg.negative_fraction,
        "position_marginal_error": float(np.max(np.abs(mq - np.abs(psi.samples) ** 2))),
        "momentum_marginal_error": float(np.max(np.abs(mp - np.abs(psi.momentum_amplitude()) ** 2))),
    }
    meta.update({"route": W.route, "hbar": grid.hbar, "source": psi.provenance, "quantity": "W"})
    out.field("W", Field(W.values, grid, "qp"), meta, heatmap=True, diverging=True)
    ok = abs(total - 1.0) < NORMALIZATION_GATE
    results["normalization_gate"] = NORMALIZATION_GATE
    return results, ok


def task_spectrum(s: Scenario, out: Outputs, base: Path) -> tuple[dict, bool]:
    grid = build_grid(s)
    V, mass = build_potential(s)
    k = int(s.get("task", "k", 6))
    if k < 1:
        raise ConfigError("task.k must be positive", key="task.k")
    pairs = solve_config(V, mass, grid, k)
    out.table(
        "spectrum.csv",
        ["n", "energy", "residual"],
        [[n, p.energy, p.residual] for n, p in enumerate(pairs)],
    )
    header = ["q"] + [f"psi_{n}" for n in range(k)]
    rows = [[q] + [float(p.state.samples[i].real) for p in pairs] for i, q in enumerate(grid.q)]
    out.table("eigenstates.csv", header, rows)
    results = {
        "energies": [p.energy for p in pairs],
        "residuals": [p.residual for p in pairs],
        "mass": mass,
        "coefficients": list(V.coefficients),
    }
    return results, max(p.residual for p in pairs) < 1e-8


def task_sweep(s: Scenario, out: Outputs, base: Path) -> tuple[dict, bool]:
    grid = build_grid(s)
    V, mass = build_potential(s)
    k = int(s.get("task", "k", 3))
    f_list = s.get("task", "f_list")
    if f_list is None:
        f_list = [build_generator(s)] if "generator" in s.sections else [PRESETS["canonical"]]
    else:
        if not all(isinstance(f, str) for f in f_list):
            raise ConfigError(
                "task.f_list must hold expression strings or preset names",
                key="task.f_list",
            )
        f_list = [generator_text(f) for f in f_list]
        for f in f_list:
            el.parse(f)
    rows = equivalence_sweep(V, mass, grid, f_list, k)
    fields = [
        "f",
        "n",
        "energy",
        "phase_residual",
        "integrability_residual",
        "commutator_residual",
        "rayleigh_energy",
        "error",
    ]
    out.table("sweep.csv", fields, [[getattr(r, c) for c in fields] for r in rows])

    def worst(attr):
        vals = [getattr(r, attr) for r in rows if not r.error]
        return max(vals) if vals else float("nan")

    n_err = sum(1 for r in rows if r.error)
    results = {
        "rows": [r.as_dict() for r in rows],
        "max_phase_residual": worst("phase_residual"),
        "max_integrability_residual": worst("integrability_residual"),
        "max_commutator_residual": worst("commutator_residual"),
        "n_errors": n_err,
        "gates": {
            "phase_residual": SWEEP_PHASE_GATE,
            "integrability_residual": SWEEP_INTEGRABILITY_GATE,
        },
    }
    ok = (
        n_err == 0 and results["max_phase_residual"] < SWEEP_PHASE_GATE and results["max_integrability_residual"] < SWEEP_INTEGRABILITY_GATE
    )
    return results, ok


def task_verify(s: Scenario, out: Outputs, base: Path) -> tuple[dict, bool]:
    seed = int(s.get("task", "seed", DEFAULT_SEED))
    grid_n = int(s.get("task", "grid_n", DEFAULT_GRID_N))
    connection = s.get("task", "connection", "generated")
    if connection not in ("generated", "broken"):
        raise ConfigError("task.connection must be generated or broken", key="task.connection")
    if grid_n < 16:
        raise ConfigError("task.grid_n must be at least 16", key="task.grid_n")
    report = verify_suite(seed, grid_n, connection)
    report.pop("wall_time")
    checks = report["checks"]
    out.table(
        "checks.csv",
        ["name", "value", "threshold", "comparison", "passed"],
        [
            [
                c["name"],
                c["value"],
                c["threshold"],
                c["comparison"],
                str(c["passed"]).lower(),
            ]
            for c in checks
        ],
    )
    for c in checks:
        log.info(
            "%-4s %-45s %.3e %s %g",
            "ok" if c["passed"] else "FAIL",
            c["name"],
            c["value"],
            c["comparison"],
            c["threshold"],
        )
    return report, report["all_passed"]


TASK_RUNNERS = {
    "wigner-direct": task_wigner,
    "wigner-tegmen": task_wigner,
    "wigner-covariant": task_wigner,
    "spectrum": task_spectrum,
    "equivalence-sweep": task_sweep,
    "verify": task_verify,
}


def output_dir(s: Scenario, override: str | None, base: Path = Path(".")) -> Path:
    """--output-dir, then $PHASEWIG_OUTPUT_DIR, then output.directory (relative to the scenario file)."""
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_ENV)
    if env:
        return Path(env)
    d = Path(s.get("output", "directory", DEFAULT_OUTPUT))
    return d if d.is_absolute() else base / d


def execute(s: Scenario, base: Path = Path("."), out_override: str | None = None) -> tuple[int, dict]:
    """Validate and run one scenario; returns (exit code, summary). Raises on validation errors."""
    validate(s)
    t0 = time.perf_counter()
    out = Outputs(
        output_dir(s, out_override, base),
        s.get("output", "formats", ["csv", "bin", "pgm", "ppm"]),
    )
    out.dir.mkdir(parents=True, exist_ok=True)
    seed = s.get("task", "seed") if s.task == "verify" else None
    if s.task == "verify" and seed is None:
        seed = DEFAULT_SEED
    results, ok = TASK_RUNNERS[s.task](s, out, base)
    code = EXIT_OK if ok else EXIT_NUMERICAL
    summary = {
        "toolkit": "phasewig",
        "version": __version__,
        "task": s.task,
        "status": "ok" if ok else "failed",
        "exit_code": code,
        "scenario": print_scenario(s),
        "seed": seed,
        "results": results,
        "outputs": out.files + [{"file": "summary.json", "format": "json"}],
        "render": out.render,
        "provenance": {"numpy": np.__version__, "python": sys.version.split()[0]},
        "wall_time": time.perf_counter() - t0,
    }
    atomic_write(out.dir / "summary.json", dumps(summary))
    return code, summary


def load_schema() -> dict:
    return json.loads(resources.files("phasewig").joinpath("summary.schema.json").read_text())


# ---------------------------------------------------------------- entry point


def _run_guarded(fn) -> int:
    try:
        return fn()
    except VALIDATION_ERRORS as exc:
        print(f"phasewig: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NUMERICAL_ERRORS as exc:
        print(f"phasewig: numerical gate: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"phasewig: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def cmd_run(args) -> int:
    path = Path(args.scenario)

    def go():
        s = load_scenario(path)
        code, summary = execute(s, path.parent, args.output_dir)
        print(f"{summary['task']}: {summary['status']} -> {output_dir(s, args.output_dir, path.parent) / 'summary.json'}")
        return code

    return _run_guarded(go)


def cmd_verify(args) -> int:
    task = {
        "name": "verify",
        "seed": args.seed,
        "grid_n": args.grid,
        "connection": args.connection,
    }
    s = Scenario({"task": task})

    def go():
        code, summary = execute(s, Path("."), args.output_dir)
        r = summary["results"]
        print(f"verify: {r['n_checks'] - r['n_failed']}/{r['n_checks']} checks passed (seed {r['seed']}, grid {r['grid_n']})")
        for name in r["failed"]:
            print(f"  FAILED {name}")
        return code

    return _run_guarded(go)


def cmd_print_schema(args) -> int:
    sys.stdout.write(resources.files("phasewig").joinpath("summary.schema.json").read_text())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="phasewig", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"phasewig {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario file")
    run.add_argument("scenario")
    run.add_argument(
        "--output-dir",
        default=None,
        help=f"overrides ${OUTPUT_ENV} and the scenario's output.directory",
    )
    run.set_defaults(func=cmd_run)

    ver = sub.add_parser("verify", help="run the invariant suite")
    ver.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ver.add_argument(
        "--grid",
        type=int,
        default=DEFAULT_GRID_N,
        help="samples per axis on [-12, 12]^2",
    )
    ver.add_argument("--connection", choices=("generated", "broken"), default="generated")
    ver.add_argument("--output-dir", default=None)
    ver.set_defaults(func=cmd_verify)

    sch = sub.add_parser("print-schema", help="print the summary.json schema")
    sch.set_defaults(func=cmd_print_schema)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
