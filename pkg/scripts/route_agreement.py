"""Agreement of the three Wigner routes on oscillator eigenstates, across grid sizes.

python scripts/route_agreement.py --grids 256 512 --levels 0 1 2 3 4 --out route_agreement.csv
"""

from __future__ import annotations

import argparse
import time
from dataclasses import dataclass, field

import numpy as np

from phasewig.fieldio import atomic_write
from phasewig.numgrid import square_grid
from phasewig.states import (
    OscillatorParams,
    oscillator_eigenstate,
    oscillator_factor_state,
)
from phasewig.wigner import (
    ResolutionError,
    covariant_wigner,
    negativity_report,
    wigner_direct,
    wigner_tegmen,
)


@dataclass
class RouteConfig:
    half_width: float = 12.0
    grids: list[int] = field(default_factory=lambda: [256, 512])
    levels: list[int] = field(default_factory=lambda: [0, 1, 2, 3, 4])
    mass: float = 1.0
    omega: float = 1.0


def run(cfg: RouteConfig) -> list[dict]:
    params = OscillatorParams(cfg.mass, cfg.omega)
    rows = []
    for n_grid in cfg.grids:
        g = square_grid(cfg.half_width, n_grid)
        for n in cfg.levels:
            psi = oscillator_eigenstate(n, params, g)
            t0 = time.perf_counter()
            W = wigner_direct(psi)
            t_direct = time.perf_counter() - t0
            t0 = time.perf_counter()
            T = wigner_tegmen(oscillator_factor_state(n, params, g.hbar), g)
            t_tegmen = time.perf_counter() - t0
            t0 = time.perf_counter()
            try:
                C = covariant_wigner(psi, "p*q")
                cov = float(np.max(np.abs(C.values - W.values)))
            except ResolutionError:
                cov = float("nan")
            t_cov = time.perf_counter() - t0
            rows.append(
                {
                    "grid": n_grid,
                    "n": n,
                    "tegmen_vs_direct": float(np.max(np.abs(T.values - W.values))),
                    "covariant_vs_direct": cov,
                    "normalization_err": abs(W.total() - 1.0),
                    "min_value": negativity_report(W).min_value,
                    "negative_fraction": negativity_report(W).negative_fraction,
                    "t_direct": t_direct,
                    "t_tegmen": t_tegmen,
                    "t_covariant": t_cov,
                }
            )
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=RouteConfig().grids)
    ap.add_argument("--levels", type=int, nargs="+", default=RouteConfig().levels)
    ap.add_argument("--out", default=None, help="optional CSV path")
    args = ap.parse_args(argv)
    rows = run(RouteConfig(grids=args.grids, levels=args.levels))
    cols = list(rows[0])
    print("  ".join(f"{c:>18}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>18.4g}" if isinstance(r[c], float) else f"{r[c]:>18}" for c in cols))
    if args.out:
        lines = [",".join(cols)] + [",".join(format(r[c], ".17g") if isinstance(r[c], float) else str(r[c]) for c in cols) for r in rows]
        atomic_write(args.out, "\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
