"""Phase-space vs configuration-space eigenproblem over random generating functions.

For each seed draws f = pq/2 + small smooth terms, lifts the configuration
eigenstates with f and applies H(Q, P) built from the connection of f. Also
prints the cross-pairing matrix (lift with f_i, connection from f_j).

    python scripts/equivalence_sweep.py --n-f 8 --k 4 --grid 256
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from phasewig import exprlang as el
from phasewig.numgrid import square_grid
from phasewig.schrod import (
    PolynomialPotential,
    cross_pairing_residuals,
    equivalence_sweep,
)
from phasewig.symcalc import CANONICAL, random_smooth_expr


@dataclass
class SweepConfig:
    seed: int = 20240601
    n_f: int = 5
    k: int = 3
    grid: int = 256
    half_width: float = 12.0
    coefficients: tuple[float, ...] = (0.0, 0.0, 0.5)


def run(cfg: SweepConfig):
    g = square_grid(cfg.half_width, cfg.grid)
    V = PolynomialPotential(cfg.coefficients)
    rng = np.random.default_rng(cfg.seed)
    fs = [el.parse(CANONICAL), el.ZERO] + [random_smooth_expr(rng) for _ in range(cfg.n_f)]
    rows = equivalence_sweep(V, 1.0, g, fs, cfg.k)
    cross = cross_pairing_residuals(V, 1.0, g, fs[:4], min(cfg.k, 2))
    return rows, cross


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    ap.add_argument("--n-f", type=int, default=SweepConfig.n_f)
    ap.add_argument("--k", type=int, default=SweepConfig.k)
    ap.add_argument("--grid", type=int, default=SweepConfig.grid)
    ap.add_argument(
        "--quartic",
        action="store_true",
        help="use V = q^4/10 - q^2/2 + 0.3 q instead of the oscillator",
    )
    args = ap.parse_args(argv)
    cfg = SweepConfig(args.seed, args.n_f, args.k, args.grid)
    if args.quartic:
        cfg.coefficients = (0.0, 0.3, -0.5, 0.0, 0.1)
    rows, cross = run(cfg)
    print(f"{'n':>2} {'E':>12} {'phase res':>10} {'integr':>10} {'comm':>10}  f")
    for r in rows:
        tail = r.error or el.to_text(el.parse(r.f))[:60]
        print(
            f"{r.n:>2} {r.energy:>12.8f} {r.phase_residual:>10.2e} {r.integrability_residual:>10.2e} {r.commutator_residual:>10.2e}  {tail}"
        )
    print("\ncross pairing, max over n (rows: lift f_i, cols: connection f_j)")
    print(np.array2string(cross.max(axis=2), precision=2))


if __name__ == "__main__":
    main()
