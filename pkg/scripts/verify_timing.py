"""Wall time and outcome of the invariant suite against grid size.

python scripts/verify_timing.py --grids 128 256 512
"""

import argparse

from phasewig.verify import DEFAULT_SEED, verify_suite


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grids", type=int, nargs="+", default=[128, 256, 512])
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    args = ap.parse_args(argv)
    for n in args.grids:
        r = verify_suite(args.seed, n)
        print(f"grid {n:>4}: {r['n_checks'] - r['n_failed']:>2}/{r['n_checks']} passed in {r['wall_time']:6.1f}s")
        for name in r["failed"]:
            print(f"           failed {name}")


if __name__ == "__main__":
    main()
