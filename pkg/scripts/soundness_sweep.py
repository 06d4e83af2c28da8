"""Empirical rejection rates for every attack family next to the 1 - c*n/p bound."""

import argparse
import json
import time

from annostream.attacks import FOURCYCLE_ATTACKS, MATCHING_ATTACKS, TRIANGLE_ATTACKS, run_soundness

SWEEP = [
    ("triangles", TRIANGLE_ATTACKS, 20),
    ("matching", MATCHING_ATTACKS, 12),
    ("fourcycles", FOURCYCLE_ATTACKS, 10),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for scheme, modes, n in SWEEP:
        for mode in modes:
            t0 = time.perf_counter()
            rep = run_soundness(scheme, mode, args.trials, n, seed=args.seed)
            row = rep.as_dict()
            row["seconds"] = round(time.perf_counter() - t0, 2)
            print(json.dumps(row))


if __name__ == "__main__":
    main()
