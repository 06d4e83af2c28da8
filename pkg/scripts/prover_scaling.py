"""Triangle prover wall time as n and m double together (expect roughly x4 per step)."""

import argparse
import statistics
import time

from annostream.field import FieldContext, SchemeKind
from annostream.stream import GenSpec, generate
from annostream.triangles import prove


def timed(n, m, repeats):
    h, ups = generate(GenSpec(n, m, 1, deletion_fraction=0.1, seed=n))
    field = FieldContext.for_scheme(SchemeKind.TRIANGLES, n, 1)
    runs = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        prove(field, h, ups)
        runs.append(time.perf_counter() - t0)
    return statistics.median(runs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--start", type=int, default=50)
    ap.add_argument("--steps", type=int, default=4)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    prev = None
    print(f"{'n':>6} {'m':>7} {'median_s':>10} {'ratio':>6}")
    for k in range(args.steps):
        n = args.start * 2**k
        m = 20 * n
        t = timed(n, m, args.repeats)
        ratio = f"{t / prev:6.2f}" if prev else "     -"
        print(f"{n:>6} {m:>7} {t:>10.3f} {ratio}")
        prev = t


if __name__ == "__main__":
    main()
