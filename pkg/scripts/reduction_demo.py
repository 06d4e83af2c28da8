"""Walk one INDEX instance through both reductions and tabulate list perturbations."""

import argparse
import itertools

from annostream.field import make_rng
from annostream.reduction import (
    BIPARTITENESS,
    DISCONNECTIVITY,
    MerlinList,
    bob_decide,
    claim_holds,
    final_graph,
    honest_merlin,
    random_instance,
)
from annostream.stream import oracle_bipartite, oracle_connected


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=6)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = make_rng(args.seed)
    for variant in (DISCONNECTIVITY, BIPARTITENESS):
        inst = random_instance(args.n, rng, variant)
        honest = honest_merlin(inst)
        g3 = final_graph(inst, honest)
        print(f"== {variant}: i*={inst.i_star} edge={inst.target} bit={inst.x[inst.i_star - 1]}")
        print(f"   honest list {honest.neighbor_bits} ({honest.help_bits()} help bits)")
        print(f"   final graph connected={oracle_connected(g3)} bipartite={oracle_bipartite(g3)}")
        print(f"   Bob outputs {bob_decide(inst, honest)}")
        slots = range(args.n)
        if variant == BIPARTITENESS:
            slots = [j for j, w in enumerate(inst.others()) if args.n // 2 < w <= args.n]
        held = total = 0
        for k in (1, 2):
            for idx in itertools.combinations(slots, k):
                bits = list(honest.neighbor_bits)
                for j in idx:
                    bits[j] ^= 1
                total += 1
                held += claim_holds(inst, MerlinList(inst.u_star, tuple(bits)))
        print(f"   claim holds on {held}/{total} one- and two-bit perturbations")


if __name__ == "__main__":
    main()
