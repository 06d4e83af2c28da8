"""Executable INDEX -> Disconnectivity / Bipartiteness reductions (XOR model).

Alice turns her bit string into a graph plus a hub node ``v* = n + 1``;
Merlin hands Bob the claimed neighbourhood of ``u_{i*}``; Bob XORs that list
in and asks a decision procedure about the final graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .outcome import Reject
from .stream import (
    GraphMatrix,
    StreamHeader,
    StreamUpdate,
    UpdateModel,
    accumulate,
    oracle_bipartite,
    oracle_connected,
)

DISCONNECTIVITY = "disconnectivity"
BIPARTITENESS = "bipartiteness"


def edge_index(n: int, i: int) -> tuple[int, int]:
    """1-based colex bijection i -> (u, v), u < v, ordered by (v, u)."""
    if not 1 <= i <= n * (n - 1) // 2:
        raise ValueError(f"index {i} outside 1..C({n},2)")
    j = i - 1
    v = (1 + math.isqrt(1 + 8 * j)) // 2   # largest v with C(v,2) <= j
    while v * (v - 1) // 2 > j:
        v -= 1
    while (v + 1) * v // 2 <= j:
        v += 1
    u = j - v * (v - 1) // 2
    return u + 1, v + 1


def edge_position(n: int, u: int, v: int) -> int:
    """Inverse of :func:`edge_index`."""
    u, v = min(u, v), max(u, v)
    if not 1 <= u < v <= n:
        raise ValueError(f"({u}, {v}) is not an edge on {n} nodes")
    return (v - 1) * (v - 2) // 2 + u


def bipartite_edge_index(n: int, i: int) -> tuple[int, int]:
    """Row-major map of i in 1..(n/2)^2 to (left, right); left = 1..n/2."""
    h = n // 2
    if not 1 <= i <= h * h:
        raise ValueError(f"index {i} outside 1..{h * h}")
    a, b = divmod(i - 1, h)
    return a + 1, h + b + 1


@dataclass(frozen=True)
class IndexInstance:
    n: int
    x: tuple
    i_star: int
    variant: str = DISCONNECTIVITY

    def __post_init__(self):
        if self.variant == BIPARTITENESS:
            if self.n % 2:
                raise ValueError("bipartite variant needs even n")
            want = (self.n // 2) ** 2
        elif self.variant == DISCONNECTIVITY:
            want = self.n * (self.n - 1) // 2
        else:
            raise ValueError(f"unknown variant {self.variant!r}")
        if len(self.x) != want:
            raise ValueError(f"x must have {want} bits")
        if not 1 <= self.i_star <= want:
            raise ValueError("i_star out of range")

    @property
    def v_star(self) -> int:
        return self.n + 1

    def edge(self, i: int) -> tuple[int, int]:
        if self.variant == BIPARTITENESS:
            return bipartite_edge_index(self.n, i)
        return edge_index(self.n, i)

    @property
    def target(self) -> tuple[int, int]:
        return self.edge(self.i_star)

    @property
    def u_star(self) -> int:
        return self.target[0]

    def others(self) -> list[int]:
        """The n nodes other than u_{i*}, in order; Merlin's bits index these."""
        return [w for w in range(1, self.n + 2) if w != self.u_star]


def random_instance(n: int, rng: np.random.Generator, variant=DISCONNECTIVITY, density=0.5):
    size = (n // 2) ** 2 if variant == BIPARTITENESS else n * (n - 1) // 2
    x = tuple(int(b) for b in (rng.random(size) < density))
    i_star = int(rng.integers(1, size + 1))
    return IndexInstance(n, x, i_star, variant)


@dataclass(frozen=True)
class MerlinList:
    u_star: int
    neighbor_bits: tuple

    def edges(self, inst: IndexInstance) -> list[tuple[int, int]]:
        return [(self.u_star, w) for w, b in zip(inst.others(), self.neighbor_bits) if b]

    def help_bits(self) -> int:
        return len(self.neighbor_bits)


def build_alice_stream(inst: IndexInstance) -> tuple[StreamHeader, list[StreamUpdate]]:
    header = StreamHeader(inst.n + 1, UpdateModel.XOR)
    ups = [StreamUpdate(*inst.edge(i)) for i, bit in enumerate(inst.x, start=1) if bit]
    if inst.variant == BIPARTITENESS:
        ups += [StreamUpdate(r, inst.v_star) for r in range(inst.n // 2 + 1, inst.n + 1)]
    else:
        ups += [StreamUpdate(w, inst.v_star) for w in range(1, inst.n + 1)]
    return header, ups


def honest_merlin(inst: IndexInstance) -> MerlinList:
    header, ups = build_alice_stream(inst)
    g = accumulate(header, ups)
    u = inst.u_star
    return MerlinList(u, tuple(int(g[u, w] > 0) for w in inst.others()))


def bob_suffix(inst: IndexInstance, lst: MerlinList) -> list[StreamUpdate]:
    suffix = [StreamUpdate(a, b) for a, b in lst.edges(inst)]
    if inst.variant == BIPARTITENESS:
        suffix.append(StreamUpdate(inst.u_star, inst.v_star))
    return suffix


def final_graph(inst: IndexInstance, lst: MerlinList) -> GraphMatrix:
    header, ups = build_alice_stream(inst)
    return accumulate(header, ups + bob_suffix(inst, lst))


def _syntax_ok(inst: IndexInstance, lst: MerlinList) -> bool:
    if lst.u_star != inst.u_star or len(lst.neighbor_bits) != inst.n:
        return False
    if inst.variant == BIPARTITENESS:
        # a left node can only neighbour right nodes in G'_2
        right = set(range(inst.n // 2 + 1, inst.n + 1))
        return all(w in right for _, w in lst.edges(inst))
    return True


def default_decide(variant: str) -> Callable[[GraphMatrix], bool]:
    if variant == BIPARTITENESS:
        return oracle_bipartite
    return lambda g: not oracle_connected(g)


def bob_decide(inst: IndexInstance, lst: MerlinList, decide: Optional[Callable] = None):
    """1 iff decide(G_3) holds and the list names the target edge; Reject on bad syntax."""
    if len(lst.neighbor_bits) != inst.n:
        raise ValueError(f"Merlin's list must have exactly {inst.n} bits")
    if not _syntax_ok(inst, lst):
        return Reject("list names a node that cannot neighbour u_{i*}")
    decide = decide or default_decide(inst.variant)
    g3 = final_graph(inst, lst)
    target_listed = (inst.u_star, inst.target[1]) in set(lst.edges(inst))
    return int(bool(decide(g3)) and target_listed)


def claim_holds(inst: IndexInstance, lst: MerlinList) -> bool:
    """Check "property(G_3) iff list == I(u_{i*})" for one list."""
    honest = honest_merlin(inst)
    g3 = final_graph(inst, lst)
    prop = default_decide(inst.variant)(g3)
    return prop == (lst.neighbor_bits == honest.neighbor_bits)
