"""Maximum-matching scheme: a certified matching for the lower bound and a
Tutte-Berge witness with checked component labels for the upper bound.

Edge-presence claims (matching edges, spanning-tree edges) go through a
"functional subset" check: for ordered pairs with distinct heads, the
polynomial ``p(Y) = sum_u P~(u, Y) * E~(u, Y)`` reads ``E(tail(v), v)`` at
every head ``v``, and the verifier tests ``p`` at its secret point using the
same ``E~(u, r)`` sketch it keeps for the Property-B check.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass

from .field import FieldContext, SchemeKind
from .outcome import Accept, MalformedProof, Reject
from .poly import PointValuePoly, eval_point_value, lagrange_rows, range_sum
from .stream import (
    StreamHeader,
    accumulate,
    oracle_components,
    oracle_max_matching,
    oracle_tutte_berge,
)
from .triangles import EdgeSketch, _validated, replay_points


class MatchingSketch(EdgeSketch):
    def __init__(self, field: FieldContext, n: int, r: int):
        if field.scheme_kind != SchemeKind.MATCHING:
            raise ValueError("matching sketch needs a Matching field")
        if field.n != n:
            raise ValueError("field context built for a different n")
        super().__init__(field, n, r)


@dataclass(frozen=True)
class FunctionalPairSet:
    """Ordered (tail, head) pairs with every head distinct."""

    pairs: tuple

    def __post_init__(self):
        heads = [h for _, h in self.pairs]
        if len(set(heads)) != len(heads):
            raise ValueError("functional pair set has a repeated head")
        for t, h in self.pairs:
            if t == h:
                raise ValueError(f"degenerate pair ({t}, {h})")

    @classmethod
    def of(cls, pairs) -> "FunctionalPairSet":
        return cls(tuple((int(a), int(b)) for a, b in pairs))


def _presence_values(field, pairs, lde, K):
    p = field.p
    n = len(lde)
    rows = None
    out = [0] * K
    if not pairs:
        return out
    # lambda_head(y) at every public point y; rows[k][v-1]
    rows = lagrange_rows(field, range(K), n)
    for k in range(K):
        row = rows[k]
        s = 0
        for t, h in pairs:
            s += row[h - 1] * lde[t - 1][k]
        out[k] = s % p
    return out


def functional_subset_prove(field: FieldContext, header: StreamHeader, updates, pairs, lde=None):
    pairs = pairs if isinstance(pairs, FunctionalPairSet) else FunctionalPairSet.of(pairs)
    K = 2 * header.n + 1
    if lde is None:
        updates = _validated(header, updates)
        lde, _ = replay_points(field, header, updates, range(K), products=False)
    return PointValuePoly(field, tuple(_presence_values(field, pairs.pairs, lde, K)))


def functional_subset_verify(sketch: EdgeSketch, pairs, t: PointValuePoly):
    """Accept with ``{head: multiplicity}`` or Reject."""
    pairs = pairs if isinstance(pairs, FunctionalPairSet) else FunctionalPairSet.of(pairs)
    n, p = sketch.n, sketch.field.p
    if len(t.values) != 2 * n + 1:
        raise MalformedProof("presence polynomial has the wrong length")
    lam = sketch.table.lam
    expected = 0
    for tail, head in pairs.pairs:
        expected += lam[head - 1] * sketch.evals[tail - 1]
    if eval_point_value(t, sketch.r) != expected % p:
        return Reject("presence polynomial fails the random-point check")
    return Accept({h: t.values[h] for _, h in pairs.pairs})


def fast_D_evals(Ustar, L, lam, n: int) -> list[int]:
    """``D~(u, r)`` for u = 1..n given the table values ``lam[v-1] = lambda_v(r)``.

    Uses H = sum over V minus U* and one sum per label, so O(n) overall.
    """
    p = None
    if hasattr(lam, "field"):
        p = lam.field.p
        lam = lam.lam
    labels = dict(L)
    H = 0
    per_label: dict[int, int] = {}
    for v, lab in labels.items():
        H += lam[v - 1]
        per_label[lab] = per_label.get(lab, 0) + lam[v - 1]
    out = [0] * n
    for u in range(1, n + 1):
        lab = labels.get(u)
        if lab is not None:
            out[u - 1] = H - per_label[lab]
    if p is not None:
        out = [x % p for x in out]
    return out


@dataclass(frozen=True)
class MatchingProof:
    k: int
    M: tuple                    # (tail, head) per matching edge
    tM: PointValuePoly
    Ustar: tuple
    L: tuple                    # (node, label)
    trees: tuple                # (child, parent)
    tT: PointValuePoly
    sB: PointValuePoly

    def sections(self) -> list[bytes]:
        def pairs(ps):
            return struct.pack("<I", len(ps)) + b"".join(struct.pack("<II", a, b) for a, b in ps)

        def ids(xs):
            return struct.pack("<I", len(xs)) + b"".join(struct.pack("<I", x) for x in xs)

        return [
            struct.pack("<I", self.k),
            pairs(self.M),
            self.tM.to_bytes(),
            ids(self.Ustar),
            pairs(self.L),
            pairs(self.trees),
            self.tT.to_bytes(),
            self.sB.to_bytes(),
        ]

    @classmethod
    def from_sections(cls, field: FieldContext, secs: list[bytes]) -> "MatchingProof":
        if len(secs) != 8:
            raise MalformedProof(f"matching proof needs 8 sections, got {len(secs)}")

        def count(b, width):
            if len(b) < 4:
                raise MalformedProof("truncated section")
            (c,) = struct.unpack_from("<I", b)
            if len(b) != 4 + width * c:
                raise MalformedProof("section length mismatch")
            return c

        def pairs(b):
            c = count(b, 8)
            return tuple(struct.unpack_from("<II", b, 4 + 8 * i) for i in range(c))

        def ids(b):
            c = count(b, 4)
            return tuple(struct.unpack_from("<I", b, 4 + 4 * i)[0] for i in range(c))

        def poly(b):
            try:
                return PointValuePoly.from_bytes(field, b)
            except ValueError as exc:
                raise MalformedProof(str(exc)) from exc

        if len(secs[0]) != 4:
            raise MalformedProof("bad k section")
        return cls(
            struct.unpack("<I", secs[0])[0],
            pairs(secs[1]),
            poly(secs[2]),
            ids(secs[3]),
            pairs(secs[4]),
            pairs(secs[5]),
            poly(secs[6]),
            poly(secs[7]),
        )

    def annotation_bits(self) -> int:
        """Content bits: 32 per node id or count, 64 per field element."""
        return (
            32
            + 64 * len(self.M)
            + 64 * len(self.tM.values)
            + 32 * len(self.Ustar)
            + 64 * len(self.L)
            + 64 * len(self.trees)
            + 64 * len(self.tT.values)
            + 64 * len(self.sB.values)
        )

    def stored_words(self) -> int:
        """Words the verifier keeps explicitly (M, U*, L, trees)."""
        return 2 * len(self.M) + len(self.Ustar) + 2 * len(self.L) + 2 * len(self.trees)


def spanning_forest(g, labels: dict[int, int]) -> list[tuple[int, int]]:
    """BFS trees rooted at each label node; returns (child, parent) pairs."""
    adj = {v: [] for v in labels}
    for u, v, c in g.edges():
        if c > 0 and u in labels and v in labels:
            adj[u].append(v)
            adj[v].append(u)
    out = []
    seen = set()
    for root in sorted(set(labels.values())):
        seen.add(root)
        q = deque([root])
        while q:
            x = q.popleft()
            for y in sorted(adj[x]):
                if y not in seen:
                    seen.add(y)
                    out.append((y, x))
                    q.append(y)
    return out


def property_b_values(field: FieldContext, Ustar, L, lde, n: int) -> list[int]:
    """``sum_u D~(u, y) * E~(u, y)`` at y = 0..2n."""
    p = field.p
    K = 2 * n + 1
    rows = lagrange_rows(field, range(K), n)
    out = []
    for k in range(K):
        D = fast_D_evals(Ustar, L, rows[k], n)
        out.append(sum(D[u] % p * lde[u][k] for u in range(n)) % p)
    return out


def prove_matching(field: FieldContext, header: StreamHeader, updates) -> MatchingProof:
    updates = _validated(header, updates)
    g = accumulate(header, updates)
    k, M = oracle_max_matching(g)
    _, Ustar = oracle_tutte_berge(g)
    labels, _ = oracle_components(g, Ustar)
    trees = spanning_forest(g, labels)
    return assemble_matching_proof(field, header, updates, k, M, Ustar, labels, trees)


def assemble_matching_proof(field, header, updates, k, M, Ustar, labels, trees, lde=None):
    """Build the algebraic parts for given combinatorial parts (also used by attacks)."""
    n = header.n
    K = 2 * n + 1
    if lde is None:
        lde, _ = replay_points(field, header, updates, range(K), products=False)
    L = tuple(sorted(dict(labels).items()))
    tM = functional_subset_prove(field, header, None, M, lde=lde)
    tT = functional_subset_prove(field, header, None, [(par, ch) for ch, par in trees], lde=lde)
    sB = PointValuePoly(field, tuple(property_b_values(field, Ustar, L, lde, n)))
    return MatchingProof(
        k, tuple(tuple(e) for e in M), tM, tuple(Ustar), L, tuple(tuple(t) for t in trees), tT, sB
    )


def _check_nodes(proof: MatchingProof, n: int) -> None:
    def ok(v):
        return 1 <= v <= n

    nodes = [v for e in proof.M for v in e] + list(proof.Ustar)
    nodes += [v for v, _ in proof.L] + [v for e in proof.trees for v in e]
    if not all(ok(v) for v in nodes):
        raise MalformedProof("node id out of range")
    for poly in (proof.tM, proof.tT, proof.sB):
        if len(poly.values) != 2 * n + 1:
            raise MalformedProof("polynomial section has the wrong length")


def verify_matching(sketch: MatchingSketch, proof: MatchingProof):
    n, B, p = sketch.n, sketch.field.B, sketch.field.p
    _check_nodes(proof, n)

    # (1) Property 1: M is a matching
    touched = set()
    for a, b in proof.M:
        if a == b or a in touched or b in touched:
            return Reject("M is not a matching")
        touched.update((a, b))

    # (2) M is a subset of E
    res = functional_subset_verify(sketch, proof.M, proof.tM)
    if not res.accepted:
        return Reject("matching presence: " + res.reason)
    if not all(1 <= m <= B for m in res.value.values()):
        return Reject("matching edge absent from the graph")

    # (3) U* and L exactly cover V
    Ustar = set(proof.Ustar)
    if len(Ustar) != len(proof.Ustar):
        return Reject("U* repeats a node")
    labels = {}
    for v, lab in proof.L:
        if v in labels or v in Ustar:
            return Reject("L does not list each node of V - U* exactly once")
        labels[v] = lab
    if len(labels) + len(Ustar) != n:
        return Reject("L does not cover V - U*")

    # (4) Property A: each label class is spanned by its tree
    parent = {}
    for child, par in proof.trees:
        if child in parent:
            return Reject("node with two parents")
        if child not in labels or par not in labels or labels[child] != labels[par]:
            return Reject("tree edge leaves its label class")
        parent[child] = par
    classes: dict[int, list[int]] = {}
    for v, lab in labels.items():
        classes.setdefault(lab, []).append(v)
    uf = {v: v for v in labels}

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for child, par in parent.items():
        a, b = find(child), find(par)
        if a == b:
            return Reject("tree edges contain a cycle")
        uf[a] = b
    for members in classes.values():
        roots = [v for v in members if v not in parent]
        if len(roots) != 1:
            return Reject("label class does not have exactly one root")
        if len({find(v) for v in members}) != 1:
            return Reject("tree does not span its label class")

    # (5) tree edges are in E
    tree_pairs = [(par, child) for child, par in proof.trees]
    res = functional_subset_verify(sketch, tree_pairs, proof.tT)
    if not res.accepted:
        return Reject("tree presence: " + res.reason)
    if not all(1 <= m <= B for m in res.value.values()):
        return Reject("tree edge absent from the graph")

    # (6) Property B: no edge between different labels
    D = fast_D_evals(proof.Ustar, proof.L, sketch.table, n)
    expected = sum(d * e for d, e in zip(D, sketch.evals)) % p
    if eval_point_value(proof.sB, sketch.r) != expected:
        return Reject("Property B polynomial fails the random-point check")
    if range_sum(proof.sB, 1, n) != 0:
        return Reject("edge between two claimed components")

    # (7) Tutte-Berge arithmetic
    odd = sum(1 for members in classes.values() if len(members) % 2)
    if proof.k != len(proof.M) or 2 * proof.k != len(Ustar) - odd + n:
        return Reject("claimed k does not match the certificates")
    return Accept(proof.k)
