"""Graph streams, generators and brute-force ground-truth oracles."""

from __future__ import annotations

import enum
import io
import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .field import make_rng


class MalformedStream(ValueError):
    pass


class OracleScale(ValueError):
    pass


class UpdateModel(enum.Enum):
    TURNSTILE = "turnstile"
    XOR = "xor"


@dataclass(frozen=True)
class StreamHeader:
    n: int
    model: UpdateModel = UpdateModel.TURNSTILE
    B: int = 1
    declared_length: Optional[int] = None

    def __post_init__(self):
        if self.n < 2:
            raise MalformedStream("need n >= 2")
        if self.B < 1:
            raise MalformedStream("need B >= 1")


@dataclass(frozen=True)
class StreamUpdate:
    u: int
    v: int
    delta: int = 1

    def check(self, header: StreamHeader) -> None:
        if not (1 <= self.u <= header.n and 1 <= self.v <= header.n):
            raise MalformedStream(f"node out of range in {self}")
        if self.u == self.v:
            raise MalformedStream(f"self-loop {self}")
        if header.model is UpdateModel.XOR:
            if self.delta != 1:
                raise MalformedStream("xor tokens carry no multiplicity")
        elif self.delta == 0 or abs(self.delta) > header.B:
            raise MalformedStream(f"|delta| must be in [1, B] in {self}")


@dataclass
class GraphMatrix:
    """Symmetric multiplicity matrix; node ``v`` lives at index ``v - 1``."""

    n: int
    mult: np.ndarray = field(repr=False)

    def __getitem__(self, uv):
        u, v = uv
        return int(self.mult[u - 1, v - 1])

    def edges(self):
        """(u, v, multiplicity) with u < v and multiplicity != 0."""
        iu, iv = np.nonzero(np.triu(self.mult, 1))
        return [(int(a) + 1, int(b) + 1, int(self.mult[a, b])) for a, b in zip(iu, iv)]

    def adjacency_masks(self) -> list[int]:
        """Bitmask neighbourhoods (bit ``v-1`` set iff multiplicity >= 1)."""
        masks = []
        for row in self.mult > 0:
            m = 0
            for j in np.flatnonzero(row):
                m |= 1 << int(j)
            masks.append(m)
        return masks

    @classmethod
    def from_edges(cls, n: int, edges: Iterable) -> "GraphMatrix":
        mult = np.zeros((n, n), dtype=np.int64)
        for e in edges:
            u, v = e[0], e[1]
            c = e[2] if len(e) > 2 else 1
            mult[u - 1, v - 1] += c
            mult[v - 1, u - 1] += c
        return cls(n, mult)


def accumulate(header: StreamHeader, updates: Iterable[StreamUpdate]) -> GraphMatrix:
    n = header.n
    mult = np.zeros((n, n), dtype=np.int64)
    for up in updates:
        up.check(header)
        a, b = up.u - 1, up.v - 1
        if header.model is UpdateModel.XOR:
            mult[a, b] ^= 1
            mult[b, a] ^= 1
        else:
            mult[a, b] += up.delta
            mult[b, a] += up.delta
    if header.model is UpdateModel.TURNSTILE:
        if (mult < 0).any():
            raise MalformedStream("edge deleted more often than inserted")
        if (mult > header.B).any():
            raise MalformedStream("edge multiplicity exceeds B")
    return GraphMatrix(n, mult)


# ---------------------------------------------------------------- oracles


def oracle_triangles(g: GraphMatrix) -> int:
    total = 0
    M = g.mult.tolist()
    for a, b, c in itertools.combinations(range(g.n), 3):
        x = M[a][b]
        if x:
            total += x * M[b][c] * M[c][a]
    return total


def oracle_fourcycles_incremental(header: StreamHeader, updates: Iterable[StreamUpdate]) -> int:
    """Direct replay of sum_i delta_i * sum_{z1,z2} E_i(u,z1) E_i(z1,z2) E_i(z2,v).

    ``E_i`` is the graph before update ``i``. This is the 4-cycle protocol's
    ground truth by definition; on simple insert-only streams it equals the
    number of 4-cycles.
    """
    n = header.n
    E = [[0] * n for _ in range(n)]
    total = 0
    for up in updates:
        up.check(header)
        u, v = up.u - 1, up.v - 1
        row_u = E[u]
        col_v = [E[z][v] for z in range(n)]
        s = 0
        for z1 in range(n):
            a = row_u[z1]
            if a:
                r1 = E[z1]
                s += a * sum(r1[z2] * col_v[z2] for z2 in range(n))
        total += up.delta * s
        E[u][v] += up.delta
        E[v][u] += up.delta
    if any(x < 0 or x > header.B for row in E for x in row):
        raise MalformedStream("final multiplicities outside [0, B]")
    return total


def count_four_cycles(g: GraphMatrix) -> int:
    """Combinatorial count of (simple-graph) 4-cycles by enumeration."""
    adj = g.mult > 0
    n = g.n
    count = 0
    for a, b, c, d in itertools.permutations(range(n), 4):
        # canonical: a smallest, b < d to kill rotations/reflections
        if a != min(a, b, c, d) or b > d:
            continue
        if adj[a, b] and adj[b, c] and adj[c, d] and adj[d, a]:
            count += 1
    return count


def _matching_search(masks: list[int], n: int):
    memo: dict[int, tuple] = {}

    def best(avail: int) -> tuple:
        # returns (size, edges) lexicographically least among maximum
        if avail == 0:
            return (0, ())
        hit = memo.get(avail)
        if hit is not None:
            return hit
        low = (avail & -avail).bit_length() - 1
        rest = avail & ~(1 << low)
        result = None
        nbrs = masks[low] & rest
        while nbrs:
            bit = nbrs & -nbrs
            nbrs ^= bit
            j = bit.bit_length() - 1
            size, edges = best(rest & ~bit)
            cand = (size + 1, ((low + 1, j + 1),) + edges)
            if result is None or cand[0] > result[0]:
                result = cand
        skip = best(rest)
        if result is None or skip[0] > result[0]:
            result = skip
        memo[avail] = result
        return result

    return best((1 << n) - 1)


def oracle_max_matching(g: GraphMatrix) -> tuple[int, list[tuple[int, int]]]:
    """Maximum matching by exhaustive search (lexicographically least witness)."""
    if g.n > 24:
        raise OracleScale("exhaustive matching oracle limited to n <= 24")
    size, edges = _matching_search(g.adjacency_masks(), g.n)
    return size, list(edges)


def _components_masks(masks: list[int], alive: int) -> list[int]:
    comps = []
    todo = alive
    while todo:
        seed = todo & -todo
        comp = seed
        frontier = seed
        while frontier:
            bit = frontier & -frontier
            frontier ^= bit
            nb = masks[bit.bit_length() - 1] & alive & ~comp
            comp |= nb
            frontier |= nb
        comps.append(comp)
        todo &= ~comp
    return comps


def oracle_components(g: GraphMatrix, exclude=()) -> tuple[dict[int, int], int]:
    """Component labels (smallest node id) on V minus ``exclude`` and the odd count."""
    parent = {v: v for v in range(1, g.n + 1) if v not in set(exclude)}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v, c in g.edges():
        if c > 0 and u in parent and v in parent:
            ru, rv = find(u), find(v)
            if ru != rv:
                parent[max(ru, rv)] = min(ru, rv)
    labels = {v: find(v) for v in parent}
    sizes: dict[int, int] = {}
    for lab in labels.values():
        sizes[lab] = sizes.get(lab, 0) + 1
    odd = sum(1 for s in sizes.values() if s % 2)
    return labels, odd


def tutte_berge_value(g: GraphMatrix, U) -> int:
    """|U| - odd(G-U) + |V|; twice the bound given by ``U``."""
    _, odd = oracle_components(g, U)
    return len(set(U)) - odd + g.n


def oracle_tutte_berge(g: GraphMatrix) -> tuple[int, list[int]]:
    """Minimise (|U| - odd(G-U) + n)/2 over all subsets; least minimiser."""
    n = g.n
    if n > 20:
        raise OracleScale("Tutte-Berge oracle limited to n <= 20")
    masks = g.adjacency_masks()
    full = (1 << n) - 1
    best_val = None
    best_sets = []
    for U in range(1 << n):
        comps = _components_masks(masks, full & ~U)
        odd = sum(1 for c in comps if bin(c).count("1") % 2)
        val = bin(U).count("1") - odd + n
        if best_val is None or val < best_val:
            best_val, best_sets = val, [U]
        elif val == best_val:
            best_sets.append(U)
    as_lists = [[i + 1 for i in range(n) if U >> i & 1] for U in best_sets]
    ustar = min(as_lists)
    assert best_val % 2 == 0
    value = best_val // 2
    if n <= 24:
        k, _ = oracle_max_matching(g)
        assert k == value, "Tutte-Berge duality violated"
    return value, ustar


def oracle_connected(g: GraphMatrix) -> bool:
    masks = g.adjacency_masks()
    return len(_components_masks(masks, (1 << g.n) - 1)) == 1


def oracle_bipartite(g: GraphMatrix) -> bool:
    n = g.n
    adj = [np.flatnonzero(row).tolist() for row in (g.mult > 0)]
    color = [-1] * n
    for s in range(n):
        if color[s] >= 0:
            continue
        color[s] = 0
        q = deque([s])
        while q:
            x = q.popleft()
            for y in adj[x]:
                if color[y] < 0:
                    color[y] = 1 - color[x]
                    q.append(y)
                elif color[y] == color[x]:
                    return False
    return True


# ---------------------------------------------------------------- generation


@dataclass(frozen=True)
class GenSpec:
    n: int
    m: int
    B: int = 1
    model: UpdateModel = UpdateModel.TURNSTILE
    deletion_fraction: float = 0.0
    seed: int = 0


def generate(spec: GenSpec) -> tuple[StreamHeader, list[StreamUpdate]]:
    """Deterministic pseudorandom stream.

    Turnstile deletions only remove previously net-inserted copies, so the
    end-of-stream multiplicities always land in [0, B].
    """
    n, B = spec.n, spec.B
    pairs = n * (n - 1) // 2
    if spec.model is UpdateModel.TURNSTILE and spec.deletion_fraction == 0 and spec.m > pairs * B:
        raise ValueError(f"m={spec.m} exceeds the {pairs * B} insertions available")
    if not 0 <= spec.deletion_fraction < 1:
        raise ValueError("deletion_fraction must be in [0, 1)")
    rng = make_rng(spec.seed)
    header = StreamHeader(n, spec.model, B, spec.m)
    updates = []

    def random_pair():
        u, v = rng.choice(n, size=2, replace=False) + 1
        return int(min(u, v)), int(max(u, v))

    if spec.model is UpdateModel.XOR:
        for _ in range(spec.m):
            u, v = random_pair()
            updates.append(StreamUpdate(u, v))
        return header, updates

    mult: dict[tuple[int, int], int] = {}
    present: list[tuple[int, int]] = []  # one entry per net-inserted copy
    for _ in range(spec.m):
        delete = present and rng.random() < spec.deletion_fraction
        if not delete and len(present) >= pairs * B:
            delete = True
        if delete:
            idx = int(rng.integers(len(present)))
            e = present[idx]
            present[idx] = present[-1]
            present.pop()
            mult[e] -= 1
            updates.append(StreamUpdate(e[0], e[1], -1))
        else:
            while True:
                e = random_pair()
                if mult.get(e, 0) < B:
                    break
            mult[e] = mult.get(e, 0) + 1
            present.append(e)
            if rng.random() < 0.5:
                e = (e[1], e[0])
            updates.append(StreamUpdate(e[0], e[1], 1))
    return header, updates


# ---------------------------------------------------------------- text format


def dumps_stream(header: StreamHeader, updates: Iterable[StreamUpdate]) -> str:
    out = io.StringIO()
    out.write(f"n={header.n} model={header.model.value} B={header.B}\n")
    for up in updates:
        if header.model is UpdateModel.XOR:
            out.write(f"{up.u} {up.v}\n")
        else:
            out.write(f"{up.u} {up.v} {up.delta}\n")
    return out.getvalue()


def loads_stream(text: str) -> tuple[StreamHeader, list[StreamUpdate]]:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise MalformedStream("empty stream file")
    fields = {}
    for tok in lines[0].split():
        if "=" not in tok:
            raise MalformedStream(f"bad header token {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    try:
        header = StreamHeader(
            int(fields["n"]), UpdateModel(fields.get("model", "turnstile")), int(fields.get("B", 1))
        )
    except (KeyError, ValueError) as exc:
        raise MalformedStream(f"bad header line: {lines[0]!r}") from exc
    updates = []
    want = 2 if header.model is UpdateModel.XOR else 3
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != want:
            raise MalformedStream(f"bad update line {ln!r}")
        try:
            nums = [int(x) for x in parts]
        except ValueError as exc:
            raise MalformedStream(f"bad update line {ln!r}") from exc
        up = StreamUpdate(*nums)
        up.check(header)
        updates.append(up)
    return header, updates
