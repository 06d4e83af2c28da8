"""Non-interactive triangle-counting scheme.

The verifier keeps ``E~_i(u, r)`` for every node plus a running value of
``g(r) = sum_i delta_i * E~_i(u_i, r) * E~_i(v_i, r)``; the prover sends
``g`` as its values on 0..2n once the stream has ended.
"""

from __future__ import annotations

from dataclasses import dataclass

from .field import FieldContext, SchemeKind
from .outcome import Accept, MalformedProof, Reject
from .poly import PointValuePoly, build_table, eval_point_value, lagrange_rows, range_sum
from .stream import MalformedStream, StreamHeader, StreamUpdate, UpdateModel, accumulate


class EdgeSketch:
    """Streaming evaluations ``evals[u-1] = E~(u, r)`` of the multiplicity LDE."""

    def __init__(self, field: FieldContext, n: int, r: int):
        self.field = field
        self.n = n
        self.r = r % field.p
        self.table = build_table(field, self.r, n)
        self.evals = [0] * n
        self.mul_counter = 0
        self.updates_seen = 0
        self.max_muls_per_update = 0

    def _check(self, up: StreamUpdate) -> None:
        if up.u == up.v:
            raise MalformedStream(f"self-loop {up}")
        if not (1 <= up.u <= self.n and 1 <= up.v <= self.n):
            raise MalformedStream(f"node out of range in {up}")

    def _bump_evals(self, up: StreamUpdate) -> int:
        p = self.field.p
        lam = self.table.lam
        d = up.delta % p
        ev = self.evals
        ev[up.u - 1] = (ev[up.u - 1] + d * lam[up.v - 1]) % p
        ev[up.v - 1] = (ev[up.v - 1] + d * lam[up.u - 1]) % p
        return 2

    def _tally(self, muls: int) -> None:
        self.mul_counter += muls
        self.updates_seen += 1
        if muls > self.max_muls_per_update:
            self.max_muls_per_update = muls

    def update(self, up: StreamUpdate) -> None:
        self._check(up)
        self._tally(self._bump_evals(up))

    def state_size(self) -> int:
        """Field elements held: evals, the Lagrange table, r."""
        return len(self.evals) + len(self.table.lam) + 1


class TriangleSketch(EdgeSketch):
    def __init__(self, field: FieldContext, n: int, r: int):
        if field.scheme_kind != SchemeKind.TRIANGLES:
            raise ValueError("triangle sketch needs a Triangles field")
        if field.n != n:
            raise ValueError("field context built for a different n")
        super().__init__(field, n, r)
        self.acc = 0

    def update(self, up: StreamUpdate) -> None:
        self._check(up)
        p = self.field.p
        # E~_i is the graph before update i, so the product uses old evals
        self.acc = (self.acc + (up.delta % p) * self.evals[up.u - 1] % p * self.evals[up.v - 1]) % p
        self._tally(2 + self._bump_evals(up))

    def state_size(self) -> int:
        return super().state_size() + 1


def sketch_init(field: FieldContext, n: int, secret_r: int) -> TriangleSketch:
    return TriangleSketch(field, n, secret_r)


def sketch_update(sketch: TriangleSketch, update: StreamUpdate) -> None:
    sketch.update(update)


@dataclass(frozen=True)
class TriangleProof:
    s: PointValuePoly

    def to_bytes(self) -> bytes:
        return self.s.to_bytes()

    @classmethod
    def from_bytes(cls, field: FieldContext, data: bytes) -> "TriangleProof":
        return cls(PointValuePoly.from_bytes(field, data))

    def annotation_bits(self) -> int:
        return 64 * len(self.s.values)


def replay_points(field: FieldContext, header: StreamHeader, updates, points, products=True):
    """Run one sketch replica per public point in a single pass over ``updates``.

    Returns ``(lde, acc)`` where ``lde[u-1][k] = E~(u, points[k])`` at end of
    stream and ``acc[k] = g(points[k])`` (zeros when ``products`` is False).
    """
    n, p = header.n, field.p
    K = len(points)
    rows = lagrange_rows(field, points, n)
    lam = [[rows[k][v] for k in range(K)] for v in range(n)]
    E = [[0] * K for _ in range(n)]
    acc = [0] * K
    for up in updates:
        a, b = up.u - 1, up.v - 1
        d = up.delta % p
        ea, eb = E[a], E[b]
        if products:
            acc = [(s + d * x % p * y) % p for s, x, y in zip(acc, ea, eb)]
        E[a] = [(x + d * l) % p for x, l in zip(ea, lam[b])]
        E[b] = [(y + d * l) % p for y, l in zip(eb, lam[a])]
    return E, acc


def _validated(header: StreamHeader, updates) -> list:
    if header.model is not UpdateModel.TURNSTILE:
        raise MalformedStream("scheme requires the strict turnstile model")
    updates = list(updates)
    accumulate(header, updates)
    return updates


def prove(field: FieldContext, header: StreamHeader, updates) -> TriangleProof:
    updates = _validated(header, updates)
    points = range(2 * header.n + 1)
    _, acc = replay_points(field, header, updates, points)
    return TriangleProof(PointValuePoly(field, tuple(acc)))


def verify(sketch: TriangleSketch, proof: TriangleProof):
    n = sketch.n
    if len(proof.s.values) != 2 * n + 1:
        raise MalformedProof(f"expected {2 * n + 1} values, got {len(proof.s.values)}")
    if proof.s.field.p != sketch.field.p:
        raise MalformedProof("proof encoded over a different field")
    if eval_point_value(proof.s, sketch.r) != sketch.acc:
        return Reject("s(r) != g(r)")
    return Accept(range_sum(proof.s, 1, n))
