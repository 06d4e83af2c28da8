"""Interactive 4-cycle scheme: two-round sum-check over

    g(Z1, Z2) = sum_i delta_i * E~_i(u_i, Z1) * E~_i(Z1, Z2) * E~_i(Z2, v_i)

with prover messages s1(Z1) = sum_{z2} g(Z1, z2), then s2(Z2) = g(r1, Z2).
Both verifier points are drawn before the stream so g(r1, r2) can be built
in one pass; only r1 is ever revealed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .field import FieldContext, SchemeKind
from .outcome import Accept, MalformedProof, ProtocolViolation, Reject
from .poly import PointValuePoly, build_table, eval_point_value, lagrange_rows, range_sum
from .stream import MalformedStream, StreamHeader, StreamUpdate
from .triangles import _validated


class FourCycleSketch:
    def __init__(self, field: FieldContext, n: int, r1: int, r2: int):
        if field.scheme_kind != SchemeKind.FOURCYCLES:
            raise ValueError("4-cycle sketch needs a FourCycles field")
        self.field = field
        self.n = n
        self.r1 = r1 % field.p
        self.r2 = r2 % field.p
        self.tableR1 = build_table(field, self.r1, n)
        self.tableR2 = build_table(field, self.r2, n)
        self.A = [0] * n    # E~(u, r1)
        self.Bv = [0] * n   # E~(u, r2)
        self.C = 0          # E~(r1, r2)
        self.S = 0          # running g(r1, r2)
        self.mul_counter = 0
        self.updates_seen = 0
        self.max_muls_per_update = 0

    def update(self, up: StreamUpdate) -> None:
        if up.u == up.v:
            raise MalformedStream(f"self-loop {up}")
        if not (1 <= up.u <= self.n and 1 <= up.v <= self.n):
            raise MalformedStream(f"node out of range in {up}")
        p = self.field.p
        a, b = up.u - 1, up.v - 1
        d = up.delta % p
        l1, l2 = self.tableR1.lam, self.tableR2.lam
        self.S = (self.S + d * self.A[a] % p * self.C % p * self.Bv[b]) % p
        self.A[a] = (self.A[a] + d * l1[b]) % p
        self.A[b] = (self.A[b] + d * l1[a]) % p
        self.Bv[a] = (self.Bv[a] + d * l2[b]) % p
        self.Bv[b] = (self.Bv[b] + d * l2[a]) % p
        self.C = (self.C + d * ((l1[a] * l2[b] + l1[b] * l2[a]) % p)) % p
        self.mul_counter += 10
        self.max_muls_per_update = 10
        self.updates_seen += 1

    def state_size(self) -> int:
        return 2 * self.n + 2 * self.n + 4


def fc_sketch_update(sketch: FourCycleSketch, update: StreamUpdate) -> None:
    sketch.update(update)


@dataclass
class FourCycleTranscript:
    s1: Optional[PointValuePoly] = None
    challenge_r1: Optional[int] = None
    s2: Optional[PointValuePoly] = None

    @property
    def prover_messages(self) -> int:
        return (self.s1 is not None) + (self.s2 is not None)

    @property
    def verifier_messages(self) -> int:
        return self.challenge_r1 is not None


def fc_prove_round1(field: FieldContext, header: StreamHeader, updates) -> PointValuePoly:
    """Values of s1 on 0..2n by dense replay, O(m n^2)."""
    updates = _validated(header, updates)
    n, p = header.n, field.p
    K = 2 * n + 1
    rows = lagrange_rows(field, range(K), n)       # rows[k][a-1] = lambda_a(y_k)
    E = [[0] * n for _ in range(n)]
    W = [[0] * n for _ in range(K)]                # W[k][z-1] = E~(y_k, z)
    out = [0] * K
    for up in updates:
        a, b = up.u - 1, up.v - 1
        d = up.delta % p
        col = [E[z][b] for z in range(n)]
        nz = [z for z in range(n) if col[z]]
        for k in range(K):
            w = W[k]
            if w[a]:
                inner = sum(w[z] * col[z] for z in nz) % p
                out[k] = (out[k] + d * w[a] % p * inner) % p
        for k in range(K):
            W[k][b] = (W[k][b] + d * rows[k][a]) % p
            W[k][a] = (W[k][a] + d * rows[k][b]) % p
        E[a][b] += up.delta
        E[b][a] += up.delta
    return PointValuePoly(field, tuple(out))


def fc_prove_round2(field: FieldContext, header: StreamHeader, updates, r1: int) -> PointValuePoly:
    """Values of s2(y) = g(r1, y) on 0..2n via one replica per point."""
    updates = _validated(header, updates)
    n, p = header.n, field.p
    K = 2 * n + 1
    r1 %= p
    l1 = lagrange_rows(field, [r1], n)[0]
    rows = lagrange_rows(field, range(K), n)
    lam = [[rows[k][v] for k in range(K)] for v in range(n)]
    A = [0] * n
    Bk = [[0] * K for _ in range(n)]
    Ck = [0] * K
    S = [0] * K
    for up in updates:
        a, b = up.u - 1, up.v - 1
        d = up.delta % p
        da = d * A[a] % p
        S = [(s + da * c % p * y) % p for s, c, y in zip(S, Ck, Bk[b])]
        A[a] = (A[a] + d * l1[b]) % p
        A[b] = (A[b] + d * l1[a]) % p
        Bk[a] = [(x + d * l) % p for x, l in zip(Bk[a], lam[b])]
        Bk[b] = [(x + d * l) % p for x, l in zip(Bk[b], lam[a])]
        ca, cb = d * l1[a] % p, d * l1[b] % p
        Ck = [(c + ca * lb + cb * la) % p for c, la, lb in zip(Ck, lam[a], lam[b])]
    return PointValuePoly(field, tuple(S))


def fc_verify(sketch: FourCycleSketch, transcript: FourCycleTranscript):
    if transcript.s1 is None or transcript.challenge_r1 is None or transcript.s2 is None:
        raise ProtocolViolation("incomplete transcript")
    if transcript.challenge_r1 % sketch.field.p != sketch.r1:
        raise ProtocolViolation("transcript challenge differs from the sketch's r1")
    n = sketch.n
    for s in (transcript.s1, transcript.s2):
        if len(s.values) != 2 * n + 1:
            raise MalformedProof("round polynomial has the wrong length")
    if range_sum(transcript.s2, 1, n) != eval_point_value(transcript.s1, sketch.r1):
        return Reject("sum of s2 over [n] != s1(r1)")
    if eval_point_value(transcript.s2, sketch.r2) != sketch.S:
        return Reject("s2(r2) != g(r1, r2)")
    return Accept(sketch.field.to_signed(range_sum(transcript.s1, 1, n)))


class _Phase(enum.Enum):
    STREAMING = 0
    AWAIT_S1 = 1
    AWAIT_S2 = 2
    DONE = 3


class FourCycleSession:
    """Verifier-side state machine enforcing s1 -> r1 -> s2."""

    def __init__(self, field: FieldContext, n: int, r1: int, r2: int):
        self.sketch = FourCycleSketch(field, n, r1, r2)
        self.transcript = FourCycleTranscript()
        self.phase = _Phase.STREAMING

    def update(self, up: StreamUpdate) -> None:
        if self.phase is not _Phase.STREAMING:
            raise ProtocolViolation("stream update after end of stream")
        self.sketch.update(up)

    def end_stream(self) -> None:
        if self.phase is not _Phase.STREAMING:
            raise ProtocolViolation("stream already ended")
        self.phase = _Phase.AWAIT_S1

    def receive_s1(self, s1: PointValuePoly) -> int:
        if self.phase is not _Phase.AWAIT_S1:
            raise ProtocolViolation(f"s1 not expected in phase {self.phase.name}")
        self.transcript.s1 = s1
        self.transcript.challenge_r1 = self.sketch.r1
        self.phase = _Phase.AWAIT_S2
        return self.sketch.r1

    def receive_s2(self, s2: PointValuePoly):
        if self.phase is not _Phase.AWAIT_S2:
            raise ProtocolViolation(f"s2 not expected in phase {self.phase.name}")
        self.transcript.s2 = s2
        self.phase = _Phase.DONE
        return fc_verify(self.sketch, self.transcript)
