"""Lagrange basis over the node domain {1..n} and point-value polynomials."""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .field import FieldContext, FieldError, decode_element, encode_element


@dataclass(frozen=True)
class LagrangeTable:
    """``lam[v-1] = lambda_v(r)`` for the basis on nodes 1..n."""

    field: FieldContext
    r: int
    n: int
    lam: tuple

    def __getitem__(self, v: int) -> int:
        return self.lam[v - 1]


def _denominators(field: FieldContext, n: int) -> list[int]:
    """prod_{v' != v} (v - v') for v = 1..n, as residues."""
    p = field.p
    fact = [1] * (n + 1)
    for i in range(1, n + 1):
        fact[i] = fact[i - 1] * i % p
    out = []
    for v in range(1, n + 1):
        d = fact[v - 1] * fact[n - v] % p
        out.append(-d % p if (n - v) % 2 else d)
    return out


def _numerators_direct(field: FieldContext, r: int, n: int) -> list[int]:
    """prod_{v' != v} (r - v') via prefix/suffix products (no division)."""
    p = field.p
    diffs = [(r - v) % p for v in range(1, n + 1)]
    prefix = [1] * (n + 1)
    for i, d in enumerate(diffs):
        prefix[i + 1] = prefix[i] * d % p
    out = [0] * n
    suffix = 1
    for i in range(n - 1, -1, -1):
        out[i] = prefix[i] * suffix % p
        suffix = suffix * diffs[i] % p
    return out


def build_table(field: FieldContext, r: int, n: int) -> LagrangeTable:
    """Verifier-side table via the incremental q1/q2 recurrences.

    ``q1(v) = prod_{v' != v}(r - v')`` and ``q2(v)`` is the inverse of
    ``prod_{v' != v}(v - v')``. Falls back to direct products when ``r`` lies
    in {1..n}, where the q1 recurrence would divide by zero.
    """
    if n < 1:
        raise FieldError("n must be >= 1")
    if n >= field.p:
        raise FieldError("domain {1..n} must be distinct in F_p")
    p = field.p
    r %= p
    if 1 <= r <= n:
        nums = _numerators_direct(field, r, n)
        dens = _denominators(field, n)
        lam = tuple(a * field.inv(b) % p for a, b in zip(nums, dens))
        return LagrangeTable(field, r, n, lam)

    q1 = 1
    for v in range(2, n + 1):
        q1 = q1 * (r - v) % p
    q2_den = 1
    for v in range(2, n + 1):
        q2_den = q2_den * (1 - v) % p
    q2 = field.inv(q2_den)
    lam = [q1 * q2 % p]
    for v in range(2, n + 1):
        q1 = q1 * field.inv(r - v) % p * ((r - v + 1) % p) % p
        q2 = q2 * (n - v + 1) % p * field.inv(-(v - 1)) % p
        lam.append(q1 * q2 % p)
    return LagrangeTable(field, r, n, tuple(lam))


def lagrange_rows(field: FieldContext, points, n: int) -> list[list[int]]:
    """Rows ``[lambda_1(x), ..., lambda_n(x)]`` for each public point ``x``.

    Prover-side helper: shares the denominators across points, O(n) per point.
    """
    p = field.p
    inv_dens = [field.inv(d) for d in _denominators(field, n)]
    rows = []
    for x in points:
        nums = _numerators_direct(field, x, n)
        rows.append([a * b % p for a, b in zip(nums, inv_dens)])
    return rows


@dataclass(frozen=True)
class PointValuePoly:
    """Degree <= d polynomial stored as its values at 0..d."""

    field: FieldContext
    values: tuple

    def __post_init__(self):
        p = self.field.p
        for v in self.values:
            if not 0 <= v < p:
                raise FieldError(f"non-canonical value {v}")

    @property
    def degree_bound(self) -> int:
        return len(self.values) - 1

    @classmethod
    def zero(cls, field: FieldContext, d: int) -> "PointValuePoly":
        return cls(field, (0,) * (d + 1))

    def to_bytes(self) -> bytes:
        return struct.pack("<I", len(self.values)) + b"".join(
            encode_element(v) for v in self.values
        )

    @classmethod
    def from_bytes(cls, field: FieldContext, data: bytes) -> "PointValuePoly":
        if len(data) < 4:
            raise FieldError("truncated polynomial")
        (count,) = struct.unpack_from("<I", data)
        if len(data) != 4 + 8 * count:
            raise FieldError("polynomial length does not match its count")
        vals = tuple(
            decode_element(data[4 + 8 * i : 12 + 8 * i], field.p) for i in range(count)
        )
        return cls(field, vals)


def eval_point_value(poly: PointValuePoly, r: int) -> int:
    """Evaluate at ``r`` in O(d) with prefix/suffix products of (r - x)."""
    field = poly.field
    p = field.p
    vals = poly.values
    d = len(vals) - 1
    r %= p
    if r <= d:
        return vals[r]
    diffs = [(r - x) % p for x in range(d + 1)]
    prefix = [1] * (d + 2)
    for i in range(d + 1):
        prefix[i + 1] = prefix[i] * diffs[i] % p
    # barycentric weights 1 / prod_{j != x}(x - j) = (-1)^(d-x) / (x! (d-x)!)
    fact = [1] * (d + 1)
    for i in range(1, d + 1):
        fact[i] = fact[i - 1] * i % p
    inv_fact_d = field.inv(fact[d])
    inv_fact = [0] * (d + 1)
    inv_fact[d] = inv_fact_d
    for i in range(d, 0, -1):
        inv_fact[i - 1] = inv_fact[i] * i % p
    total = 0
    suffix = 1
    for x in range(d, -1, -1):
        w = inv_fact[x] * inv_fact[d - x] % p
        if (d - x) % 2:
            w = p - w if w else 0
        total += vals[x] * w % p * prefix[x] % p * suffix
        suffix = suffix * diffs[x] % p
    return total % p


def range_sum(poly: PointValuePoly, a: int, b: int) -> int:
    if not 0 <= a <= b <= poly.degree_bound:
        raise FieldError(f"range [{a}, {b}] outside 0..{poly.degree_bound}")
    return sum(poly.values[a : b + 1]) % poly.field.p
