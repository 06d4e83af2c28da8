"""Prime-field arithmetic and per-scheme field selection.

Hot loops in the sketches work on plain ``int`` residues through a
:class:`FieldContext`; :class:`FieldElement` is the checked wrapper used at
API boundaries (it refuses to mix fields).
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field

import numpy as np

MAX_MODULUS = 1 << 63


class FieldError(ValueError):
    pass


class SchemeKind(enum.IntEnum):
    TRIANGLES = 0
    MATCHING = 1
    FOURCYCLES = 2


def is_prime(x: int) -> bool:
    """Deterministic trial division; fine for desk-scale moduli."""
    if x < 2:
        return False
    if x % 2 == 0:
        return x == 2
    if x % 3 == 0:
        return x == 3
    i = 5
    while i * i <= x:
        if x % i == 0 or x % (i + 2) == 0:
            return False
        i += 6
    return True


def _miller_rabin(x: int) -> bool:
    # deterministic for x < 3.3e24 with these bases
    if x < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if x % q == 0:
            return x == q
    d, s = x - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        y = pow(a, d, x)
        if y in (1, x - 1):
            continue
        for _ in range(s - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return False
    return True


def find_prime(lower: int) -> int:
    """Smallest prime >= ``lower``."""
    if lower < 2:
        raise FieldError("lower must be >= 2")
    if lower >= 1 << 62:
        raise FieldError("lower bound outside the single-word window")
    x = lower
    while not _miller_rabin(x):
        x += 1
        if x >= MAX_MODULUS:
            raise OverflowError("no prime below 2**63 above lower bound")
    return x


def field_window(kind: SchemeKind, n: int, B: int) -> tuple[int, int]:
    """Inclusive (lo, hi) bounds on the modulus for a scheme."""
    if kind == SchemeKind.TRIANGLES:
        lo = 6 * (B * n) ** 3
        return lo, 2 * lo
    if kind == SchemeKind.FOURCYCLES:
        lo = 12 * (B * n) ** 4
        return lo, 2 * lo
    # matching: the sum of D*E over all pairs reaches 2Bn^2 and must not wrap
    lo = max(2 * n**3, 4 * B * n * n + 1)
    return lo, 2 * lo


@dataclass(frozen=True)
class FieldContext:
    p: int
    scheme_kind: SchemeKind
    n: int
    B: int = 1

    def __post_init__(self):
        if not 2 <= self.p < MAX_MODULUS:
            raise FieldError(f"modulus {self.p} outside [2, 2**63)")
        if not _miller_rabin(self.p):
            raise FieldError(f"modulus {self.p} is not prime")

    @classmethod
    def for_scheme(cls, kind: SchemeKind, n: int, B: int = 1) -> "FieldContext":
        lo, _ = field_window(kind, n, B)
        return cls(find_prime(max(lo, 2)), SchemeKind(kind), n, B)

    def in_window(self) -> bool:
        lo, hi = field_window(self.scheme_kind, self.n, self.B)
        return lo <= self.p <= hi

    # raw residue operations
    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def mul(self, a: int, b: int) -> int:
        return a * b % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def inv(self, a: int) -> int:
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of zero in F_p")
        return pow(a, self.p - 2, self.p)

    def pow(self, a: int, e: int) -> int:
        if e < 0:
            return pow(self.inv(a), -e, self.p)
        return pow(a, e, self.p)

    def reduce(self, x: int) -> int:
        return x % self.p

    def to_signed(self, a: int) -> int:
        """Centered representative in (-p/2, p/2]."""
        return a - self.p if a > self.p // 2 else a

    def element(self, value: int) -> "FieldElement":
        return FieldElement(self, value % self.p)

    def sample(self, rng: np.random.Generator) -> int:
        """Uniform residue by rejection on ``bit_length(p)``-bit draws."""
        bits = self.p.bit_length()
        while True:
            x = int(rng.integers(0, 1 << bits, dtype=np.uint64))
            if x < self.p:
                return x

    def to_bytes(self) -> bytes:
        return struct.pack("<BIIQ", int(self.scheme_kind), self.n, self.B, self.p)

    @classmethod
    def from_bytes(cls, data: bytes) -> "FieldContext":
        kind, n, B, p = struct.unpack("<BIIQ", data)
        return cls(p, SchemeKind(kind), n, B)


FIELD_CONTEXT_SIZE = struct.calcsize("<BIIQ")


@dataclass(frozen=True)
class FieldElement:
    ctx: FieldContext = field(repr=False)
    value: int

    def __post_init__(self):
        if not 0 <= self.value < self.ctx.p:
            raise FieldError(f"non-canonical value {self.value} for p={self.ctx.p}")

    def _check(self, other: "FieldElement") -> None:
        if not isinstance(other, FieldElement):
            raise TypeError("operand is not a FieldElement")
        if other.ctx.p != self.ctx.p:
            raise FieldError("mixed-field operands")

    def __add__(self, other):
        self._check(other)
        return FieldElement(self.ctx, (self.value + other.value) % self.ctx.p)

    def __sub__(self, other):
        self._check(other)
        return FieldElement(self.ctx, (self.value - other.value) % self.ctx.p)

    def __mul__(self, other):
        self._check(other)
        return FieldElement(self.ctx, self.value * other.value % self.ctx.p)

    def __neg__(self):
        return FieldElement(self.ctx, -self.value % self.ctx.p)

    def inv(self) -> "FieldElement":
        return FieldElement(self.ctx, self.ctx.inv(self.value))

    def __pow__(self, e: int):
        return FieldElement(self.ctx, self.ctx.pow(self.value, e))

    def __int__(self):
        return self.value

    def to_bytes(self) -> bytes:
        return encode_element(self.value)


def encode_element(value: int) -> bytes:
    return struct.pack("<Q", value)


def decode_element(data: bytes, p: int) -> int:
    if len(data) != 8:
        raise FieldError(f"field element needs 8 bytes, got {len(data)}")
    (value,) = struct.unpack("<Q", data)
    if value >= p:
        raise FieldError(f"non-canonical field element {value} >= {p}")
    return value


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based (Philox) generator so runs reproduce from the seed alone."""
    return np.random.Generator(np.random.Philox(seed))
