"""Verifier verdicts and the error types shared by every scheme."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any


class MalformedProof(ValueError):
    """The annotation is structurally unusable (wrong length, bad frame, ...)."""


class ProtocolViolation(RuntimeError):
    """Messages arrived out of the order the protocol prescribes."""


@dataclass(frozen=True)
class Accept:
    value: Any

    accepted = True


@dataclass(frozen=True)
class Reject:
    reason: str = ""

    accepted = False
