"""Annotated graph-stream schemes with a streaming verifier and untrusted prover."""

from .field import FieldContext, FieldElement, SchemeKind, find_prime, make_rng
from .outcome import Accept, MalformedProof, ProtocolViolation, Reject
from .stream import GenSpec, StreamHeader, StreamUpdate, UpdateModel, accumulate, generate

__all__ = [
    "Accept",
    "FieldContext",
    "FieldElement",
    "GenSpec",
    "MalformedProof",
    "ProtocolViolation",
    "Reject",
    "SchemeKind",
    "StreamHeader",
    "StreamUpdate",
    "UpdateModel",
    "accumulate",
    "find_prime",
    "generate",
    "make_rng",
]
