"""Length-prefixed frame protocol between an untrusted prover service and a
streaming verifier client, plus cost metering and transcript record/replay.

Frame: ``<u32 LE payload length><u8 type><payload>``. A session is
HEADER, UPDATE*, END from the verifier, then PROOF_SECTION frames from the
prover (for 4-cycles: PROOF_SECTION, CHALLENGE, PROOF_SECTION), then RESULT.
"""

from __future__ import annotations

import enum
import json
import logging
import os
import socket
import socketserver
import struct
import threading
from dataclasses import asdict, dataclass
from typing import BinaryIO, Iterable, Optional

from .attacks import FourCycleProver, matching_attack, triangles_attack
from .field import (
    FIELD_CONTEXT_SIZE,
    FieldContext,
    FieldError,
    SchemeKind,
    decode_element,
    encode_element,
    make_rng,
)
from .fourcycles import FourCycleSession
from .matching import MatchingProof, MatchingSketch, prove_matching, verify_matching
from .outcome import MalformedProof, ProtocolViolation, Reject
from .poly import PointValuePoly
from .stream import MalformedStream, StreamHeader, StreamUpdate, UpdateModel
from .triangles import TriangleProof, TriangleSketch, prove, verify

log = logging.getLogger(__name__)

DEFAULT_PORT = 7117
MAGIC = b"ANNOSTR1"
MAX_PAYLOAD = 1 << 28

SCHEMES = {
    "triangles": SchemeKind.TRIANGLES,
    "matching": SchemeKind.MATCHING,
    "fourcycles": SchemeKind.FOURCYCLES,
}
SCHEME_NAMES = {v: k for k, v in SCHEMES.items()}


class FrameType(enum.IntEnum):
    HEADER = 1
    UPDATE = 2
    END = 3
    PROOF_SECTION = 4
    CHALLENGE = 5
    RESULT = 6
    ERROR = 7


class FrameError(ValueError):
    pass


class TransportError(RuntimeError):
    """The channel failed (as opposed to the verifier rejecting)."""


class MalformedTranscript(ValueError):
    pass


@dataclass(frozen=True)
class Frame:
    type: FrameType
    payload: bytes = b""

    def encode(self) -> bytes:
        return struct.pack("<IB", len(self.payload), int(self.type)) + self.payload


def decode_frames(data: bytes) -> list[Frame]:
    frames, pos = [], 0
    while pos < len(data):
        if len(data) - pos < 5:
            raise FrameError("truncated frame header")
        length, ftype = struct.unpack_from("<IB", data, pos)
        pos += 5
        if ftype not in FrameType._value2member_map_:
            raise FrameError(f"unknown frame type {ftype}")
        if len(data) - pos < length:
            raise FrameError("truncated frame payload")
        frames.append(Frame(FrameType(ftype), data[pos : pos + length]))
        pos += length
    return frames


def read_frame(rfile: BinaryIO) -> Optional[Frame]:
    """Next frame, or None on clean EOF at a frame boundary."""
    head = rfile.read(5)
    if not head:
        return None
    if len(head) < 5:
        raise FrameError("truncated frame header")
    length, ftype = struct.unpack("<IB", head)
    if ftype not in FrameType._value2member_map_:
        raise FrameError(f"unknown frame type {ftype}")
    if length > MAX_PAYLOAD:
        raise FrameError("frame too large")
    payload = rfile.read(length) if length else b""
    if len(payload) < length:
        raise FrameError("truncated frame payload")
    return Frame(FrameType(ftype), payload)


# ---------------------------------------------------------------- payloads


def header_payload(field: FieldContext, header: StreamHeader) -> bytes:
    model = 0 if header.model is UpdateModel.TURNSTILE else 1
    return field.to_bytes() + struct.pack("<B", model)


def parse_header(payload: bytes) -> tuple[FieldContext, StreamHeader]:
    if len(payload) != FIELD_CONTEXT_SIZE + 1:
        raise FrameError("bad HEADER payload")
    try:
        field = FieldContext.from_bytes(payload[:FIELD_CONTEXT_SIZE])
        model = UpdateModel.TURNSTILE if payload[-1] == 0 else UpdateModel.XOR
        return field, StreamHeader(field.n, model, field.B)
    except (ValueError, FieldError) as exc:
        raise FrameError(f"bad HEADER payload: {exc}") from exc


def update_payload(up: StreamUpdate) -> bytes:
    return struct.pack("<IIi", up.u, up.v, up.delta)


def parse_update(payload: bytes) -> StreamUpdate:
    if len(payload) != 12:
        raise FrameError("bad UPDATE payload")
    return StreamUpdate(*struct.unpack("<IIi", payload))


def proof_sections(proof) -> list[bytes]:
    if isinstance(proof, TriangleProof):
        return [proof.to_bytes()]
    return proof.sections()


def annotation_bits(proof) -> int:
    return proof.annotation_bits()


# ---------------------------------------------------------------- cost report


@dataclass
class CostReport:
    """hcost counts annotation content (64 bits per field element, 32 per id or
    count); the 32-bit element-count prefixes inside sections are framing."""

    hcost_bits: int = 0
    vcost_field_elements: int = 0
    err_estimate: float = 0.0
    per_update_muls: float = 0.0
    max_update_muls: int = 0
    updates: int = 0
    prover_messages: int = 0
    verifier_messages: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------- prover side


class _Writer:
    def __init__(self, wfile: BinaryIO):
        self.wfile = wfile

    def send(self, ftype: FrameType, payload: bytes = b"") -> None:
        self.wfile.write(Frame(ftype, payload).encode())
        self.wfile.flush()


def run_prover(rfile: BinaryIO, wfile: BinaryIO, scheme: Optional[str] = None, attack=None) -> None:
    """Serve one session on a byte channel. Never sees the verifier's secrets."""
    out = _Writer(wfile)
    try:
        first = read_frame(rfile)
        if first is None:
            return
        if first.type is not FrameType.HEADER:
            raise ProtocolViolation("session must start with HEADER")
        field, header = parse_header(first.payload)
        name = SCHEME_NAMES[field.scheme_kind]
        if scheme is not None and name != scheme:
            raise ProtocolViolation(f"this service proves {scheme}, not {name}")
        updates = []
        while True:
            fr = read_frame(rfile)
            if fr is None:
                raise ProtocolViolation("stream closed before END")
            if fr.type is FrameType.END:
                break
            if fr.type is not FrameType.UPDATE:
                raise ProtocolViolation(f"unexpected {fr.type.name} during stream")
            up = parse_update(fr.payload)
            up.check(header)
            updates.append(up)

        if name == "fourcycles":
            prover = FourCycleProver(field, header, updates, attack)
            out.send(FrameType.PROOF_SECTION, prover.round1().to_bytes())
            fr = read_frame(rfile)
            if fr is None or fr.type is not FrameType.CHALLENGE:
                raise ProtocolViolation("expected CHALLENGE after s1")
            r1 = decode_element(fr.payload, field.p)
            out.send(FrameType.PROOF_SECTION, prover.round2(r1).to_bytes())
        else:
            if name == "triangles":
                proof = triangles_attack(attack, field, header, updates) if attack else prove(
                    field, header, updates
                )
            else:
                proof = (
                    matching_attack(attack, field, header, updates)
                    if attack
                    else prove_matching(field, header, updates)
                )
                if proof is None:
                    proof = prove_matching(field, header, updates)
            for sec in proof_sections(proof):
                out.send(FrameType.PROOF_SECTION, sec)
        fr = read_frame(rfile)
        if fr is not None and fr.type is not FrameType.RESULT:
            raise ProtocolViolation(f"unexpected {fr.type.name} after proof")
        if fr is not None:
            log.info("session result: %s", fr.payload.decode("utf-8", "replace"))
    except (FrameError, ProtocolViolation, MalformedStream, ValueError) as exc:
        log.warning("prover session error: %s", exc)
        try:
            out.send(FrameType.ERROR, str(exc).encode())
        except OSError:
            pass


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        run_prover(self.rfile, self.wfile, self.server.scheme, self.server.attack)


class ProverServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, addr, scheme=None, attack=None):
        self.scheme = scheme
        self.attack = attack
        super().__init__(addr, _Handler)


def default_endpoint() -> tuple[str, int]:
    return ("127.0.0.1", int(os.environ.get("ANNOSTREAM_PORT", DEFAULT_PORT)))


def serve(scheme=None, endpoint=None, attack=None, ready=None) -> None:
    """Run the prover service until interrupted."""
    with ProverServer(endpoint or default_endpoint(), scheme, attack) as srv:
        if ready is not None:
            ready(srv)
        srv.serve_forever()


def start_background_server(scheme=None, attack=None, host="127.0.0.1", port=0) -> ProverServer:
    srv = ProverServer((host, port), scheme, attack)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    return srv


# ---------------------------------------------------------------- verifier side


class _Channel:
    """Frame channel that optionally logs every frame for a transcript."""

    def __init__(self, rfile, wfile):
        self.rfile, self.wfile = rfile, wfile
        self.log = bytearray()

    def send(self, ftype, payload=b""):
        data = Frame(ftype, payload).encode()
        self.log += data
        try:
            self.wfile.write(data)
            self.wfile.flush()
        except OSError as exc:
            raise TransportError(f"send failed: {exc}") from exc

    def recv(self) -> Frame:
        try:
            fr = read_frame(self.rfile)
        except OSError as exc:
            raise TransportError(f"receive failed: {exc}") from exc
        except FrameError as exc:
            raise TransportError(f"bad frame from prover: {exc}") from exc
        if fr is None:
            raise TransportError("prover closed the connection")
        self.log += fr.encode()
        if fr.type is FrameType.ERROR:
            raise TransportError("prover error: " + fr.payload.decode("utf-8", "replace"))
        return fr


def _new_verifier(field: FieldContext, n: int, rng, challenge=None):
    kind = field.scheme_kind
    if kind == SchemeKind.TRIANGLES:
        return TriangleSketch(field, n, field.sample(rng))
    if kind == SchemeKind.MATCHING:
        return MatchingSketch(field, n, field.sample(rng))
    r1 = field.sample(rng)
    r2 = field.sample(rng)
    return FourCycleSession(field, n, r1 if challenge is None else challenge, r2)


def _finish(field, verifier, sections):
    """Decode a non-interactive proof and run its verifier; returns (outcome, proof)."""
    try:
        if field.scheme_kind == SchemeKind.TRIANGLES:
            if len(sections) != 1:
                raise MalformedProof("triangles proof is a single section")
            proof = TriangleProof.from_bytes(field, sections[0])
            return verify(verifier, proof), proof
        proof = MatchingProof.from_sections(field, sections)
        return verify_matching(verifier, proof), proof
    except MalformedProof:
        raise
    except ValueError as exc:
        raise MalformedProof(str(exc)) from exc


def verify_session(
    field: FieldContext,
    header: StreamHeader,
    updates: Iterable[StreamUpdate],
    seed: int,
    endpoint=None,
    channel=None,
    record: Optional[str] = None,
):
    """Stream to the prover while feeding the local sketch; then check the annotation.

    Returns ``(outcome, CostReport)``. Proof-format problems come back as a
    Reject carrying the reason; channel failures raise :class:`TransportError`.
    """
    rng = make_rng(seed)
    n = header.n
    sock = None
    if channel is None:
        try:
            sock = socket.create_connection(endpoint or default_endpoint(), timeout=60)
        except OSError as exc:
            raise TransportError(f"cannot reach prover: {exc}") from exc
        rfile, wfile = sock.makefile("rb"), sock.makefile("wb")
    else:
        rfile, wfile = channel
    chan = _Channel(rfile, wfile)
    verifier = _new_verifier(field, n, rng)
    report = CostReport()
    try:
        chan.send(FrameType.HEADER, header_payload(field, header))
        for up in updates:
            up.check(header)
            chan.send(FrameType.UPDATE, update_payload(up))
            verifier.update(up)
        chan.send(FrameType.END)
        if field.scheme_kind == SchemeKind.FOURCYCLES:
            outcome, hbits = _interactive_finish(field, verifier, chan)
            report.prover_messages, report.verifier_messages = 2, 1
            sk = verifier.sketch
            report.vcost_field_elements = sk.state_size()
            report.err_estimate = 4 * n / field.p
        else:
            nsec = 1 if field.scheme_kind == SchemeKind.TRIANGLES else 8
            sections = [chan.recv() for _ in range(nsec)]
            if any(fr.type is not FrameType.PROOF_SECTION for fr in sections):
                raise TransportError("expected PROOF_SECTION frames")
            report.prover_messages = nsec
            sk = verifier
            report.vcost_field_elements = sk.state_size()
            try:
                outcome, proof = _finish(field, verifier, [f.payload for f in sections])
                hbits = proof.annotation_bits()
            except MalformedProof as exc:
                outcome, proof = Reject(f"malformed proof: {exc}"), None
                hbits = sum(8 * len(f.payload) for f in sections)
            if field.scheme_kind == SchemeKind.MATCHING:
                # D~(u, r) values plus the explicitly stored M, U*, L, trees
                report.vcost_field_elements += n
                if proof is not None:
                    report.vcost_field_elements += proof.stored_words()
                report.err_estimate = 3 * 2 * n / field.p
            else:
                report.err_estimate = 2 * n / field.p
        report.hcost_bits = hbits
        report.updates = sk.updates_seen
        report.per_update_muls = sk.mul_counter / max(1, sk.updates_seen)
        report.max_update_muls = getattr(sk, "max_muls_per_update", 0)
        chan.send(FrameType.RESULT, json.dumps(_outcome_json(outcome)).encode())
    finally:
        if record:
            write_transcript(record, bytes(chan.log))
        if sock is not None:
            try:
                rfile.close()
                wfile.close()
            except OSError:
                pass
            sock.close()
    return outcome, report


def _interactive_finish(field, session: FourCycleSession, chan: _Channel):
    fr = chan.recv()
    if fr.type is not FrameType.PROOF_SECTION:
        raise TransportError("expected s1")
    session.end_stream()
    try:
        s1 = PointValuePoly.from_bytes(field, fr.payload)
    except ValueError as exc:
        return Reject(f"malformed s1: {exc}"), 8 * len(fr.payload)
    r1 = session.receive_s1(s1)
    chan.send(FrameType.CHALLENGE, encode_element(r1))
    fr = chan.recv()
    if fr.type is not FrameType.PROOF_SECTION:
        raise TransportError("expected s2")
    try:
        s2 = PointValuePoly.from_bytes(field, fr.payload)
        outcome = session.receive_s2(s2)
    except (ValueError, MalformedProof) as exc:
        return Reject(f"malformed s2: {exc}"), 8 * len(fr.payload)
    return outcome, 64 * (len(s1.values) + len(s2.values))


def _outcome_json(outcome) -> dict:
    if outcome.accepted:
        return {"accepted": True, "value": outcome.value}
    return {"accepted": False, "reason": outcome.reason}


# ---------------------------------------------------------------- transcripts


def write_transcript(path, frames: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC + frames)


def read_transcript(path) -> list[Frame]:
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_transcript(data)


def parse_transcript(data: bytes) -> list[Frame]:
    if not data.startswith(MAGIC):
        raise MalformedTranscript("missing ANNOSTR1 magic")
    try:
        return decode_frames(data[len(MAGIC) :])
    except FrameError as exc:
        raise MalformedTranscript(str(exc)) from exc


def replay_transcript(frames: list[Frame], seed: int):
    """Re-verify a recorded session with fresh verifier randomness.

    Non-interactive schemes get a brand-new secret point. 4-cycle replays must
    reuse the recorded challenge as r1 (only r2 is fresh), which is a weaker
    guarantee: the prover already knew r1 when it produced s2.
    """
    try:
        if not frames or frames[0].type is not FrameType.HEADER:
            raise MalformedTranscript("transcript does not start with HEADER")
        field, header = parse_header(frames[0].payload)
        i = 1
        updates = []
        while i < len(frames) and frames[i].type is FrameType.UPDATE:
            updates.append(parse_update(frames[i].payload))
            i += 1
        if i >= len(frames) or frames[i].type is not FrameType.END:
            raise MalformedTranscript("transcript has no END frame")
        rest = frames[i + 1 :]
    except MalformedTranscript:
        raise
    except FrameError as exc:
        raise MalformedTranscript(str(exc)) from exc
    except (FieldError, ValueError) as exc:
        return Reject(f"malformed: {exc}")
    proof_frames = [f for f in rest if f.type is FrameType.PROOF_SECTION]
    rng = make_rng(seed)
    n = header.n
    try:
        if field.scheme_kind == SchemeKind.FOURCYCLES:
            chal = [f for f in rest if f.type is FrameType.CHALLENGE]
            if len(proof_frames) != 2 or len(chal) != 1:
                raise MalformedTranscript("4-cycle transcript needs s1, challenge, s2")
            r1 = decode_element(chal[0].payload, field.p)
            sess = _new_verifier(field, n, rng, challenge=r1)
            for up in updates:
                sess.update(up)
            sess.end_stream()
            sess.receive_s1(PointValuePoly.from_bytes(field, proof_frames[0].payload))
            return sess.receive_s2(PointValuePoly.from_bytes(field, proof_frames[1].payload))
        verifier = _new_verifier(field, n, rng)
        for up in updates:
            up.check(header)
            verifier.update(up)
        outcome, _ = _finish(field, verifier, [f.payload for f in proof_frames])
        return outcome
    except MalformedTranscript:
        raise
    except (ValueError, ProtocolViolation) as exc:
        return Reject(f"malformed: {exc}")


def local_channel(scheme=None, attack=None):
    """Socket pair with a prover thread on the far end (stdio-style pipe mode)."""
    a, b = socket.socketpair()
    rf, wf = b.makefile("rb"), b.makefile("wb")

    def target():
        try:
            run_prover(rf, wf, scheme, attack)
        finally:
            rf.close()
            wf.close()
            b.close()

    th = threading.Thread(target=target, daemon=True)
    th.start()
    return (a.makefile("rb"), a.makefile("wb")), a, th
