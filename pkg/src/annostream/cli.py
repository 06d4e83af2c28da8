"""Command-line entry points.

Exit codes: 0 success or Accept, 2 Reject, 3 malformed input, 1 transport
failure, 64 usage error. Every JSON report carries ``report_v`` plus the seed,
prime and graph parameters needed to reproduce the run.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from typing import Optional

from .attacks import FOURCYCLE_ATTACKS, MATCHING_ATTACKS, TRIANGLE_ATTACKS, run_soundness
from .field import FieldContext, FieldError, make_rng
from .matching import prove_matching
from .outcome import MalformedProof
from .reduction import (
    BIPARTITENESS,
    DISCONNECTIVITY,
    MerlinList,
    bob_decide,
    build_alice_stream,
    claim_holds,
    honest_merlin,
    random_instance,
)
from .stream import (
    GenSpec,
    MalformedStream,
    OracleScale,
    UpdateModel,
    accumulate,
    dumps_stream,
    generate,
    loads_stream,
    oracle_fourcycles_incremental,
    oracle_max_matching,
    oracle_triangles,
)
from .transport import (
    MAGIC,
    SCHEMES,
    Frame,
    FrameError,
    FrameType,
    MalformedTranscript,
    TransportError,
    default_endpoint,
    header_payload,
    local_channel,
    proof_sections,
    read_transcript,
    replay_transcript,
    run_prover,
    serve,
    start_background_server,
    update_payload,
    verify_session,
)
from .triangles import prove

REPORT_V = 1
EXIT_OK, EXIT_FAIL, EXIT_REJECT, EXIT_MALFORMED, EXIT_USAGE = 0, 1, 2, 3, 64

ATTACKS = {
    "triangles": TRIANGLE_ATTACKS,
    "matching": MATCHING_ATTACKS,
    "fourcycles": FOURCYCLE_ATTACKS,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    scheme: Optional[str] = None
    n: int = 20
    m: int = 100
    B: int = 1
    seed: int = 0
    deletions: float = 0.1
    model: str = "turnstile"
    input: Optional[str] = None
    output: Optional[str] = None
    endpoint: Optional[tuple[str, int]] = None

    def __post_init__(self):
        if self.scheme is not None and self.scheme not in SCHEMES:
            raise UsageError(f"unknown scheme {self.scheme!r}")
        if self.scheme is not None and self.model != "turnstile":
            raise UsageError(f"{self.scheme} needs the strict turnstile model")

    def gen_spec(self) -> GenSpec:
        dels = self.deletions if self.model == "turnstile" else 0.0
        return GenSpec(self.n, self.m, self.B, UpdateModel(self.model), dels, self.seed)


def _endpoint(text: Optional[str]):
    if text is None:
        return None
    host, _, port = text.rpartition(":")
    try:
        return (host or "127.0.0.1", int(port))
    except ValueError as exc:
        raise UsageError(f"endpoint must be host:port, got {text!r}") from exc


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _base_report(cfg: RunConfig, field: Optional[FieldContext], n: int, B: int) -> dict:
    return {
        "report_v": REPORT_V,
        "command": cfg.command,
        "scheme": cfg.scheme,
        "seed": cfg.seed,
        "p": field.p if field is not None else None,
        "n": n,
        "B": B,
    }


def _read_stream(cfg: RunConfig):
    if cfg.input and cfg.input != "-":
        with open(cfg.input) as fh:
            return loads_stream(fh.read())
    return loads_stream(sys.stdin.read())


def _load_or_generate(cfg: RunConfig, args):
    if getattr(args, "input", None):
        return _read_stream(cfg)
    return generate(cfg.gen_spec())


def _outcome_fields(outcome) -> dict:
    if outcome.accepted:
        return {"accepted": True, "value": outcome.value}
    return {"accepted": False, "value": None, "reason": outcome.reason}


# ---------------------------------------------------------------- commands


def cmd_gen(cfg, args):
    header, ups = generate(cfg.gen_spec())
    sys.stdout.write(dumps_stream(header, ups))
    return EXIT_OK


def oracle_value(scheme: str, header, ups) -> int:
    if scheme == "triangles":
        return oracle_triangles(accumulate(header, ups))
    if scheme == "matching":
        return oracle_max_matching(accumulate(header, ups))[0]
    return oracle_fourcycles_incremental(header, ups)


def cmd_oracle(cfg, args):
    header, ups = _read_stream(cfg)
    rep = _base_report(cfg, None, header.n, header.B)
    rep["value"] = oracle_value(cfg.scheme, header, ups)
    _emit(rep)
    return EXIT_OK


def cmd_prove(cfg, args):
    if cfg.scheme == "fourcycles":
        raise UsageError("4-cycle proofs are interactive; use `run`")
    header, ups = _read_stream(cfg)
    field = FieldContext.for_scheme(SCHEMES[cfg.scheme], header.n, header.B)
    proof = prove(field, header, ups) if cfg.scheme == "triangles" else prove_matching(field, header, ups)
    frames = [Frame(FrameType.HEADER, header_payload(field, header))]
    frames += [Frame(FrameType.UPDATE, update_payload(up)) for up in ups]
    frames.append(Frame(FrameType.END))
    frames += [Frame(FrameType.PROOF_SECTION, sec) for sec in proof_sections(proof)]
    data = MAGIC + b"".join(f.encode() for f in frames)
    if not cfg.output:
        raise UsageError("prove needs --out")
    with open(cfg.output, "wb") as fh:
        fh.write(data)
    rep = _base_report(cfg, field, header.n, header.B)
    rep.update(transcript=cfg.output, hcost_bits=proof.annotation_bits())
    _emit(rep)
    return EXIT_OK


def cmd_verify(cfg, args):
    frames = read_transcript(args.transcript)
    outcome = replay_transcript(frames, cfg.seed)
    field = FieldContext.from_bytes(frames[0].payload[:-1])
    cfg.scheme = [k for k, v in SCHEMES.items() if v == field.scheme_kind][0]
    rep = _base_report(cfg, field, field.n, field.B)
    rep.update(_outcome_fields(outcome))
    _emit(rep)
    return EXIT_OK if outcome.accepted else EXIT_REJECT


def cmd_serve(cfg, args):
    if args.stdio:
        run_prover(sys.stdin.buffer, sys.stdout.buffer, cfg.scheme, args.attack)
        return EXIT_OK
    endpoint = cfg.endpoint or default_endpoint()
    logging.basicConfig(level=logging.INFO)
    logging.info("prover listening on %s:%d", *endpoint)
    try:
        serve(cfg.scheme, endpoint, args.attack)
    except KeyboardInterrupt:
        pass
    return EXIT_OK


def cmd_run(cfg, args):
    header, ups = _load_or_generate(cfg, args)
    field = FieldContext.for_scheme(SCHEMES[cfg.scheme], header.n, header.B)
    srv = None
    if cfg.endpoint is None:
        srv = start_background_server(cfg.scheme, args.attack)
        endpoint = srv.server_address
    else:
        endpoint = cfg.endpoint
    try:
        outcome, cost = verify_session(field, header, ups, cfg.seed, endpoint=endpoint, record=args.record)
    finally:
        if srv is not None:
            srv.shutdown()
            srv.server_close()
    rep = _base_report(cfg, field, header.n, header.B)
    rep.update(_outcome_fields(outcome))
    rep["m"] = len(ups)
    rep["cost"] = cost.as_dict()
    if args.record:
        rep["transcript"] = args.record
    _emit(rep)
    return EXIT_OK if outcome.accepted else EXIT_REJECT


def cmd_attack(cfg, args):
    if args.corrupt not in ATTACKS[cfg.scheme]:
        raise UsageError(f"{cfg.scheme} attacks: {', '.join(ATTACKS[cfg.scheme])}")
    res = run_soundness(cfg.scheme, args.corrupt, args.trials, cfg.n, seed=cfg.seed, B=cfg.B)
    rep = _base_report(cfg, None, cfg.n, cfg.B)
    rep["p"] = res.p
    rep.update(res.as_dict())
    _emit(rep)
    return EXIT_OK


def cmd_reduce(cfg, args):
    rng = make_rng(cfg.seed)
    inst = random_instance(cfg.n, rng, args.variant)
    header, ups = build_alice_stream(inst)
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(dumps_stream(header, ups))
    honest = honest_merlin(inst)
    # left-side nodes cannot neighbour u* in the bipartite graph; Bob rejects those lists outright
    right = range(inst.n // 2 + 1, inst.n + 1)
    slots = [j for j, w in enumerate(inst.others()) if args.variant == DISCONNECTIVITY or w in right]
    toggles = 0
    for j in slots:
        bits = list(honest.neighbor_bits)
        bits[j] ^= 1
        toggles += claim_holds(inst, MerlinList(inst.u_star, tuple(bits)))
    bob = bob_decide(inst, honest)
    rep = _base_report(cfg, None, cfg.n, 1)
    rep.update(
        variant=args.variant,
        i_star=inst.i_star,
        target_edge=list(inst.target),
        x_i_star=inst.x[inst.i_star - 1],
        bob_output=bob if isinstance(bob, int) else None,
        recovered=bob == inst.x[inst.i_star - 1],
        honest_claim_holds=claim_holds(inst, honest),
        single_bit_claims_hold=f"{toggles}/{len(slots)}",
        index_bits=len(inst.x),
        merlin_help_bits=honest.help_bits(),
        stream_updates=len(ups),
        stream_nodes=header.n,
    )
    if cfg.output:
        rep["stream_file"] = cfg.output
    _emit(rep)
    return EXIT_OK if rep["recovered"] else EXIT_FAIL


def cmd_report(cfg, args):
    if args.transcript:
        frames = read_transcript(args.transcript)
        field = FieldContext.from_bytes(frames[0].payload[:-1])
        accepts = sum(replay_transcript(frames, cfg.seed + t).accepted for t in range(args.trials))
        rep = _base_report(cfg, field, field.n, field.B)
        rep.update(transcript=args.transcript, replays=args.trials, accepts=accepts)
        _emit(rep)
        return EXIT_OK
    if cfg.scheme is None:
        raise UsageError("report needs --transcript or --scheme")
    rows = []
    for n in args.sizes:
        spec = GenSpec(n, max(n, min(cfg.m, n * (n - 1) // 2)), cfg.B, deletion_fraction=cfg.deletions, seed=cfg.seed)
        header, ups = generate(spec)
        field = FieldContext.for_scheme(SCHEMES[cfg.scheme], n, cfg.B)
        channel, sock, th = local_channel(cfg.scheme)
        try:
            outcome, cost = verify_session(field, header, ups, cfg.seed, channel=channel)
        finally:
            sock.close()
        rows.append({"n": n, "p": field.p, "accepted": outcome.accepted, **cost.as_dict()})
    rep = _base_report(cfg, None, None, cfg.B)
    rep["rows"] = rows
    _emit(rep)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "oracle": cmd_oracle,
    "prove": cmd_prove,
    "verify": cmd_verify,
    "serve": cmd_serve,
    "run": cmd_run,
    "attack": cmd_attack,
    "reduce": cmd_reduce,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="annostream", description="Annotated graph-stream schemes.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, scheme=False, scheme_required=False, gen=False):
        p.add_argument("--seed", type=int, default=0)
        if scheme:
            p.add_argument("--scheme", choices=sorted(SCHEMES), required=scheme_required)
        if gen:
            p.add_argument("--n", type=int, default=20)
            p.add_argument("--m", type=int, default=100)
            p.add_argument("--B", type=int, default=1)
            p.add_argument("--deletions", type=float, default=0.1)
        return p

    g = common(sub.add_parser("gen", help="write a seeded random stream"), gen=True)
    g.add_argument("--model", choices=[m.value for m in UpdateModel], default="turnstile")

    o = common(sub.add_parser("oracle", help="brute-force answer for a stream"), scheme=True, scheme_required=True)
    o.add_argument("--input", help="stream file, default stdin")

    p = common(sub.add_parser("prove", help="write a proof transcript"), scheme=True, scheme_required=True)
    p.add_argument("--input")
    p.add_argument("--out", dest="output")

    v = common(sub.add_parser("verify", help="re-verify a transcript with a fresh secret"))
    v.add_argument("transcript")

    s = common(sub.add_parser("serve", help="run the prover service"), scheme=True)
    s.add_argument("--endpoint")
    s.add_argument("--attack")
    s.add_argument("--stdio", action="store_true", help="one session over stdin/stdout")

    r = common(sub.add_parser("run", help="verify against a prover"), scheme=True, scheme_required=True, gen=True)
    r.add_argument("--input")
    r.add_argument("--endpoint", help="external prover; default spawns one locally")
    r.add_argument("--attack")
    r.add_argument("--record", help="write the session transcript here")

    a = common(sub.add_parser("attack", help="Monte-Carlo soundness run"), scheme=True, scheme_required=True, gen=True)
    a.add_argument("--corrupt", required=True)
    a.add_argument("--trials", type=int, default=1000)

    d = common(sub.add_parser("reduce", help="INDEX reduction demo"))
    d.add_argument("--n", type=int, default=8)
    d.add_argument("--variant", choices=[DISCONNECTIVITY, BIPARTITENESS], default=DISCONNECTIVITY)
    d.add_argument("--out", dest="output", help="write the XOR stream file here")

    rp = common(sub.add_parser("report", help="replay or cost-shape report"), scheme=True)
    rp.add_argument("--transcript")
    rp.add_argument("--trials", type=int, default=50)
    rp.add_argument("--sizes", type=lambda t: [int(x) for x in t.split(",")], default=[10, 100])
    rp.add_argument("--m", type=int, default=200)
    rp.add_argument("--B", type=int, default=1)
    rp.add_argument("--deletions", type=float, default=0.1)
    return parser


def _config(args) -> RunConfig:
    keys = ("scheme", "n", "m", "B", "seed", "deletions", "model", "input", "output")
    kw = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    return RunConfig(args.command, endpoint=_endpoint(getattr(args, "endpoint", None)), **kw)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("missing command")
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OracleScale as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MalformedStream, MalformedTranscript, MalformedProof, FrameError, FieldError) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except (TransportError, OSError) as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ValueError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
