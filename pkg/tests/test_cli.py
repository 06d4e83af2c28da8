import io
import json
import subprocess
import sys

import pytest

from annostream.cli import main
from annostream.field import FieldContext, SchemeKind
from annostream.stream import GenSpec, accumulate, generate, loads_stream, oracle_triangles
from annostream.transport import Frame, FrameType, decode_frames, header_payload, update_payload


def run_cli(capsys, argv, stdin=None, monkeypatch=None):
    if stdin is not None:
        monkeypatch.setattr(sys, "stdin", io.StringIO(stdin))
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_gen_is_deterministic(capsys):
    _, a, _ = run_cli(capsys, ["gen", "--n", "20", "--m", "100", "--seed", "1"])
    _, b, _ = run_cli(capsys, ["gen", "--n", "20", "--m", "100", "--seed", "1"])
    assert a == b and a.startswith("n=20 model=turnstile B=1")


def test_gen_pipe_oracle(capsys, monkeypatch):
    _, text, _ = run_cli(capsys, ["gen", "--n", "20", "--m", "100", "--seed", "1"])
    code, out, _ = run_cli(capsys, ["oracle", "--scheme", "triangles"], stdin=text, monkeypatch=monkeypatch)
    h, ups = loads_stream(text)
    rep = json.loads(out)
    assert code == 0 and rep["value"] == oracle_triangles(accumulate(h, ups))
    assert rep["report_v"] == 1


@pytest.mark.parametrize("scheme", ["triangles", "matching", "fourcycles"])
def test_run_accepts_with_oracle_value(capsys, monkeypatch, scheme):
    argv = ["--n", "12", "--m", "24", "--seed", "1"]
    code, out, _ = run_cli(capsys, ["run", "--scheme", scheme] + argv)
    rep = json.loads(out)
    _, text, _ = run_cli(capsys, ["gen"] + argv)
    _, oracle_out, _ = run_cli(capsys, ["oracle", "--scheme", scheme], stdin=text, monkeypatch=monkeypatch)
    assert code == 0 and rep["accepted"]
    assert rep["value"] == json.loads(oracle_out)["value"]
    for key in ("seed", "p", "n", "B", "cost"):
        assert key in rep


def test_run_n20_m100_reports_hcost(capsys):
    code, out, _ = run_cli(capsys, ["run", "--scheme", "triangles", "--n", "20", "--m", "100", "--seed", "1"])
    rep = json.loads(out)
    h, ups = generate(GenSpec(20, 100, 1, deletion_fraction=0.1, seed=1))
    assert code == 0 and rep["value"] == oracle_triangles(accumulate(h, ups))
    assert rep["cost"]["hcost_bits"] == 41 * 64


def test_run_with_attack_exits_reject(capsys):
    code, out, _ = run_cli(capsys, ["run", "--scheme", "triangles", "--attack", "one-point"])
    assert code == 2 and not json.loads(out)["accepted"]


def test_attack_report(capsys):
    code, out, _ = run_cli(capsys, ["attack", "--scheme", "triangles", "--trials", "500", "--corrupt", "one-point"])
    rep = json.loads(out)
    assert code == 0
    assert rep["rejection_rate"] >= 0.99
    assert rep["theoretical_rejection_bound"] == pytest.approx(1 - 2 * 20 / rep["p"])


def test_prove_then_verify(capsys, monkeypatch, tmp_path):
    _, text, _ = run_cli(capsys, ["gen", "--n", "8", "--m", "12", "--seed", "2"])
    path = tmp_path / "p.bin"
    code, _, _ = run_cli(capsys, ["prove", "--scheme", "matching", "--out", str(path)], stdin=text, monkeypatch=monkeypatch)
    assert code == 0
    code, out, _ = run_cli(capsys, ["verify", str(path), "--seed", "9"])
    assert code == 0 and json.loads(out)["accepted"]
    data = bytearray(path.read_bytes())
    data[-3] ^= 0xFF
    path.write_bytes(bytes(data))
    code, out, _ = run_cli(capsys, ["verify", str(path), "--seed", "9"])
    assert code == 2


def test_report_replays_and_cost_rows(capsys, tmp_path):
    path = tmp_path / "r.bin"
    run_cli(capsys, ["run", "--scheme", "triangles", "--n", "10", "--m", "30", "--record", str(path)])
    code, out, _ = run_cli(capsys, ["report", "--transcript", str(path), "--trials", "10"])
    assert code == 0 and json.loads(out)["accepts"] == 10
    code, out, _ = run_cli(capsys, ["report", "--scheme", "triangles", "--sizes", "10,30"])
    rows = json.loads(out)["rows"]
    assert [r["hcost_bits"] for r in rows] == [21 * 64, 61 * 64]


def test_reduce_writes_stream_and_report(capsys, tmp_path):
    path = tmp_path / "x.txt"
    code, out, _ = run_cli(capsys, ["reduce", "--n", "8", "--seed", "3", "--out", str(path)])
    rep = json.loads(out)
    assert code == 0 and rep["recovered"] and rep["honest_claim_holds"]
    assert rep["merlin_help_bits"] == 8 and rep["single_bit_claims_hold"] == "8/8"
    h, _ = loads_stream(path.read_text())
    assert h.n == 9 and h.model.value == "xor"


@pytest.mark.parametrize(
    "argv",
    [[], ["bogus"], ["run", "--scheme", "nope"], ["attack", "--scheme", "triangles", "--corrupt", "nope"], ["prove", "--scheme", "fourcycles"]],
)
def test_usage_errors_exit_64(capsys, argv):
    assert main(argv) == 64


def test_malformed_input_exits_3(capsys, monkeypatch, tmp_path):
    code, _, err = run_cli(capsys, ["oracle", "--scheme", "triangles"], stdin="n=3\n1 1 1\n", monkeypatch=monkeypatch)
    assert code == 3 and "malformed" in err
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"ANNOSTR1\x05\x00")
    assert main(["verify", str(bad)]) == 3


def test_module_entry_and_stdio_prover():
    h, ups = generate(GenSpec(6, 10, seed=0))
    f = FieldContext.for_scheme(SchemeKind.TRIANGLES, 6)
    frames = [Frame(FrameType.HEADER, header_payload(f, h))]
    frames += [Frame(FrameType.UPDATE, update_payload(u)) for u in ups]
    frames.append(Frame(FrameType.END))
    proc = subprocess.run(
        [sys.executable, "-m", "annostream", "serve", "--stdio"],
        input=b"".join(fr.encode() for fr in frames),
        capture_output=True,
        timeout=60,
    )
    assert proc.returncode == 0
    out = decode_frames(proc.stdout)
    assert [fr.type for fr in out] == [FrameType.PROOF_SECTION]
