import json
import subprocess
import sys

import jsonschema
import pytest

from linlab.cli import class_harness, load_data, main, parse_bounds
from linlab.lts import HarnessBounds

SCHEMA = load_data("schema.json")


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, kind, *argv):
    code, out, _ = run(capsys, *argv, "--format", "json")
    data = json.loads(out)
    jsonschema.Draft202012Validator({"$ref": f"#/$defs/{kind}", "$defs": SCHEMA["$defs"]}).validate(data)
    return code, data


def test_table_json_and_text_agree(capsys):
    code, data = run_json(capsys, "table", "table", "--golden")
    assert code == 0 and data["matches"]
    code, text, _ = run(capsys, "table")
    assert code == 0
    for program, row in data["matrix"].items():
        assert any(line.startswith(program) and line.split()[1:] == list(row) for line in text.splitlines())


def test_table_column_variant(capsys):
    code, data = run_json(capsys, "table", "table", "--impl", "kload:1", "--golden")
    assert code == 0 and data["columns"][1] == "kload:1"
    assert main(["table", "--impl", "wsr"]) == 3


@pytest.mark.parametrize("name", ["ex41", "ex42", "ex62"])
def test_classify_fixture(capsys, name):
    code, data = run_json(capsys, "classify", "classify", "--fixture", name, "--golden")
    assert code == 0 and data["matches"]
    code, text, _ = run(capsys, "classify", "--fixture", name)
    for cls, verdict in data["verdicts"].items():
        assert f"{cls}: {verdict}" in text


def test_classify_implementation(capsys):
    code, data = run_json(capsys, "classify", "classify", "--impl", "wsr", "--ops", "1", "--class", "WriteStrong")
    assert code == 0 and data["verdicts"] == {"WriteStrong": "Yes"}
    report = data["canonical_map"]
    assert report["valid"] and report["read_window"] and all(report["lazified_flags"].values())
    code, data = run_json(capsys, "classify", "classify", "--impl", "relcomp:Prefix", "--ops", "1")
    assert data["verdicts"]["Strong"] == "Yes"


def test_simulate(capsys):
    code, data = run_json(capsys, "simulate", "simulate", "--from", "dlr", "--to", "atr", "--expect", "NotSimulated")
    assert code == 0 and data["verdict"] == "NotSimulated" and data["counterexample"]
    code, text, _ = run(capsys, "simulate", "--from", "dlr", "--to", "atr", "--expect", "Simulated")
    assert code == 1 and "NotSimulated" in text and "stuck after" in text
    code, data = run_json(capsys, "simulate", "simulate", "--from", "ticket", "--to", "wsr")
    assert data["verdict"] == "Simulated"


def test_simulate_certificate(capsys):
    code, data = run_json(capsys, "simulate", "simulate", "--from", "abd:2", "--to", "dr", "--mode", "certificate")
    assert code == 0 and data["verdict"] == "CertificateValid"
    code, text, _ = run(capsys, "simulate", "--from", "abd:2", "--to", "dr", "--mode", "certificate",
                        "--mutation", "drop-lock", "--expect", "CertificateViolated")
    assert code == 0 and "violation relation" in text
    assert main(["simulate", "--from", "atr", "--to", "dr", "--mode", "certificate"]) == 3


def test_attack(capsys):
    code, data = run_json(capsys, "attack", "attack", "--program", "P1", "--impl", "dlr")
    assert data["verdict"] == "✗" and data["witness"]["finals"]["1"] == {"a": 1, "b": 1}
    code, text, _ = run(capsys, "attack", "--program", "P1", "--impl", "atr")
    assert "✓" in text and "no adversary" in text


def test_generate(capsys):
    code, data = run_json(capsys, "generate", "generate", "--target", "T1", "--impl", "dlr")
    assert data["generable"] and data["program"] == "P1"
    code, data = run_json(capsys, "generate", "generate", "--target", "T1", "--impl", "atr")
    assert not data["generable"] and data["script"] is None
    assert main(["generate", "--target", "T7", "--impl", "atr"]) == 3


def test_trace_outputs(capsys):
    code, data = run_json(capsys, "trace_script", "trace", "--script", "abd_p2")
    assert code == 0 and data["matches_target"]
    code, data = run_json(capsys, "trace_tree", "trace", "--fixture", "ex41")
    assert code == 0 and data["nodes"][0]["label"] is None
    code, text, _ = run(capsys, "trace", "--impl", "atr", "--bounds", "threads=A,ops=1,menu=A:r")
    lines = text.splitlines()
    assert lines[0] == "# tree lts=atr nodes=4"
    assert [line.split("\t")[0::2] for line in lines[1:2]] == [["0", "A:inv r #1"]]
    code, dot, _ = run(capsys, "trace", "--fixture", "ex62", "--format", "dot")
    assert dot.startswith("digraph tree {")
    assert main(["trace", "--script", "abd_p2", "--format", "dot"]) == 3


def test_exit_codes(capsys):
    assert main(["nonsense"]) == 3
    assert main(["classify"]) == 3
    assert main(["attack", "--program", "P1", "--impl", "bogus"]) == 3
    assert main(["table", "--bounds", "depth"]) == 3
    assert main(["table", "--bounds", "colour=red"]) == 3
    assert main(["trace", "--impl", "atr", "--bounds", "cap=3"]) == 2
    assert main(["attack", "--program", "P9", "--impl", "atr"]) == 3
    capsys.readouterr()


def test_parse_bounds():
    base = HarnessBounds(threads=("A", "B", "C"), menu={"A": "w1", "B": "w2", "C": "r"})
    b = parse_bounds("ops=A:1/B:2,values=0/1,depth=9,cap=50,menu=A:w1+r/B:w2/C:r", base)
    assert b.ops_of("B") == 2 and b.values == (0, 1) and b.max_depth == 9 and b.node_cap == 50
    assert b.calls_of("A") == (("write", 1), ("read", None))
    assert parse_bounds("threads=A/B", base).menu is None
    assert parse_bounds(None, base) is base


def test_class_harness():
    b = class_harness(3)
    assert b.ops_of("A") == 2 and b.ops_of("B") == 1 and b.ops_of("C") == 1
    assert class_harness(1).threads == ("A", "C")


def test_console_script_runs():
    proc = subprocess.run([sys.executable, "-m", "linlab.cli", "classify", "--fixture", "ex41", "--golden"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "golden: match" in proc.stdout
