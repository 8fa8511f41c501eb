import dataclasses

import pytest

from linlab import experiments as ex
from linlab.errors import InvalidParam, ScriptStuck, TargetMalformed
from linlab.lts import READ, WRITE, Inv, ProgInternal, Res, compose
from linlab.programs import make_program

CORRELATED_TARGET = {"P1": "T1", "P2": "T2"}


@pytest.mark.parametrize("program, impl, violated", [
    ("P1", "atr", False), ("P1", "dlr", True), ("P2", "tnsr", True), ("P2", "dlr", False),
    ("P3", "tnsr", False), ("P1", "kload:1", False), ("P1", "abd:2", False),
])
def test_correlation_attack(program, impl, violated):
    prog = make_program(program)
    result = ex.correlation_attack(prog, impl)
    assert result.violated is violated
    if violated:
        w = result.witness
        assert w.validate(compose(prog, ex.make_impl(impl, prog.bounds)), prog)
        assert w.finals == {1: (1, 1), 2: (2, 2)}
        assert ex.can_generate(prog, impl, CORRELATED_TARGET[program])
    else:
        assert result.anti is None


def test_witness_serializations():
    prog = make_program("P1")
    w = ex.correlation_attack(prog, "dlr").witness
    data = w.to_json()
    assert data["kind"] == "correlated" and set(data["branches"]) == {"1", "2"}
    assert data["branches"]["1"][0] == "A:coin=1"
    text = w.to_text(compose(prog, ex.make_impl("dlr", prog.bounds)))
    assert text.startswith("# correlated witness for P1 with dlr")
    assert "# final state coin=2" in text


@pytest.mark.parametrize("program, impl, name, expected", [
    ("P1", "dlr", "T1", True), ("P1", "atr", "T1", False), ("P1", "abd:3", "T1", True),
    ("P2", "tnsr", "T2", True), ("P2", "dlr", "T2", False),
    ("P3", "tnsr", "T3", False), ("P3", "dr", "T3", False),
    ("P4", "tnsr", "T4", False), ("P4", "dr", "T4", True), ("P4", "wsr", "T4", False),
])
def test_generation(program, impl, name, expected):
    w = ex.generate(program, impl, name)
    assert (w is not None) is expected
    if w is not None:
        assert w.kind == "generated"
        for c, labels in w.runs().items():
            assert ex.project(labels) == ex.target(name)[c - 1]


def test_target_checks():
    t1, t2 = ex.target("T1")
    ex.check_targets((t1, t2))
    with pytest.raises(TargetMalformed):
        ex.check_targets((t2, t1))
    with pytest.raises(TargetMalformed):
        ex.check_targets((t1,))
    other = ex.target("T2")[1]
    with pytest.raises(TargetMalformed):
        ex.check_targets((t1, other))
    broken = ex.make_trace({"A1": ("write", 1, None), "A2": ("write", 2, None), "B1": (READ, None, 2)}, 2,
                           {"A1": (), "A2": (), "B1": (), "coin": ("A1", "A2")})
    with pytest.raises(TargetMalformed):
        ex.check_targets((t1, broken))
    with pytest.raises(InvalidParam):
        ex.target("T9")


def test_project_records_real_time_predecessors():
    labels = [Inv(WRITE, 1, "A", 1), Inv(READ, None, "B", 3), Res(WRITE, None, "A", 1),
              ProgInternal("coin=2", "A"), Res(READ, 1, "B", 3)]
    trace = ex.project(labels)
    assert trace.coin == 2
    assert trace.pred_map() == {"A1": frozenset(), "B1": frozenset(), "coin": frozenset({"A1"})}
    assert trace.op_map()["B1"] == (READ, None, 1)
    assert str(trace) == "A1:w1; B1:r=1; coin=2 after A1"
    assert trace.to_json()["coin"] == {"value": 2, "after": ["A1"]}


@pytest.mark.parametrize("name", sorted(ex.SCRIPTS))
def test_scripts_are_deterministic(name):
    a, b = ex.run_script(ex.scripted(name)), ex.run_script(ex.scripted(name))
    assert a.runs == b.runs and a.traces == b.traces
    assert a.matches_target()
    assert a.to_json()["matches_target"] is True


def test_script_errors():
    script = ex.scripted("dlr_p1")
    with pytest.raises(ScriptStuck, match="not enabled"):
        ex.run_script(dataclasses.replace(script, before=("B:res r 7",)))
    with pytest.raises(ScriptStuck, match="ends before"):
        ex.run_script(dataclasses.replace(script, after={1: (), 2: ()}))
    with pytest.raises(InvalidParam):
        ex.scripted("nope")


def test_ambiguous_selector():
    class Twice:
        def enabled(self, state):
            return [(ProgInternal("coin=1", "A"), 1), (ProgInternal("coin=1", "A"), 2)]

    with pytest.raises(ScriptStuck, match="ambiguous"):
        ex._select(Twice(), 0, "A:coin=1")


def test_script_labels_match_with_or_without_ids():
    script = ex.scripted("dlr_p1")
    with_ids = dataclasses.replace(script, before=("B:inv r #3",) + script.before[1:])
    assert ex.run_script(with_ids).runs == ex.run_script(script).runs


def test_table_parallel_matches_serial():
    serial = ex.run_table(programs=("P1",), impls=("atr", "dlr"), workers=1)
    parallel = ex.run_table(programs=("P1",), impls=("atr", "dlr"), workers=2)
    assert serial.rows() == parallel.rows() == {"P1": "✓✗"}
    assert serial.to_json()["matrix"] == {"P1": "✓✗"}
    assert "adversaries: P1/dlr: dlr_p1" in serial.to_text()


def test_unknown_program():
    with pytest.raises(InvalidParam):
        make_program("P9")
    with pytest.raises(InvalidParam):
        ex.run_table(impls=("bogus",))
