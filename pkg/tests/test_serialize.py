import json

import pytest

from linlab.classes import fixture
from linlab.errors import InvalidParam
from linlab.lts import HarnessBounds, enumerate_executions, replay
from linlab.registers import make_register
from linlab.serialize import execution_json, execution_lines, execution_text, tree_dot, tree_json, tree_lines, tree_text

B = HarnessBounds(threads=("A", "B"), ops=1, menu={"A": "w1", "B": "r"}, max_depth=6)


def test_tree_text_layout():
    tree = enumerate_executions(make_register("atr", B), B)
    lines = tree_lines(tree)
    assert lines[0] == f"# tree lts=atr nodes={len(tree)}"
    assert len(lines) == len(tree)
    rows = [line.split("\t") for line in lines[1:]]
    assert all(len(r) == 4 for r in rows)
    assert {r[2] for r in rows if "." not in r[0]} == {"A:inv w 1 #1", "B:inv r #2"}
    assert tree_text(tree) == "\n".join(lines) + "\n"


def test_tree_json_round_trips_through_json():
    tree = fixture("ex41")
    data = json.loads(json.dumps(tree_json(tree)))
    assert len(data["nodes"]) == len(tree)
    assert [n["path"] for n in data["nodes"]][:2] == [[], [0]]


def test_tree_dot_limit():
    tree = enumerate_executions(make_register("atr", B), B)
    assert tree_dot(tree).count("->") == len(tree) - 1
    with pytest.raises(InvalidParam):
        tree_dot(tree, limit=3)


def test_execution_renderings():
    lts = make_register("atr", B)
    tree = enumerate_executions(lts, B)
    e = tree.execution(max(tree.nodes(), key=lambda n: tree.depth[n]))
    assert len(execution_lines(e)) == len(e)
    assert execution_text(e).count("\n") == len(e)
    assert [t["label"] for t in execution_json(e)["transitions"]] == [str(lab) for lab in e.labels]
    assert execution_text(replay(lts, [])) == ""
