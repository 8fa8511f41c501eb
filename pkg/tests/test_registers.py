import pytest

from linlab.classes import ClassId, decide_class
from linlab.errors import InvalidParam, NotAtPick
from linlab.lts import READ, HarnessBounds, Inv, ObjInternal, Res, canonical_key, enumerate_executions, reachable
from linlab.registers import KLoad, make_register, parse_kind, pick_choices

W1_R = HarnessBounds(threads=("A", "B"), ops=1, menu={"A": "w1", "B": "r"}, max_depth=24)
W1_W2_R = HarnessBounds(threads=("A", "B", "C"), ops=1, menu={"A": "w1", "B": "w2", "C": "r"}, max_depth=24)


def _states(kind, bounds=W1_W2_R):
    lts = make_register(kind, bounds)
    order, edges = reachable(lts)
    return lts, order, edges


@pytest.mark.parametrize("text, expected", [
    ("atr", ("atr", None)), ("DLR", ("dlr", None)), ("kload:3", ("kload", 3)), ("abd:3", ("abd", 3)),
])
def test_parse_kind(text, expected):
    assert parse_kind(text) == expected


@pytest.mark.parametrize("text", ["kload", "abd:x", "foo", "atr:2"])
def test_parse_kind_rejects(text):
    with pytest.raises(InvalidParam):
        parse_kind(text)


def test_kload_rejects_nonpositive_k():
    with pytest.raises(InvalidParam):
        KLoad(W1_R, 0)


def test_dlr_is_kload_two():
    lts = make_register("dlr", W1_R)
    assert isinstance(lts, KLoad) and lts.k == 2 and lts.name == "dlr"


@pytest.mark.parametrize("bounds", [W1_R, W1_W2_R, HarnessBounds(threads=("A", "B"), ops=2, max_depth=10)])
def test_kload_one_tree_equals_atr_tree(bounds):
    atr = enumerate_executions(make_register("atr", bounds), bounds)
    k1 = enumerate_executions(make_register("kload:1", bounds), bounds)
    assert len(atr) == len(k1)
    assert atr.label == k1.label and atr.parent == k1.parent
    renaming = {}
    for a, b in zip(atr.state, k1.state):
        renaming.setdefault(canonical_key(a), canonical_key(b))
        assert renaming[canonical_key(a)] == canonical_key(b)
    assert len(set(renaming.values())) == len(renaming)


def test_dr_version_invariants_on_reachable_states():
    lts, order, edges = _states("dr")
    for s in order:
        x, ver, lock, ids, pcs, vss, starts, args = s
        if lock == 0:
            assert all(0 <= st <= ver for st in starts)
        for _, post in edges[s]:
            if lock == 0 and post[2] == 0:
                assert post[1] >= ver


def test_dr_never_stalls_a_write():
    lts, order, edges = _states("dr")
    for s in order:
        for i, pc in enumerate(s[4]):
            if pc == "w_w" and s[2] == 0:
                rules = {lab.rule for lab, _ in edges[s] if isinstance(lab, ObjInternal) and lab.tid == lts.threads[i]}
                assert rules & {"write-top", "write-roll-back"}


@pytest.mark.parametrize("kind", ["wsr", "dr"])
def test_picked_value_was_loaded(kind):
    lts, order, edges = _states(kind)
    for s in order:
        for lab, _ in edges[s]:
            if isinstance(lab, ObjInternal) and lab.rule == "read-pick":
                assert lab.arg in pick_choices(lts, s, lab.tid)


def test_tnsr_skips_only_after_differing_loads():
    lts, order, edges = _states("tnsr")
    seen = False
    for s in order:
        for lab, _ in edges[s]:
            if isinstance(lab, ObjInternal) and lab.rule == "write-skip":
                i = lts.threads.index(lab.tid)
                assert s[3][i] != s[4][i]
                seen = True
    assert seen


def test_ticket_stores_in_ticket_order():
    lts, order, edges = _states("ticket")
    for s in order:
        for lab, post in edges[s]:
            if isinstance(lab, ObjInternal) and lab.rule == "write-store":
                i = lts.threads.index(lab.tid)
                assert s[5][i] == s[2] and post[2] == s[2] + 1


def test_kload_response_chooses_among_loaded_values():
    lts, order, edges = _states("kload:3")
    for s in order:
        for lab, _ in edges[s]:
            if isinstance(lab, Res) and lab.method == READ:
                assert lab.value in pick_choices(lts, s, lab.tid)


def test_pick_choices_rejects_other_states():
    wsr = make_register("wsr", W1_R)
    with pytest.raises(NotAtPick):
        pick_choices(wsr, wsr.initial, "B")
    atr = make_register("atr", W1_R)
    with pytest.raises(NotAtPick):
        pick_choices(atr, atr.initial, "B")


def test_harness_menus_are_respected():
    lts, order, edges = _states("atr")
    invs = {str(lab) for s in order for lab, _ in edges[s] if isinstance(lab, Inv)}
    assert invs == {"A:inv w 1 #1", "B:inv w 2 #2", "C:inv r #3"}


@pytest.mark.parametrize("kind, strong", [("atr", True), ("ticket", True), ("wsr", False), ("tnsr", False)])
def test_strong_linearizability_on_small_trees(kind, strong):
    bounds = W1_W2_R.replace(max_depth=16)
    tree = enumerate_executions(make_register(kind, bounds), bounds)
    assert decide_class(tree, ClassId.STRONG).holds is strong
    assert decide_class(tree, ClassId.LINEARIZABLE).holds
