import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linlab.abd import (
    INITIAL_PAIR,
    QUERY,
    UPDATE,
    h_of,
    make_abd,
    max_pair,
    pair_ts,
    quorum_value_choices,
    quorum_value_choices_bruteforce,
)
from linlab.errors import InvalidParam
from linlab.lts import WRITE, HarnessBounds, Inv, ObjInternal, Res, reachable
from linlab.simulation import weak_sim

W1_R = HarnessBounds(threads=("A", "B"), ops=1, menu={"A": "w1", "B": "r"})
W1_W2 = HarnessBounds(threads=("A", "B"), ops=1, menu={"A": "w1", "B": "w2"})

pairs = st.tuples(st.integers(0, 2), st.tuples(st.integers(0, 3), st.integers(0, 3)))


@settings(max_examples=300, deadline=None)
@given(n=st.integers(1, 7), values=st.lists(pairs, max_size=7))
def test_quorum_choices_match_bruteforce_random(n, values):
    replies = list(enumerate(values[:n]))
    assert quorum_value_choices(replies, n) == quorum_value_choices_bruteforce(replies, n)


def test_quorum_choices_examples():
    a, b, c = (1, (1, 3)), (2, (2, 2)), (0, (0, 0))
    assert quorum_value_choices([(0, a), (1, b), (2, c)], 3) == {a, b}
    assert quorum_value_choices([(0, a)], 3) == set()
    assert quorum_value_choices([(0, a), (1, b)], 3) == {b}


def test_pairs_order_by_timestamp_then_rank():
    assert max_pair([(1, (1, 2)), (2, (1, 3)), (0, (0, 0))]) == (2, (1, 3))
    assert pair_ts(INITIAL_PAIR) == (0, 0)


def test_h_of_needs_a_majority_of_acks():
    msg = (UPDATE, 0, 1, (1, (1, 3)), frozenset({0}))
    assert h_of((msg,), 3) == {INITIAL_PAIR}
    msg2 = (UPDATE, 0, 1, (1, (1, 3)), frozenset({0, 2}))
    assert h_of((msg2, (QUERY, 1, 2, None, frozenset())), 3) == {INITIAL_PAIR, (1, (1, 3))}


def test_constructor_checks():
    with pytest.raises(InvalidParam):
        make_abd(1, W1_R)
    with pytest.raises(InvalidParam):
        make_abd(2, HarnessBounds(threads=("A", "B", "C")))
    abd = make_abd(3, W1_R)
    assert abd.processes == ("A", "B", "S3")
    assert abd.process_of_rank(3) == "A" and abd.process_of_rank(0) is None


def _reachable(n, bounds, prune):
    abd = make_abd(n, bounds, prune_queries=prune)
    order, edges = reachable(abd)
    return abd, order, edges


@pytest.mark.parametrize("n, bounds", [(2, W1_R), (3, W1_W2), (3, W1_R)])
def test_servers_only_move_forward(n, bounds):
    abd, order, edges = _reachable(n, bounds, True)
    for s in order:
        for _, post in edges[s]:
            assert all(pair_ts(b) >= pair_ts(a) for a, b in zip(s[2], post[2]))


@pytest.mark.parametrize("n, bounds", [(2, W1_R), (3, W1_W2)])
def test_every_quorum_sees_the_latest_majority_value(n, bounds):
    from itertools import combinations

    abd, order, _ = _reachable(n, bounds, True)
    quorums = [q for r in range(n + 1) if 2 * r > n for q in combinations(range(n), r)]
    for s in order:
        top = pair_ts(max_pair(h_of(s[0], n)))
        for q in quorums:
            assert any(pair_ts(s[2][i]) >= top for i in q)


@pytest.mark.parametrize("n, bounds", [(2, W1_W2), (3, W1_W2)])
def test_completed_write_is_visible(n, bounds):
    abd, order, edges = _reachable(n, bounds, True)
    for s in order:
        for lab, post in edges[s]:
            if isinstance(lab, Res) and lab.method == WRITE:
                i = abd.processes.index(lab.tid)
                own = [m[3] for m in post[0] if m[0] == UPDATE and m[1] == i and m[2] == lab.opid]
                assert own and own[0] in h_of(post[0], n)


@pytest.mark.parametrize("n, bounds", [(2, W1_R), (2, W1_W2), (3, HarnessBounds(threads=("A",), ops=1, menu={"A": "w1"}))])
def test_query_pruning_preserves_behaviour(n, bounds):
    pruned = make_abd(n, bounds, prune_queries=True)
    full = make_abd(n, bounds, prune_queries=False)
    assert weak_sim(pruned, full, keep_relation=False).simulated
    assert weak_sim(full, pruned, keep_relation=False).simulated


def test_pruning_shrinks_the_state_space():
    _, pruned, _ = _reachable(3, W1_R, True)
    _, full, _ = _reachable(3, W1_R, False)
    assert len(pruned) < len(full)


def test_write_labels_carry_value_timestamp_owner():
    abd, order, edges = _reachable(2, W1_R, True)
    ups = {str(lab) for s in order for lab, _ in edges[s] if isinstance(lab, ObjInternal) and lab.rule == "write-update"}
    assert ups == {"A:write-update (1,1,A)"}
    invs = {lab for s in order for lab, _ in edges[s] if isinstance(lab, Inv)}
    assert {str(lab) for lab in invs} == {"A:inv w 1 #1", "B:inv r #2"}
