import pytest
from hypothesis import given, settings

from strategies import histories
from linlab.errors import NotSubsequence, ParseError
from linlab.lts import is_well_formed
from linlab.seqspec import (
    brute_force_linearizations,
    completed_keys,
    format_history,
    format_seq,
    is_linearization,
    is_prefix,
    is_spec_reg,
    is_subsequence,
    obs,
    obs_between,
    op_table,
    parse_history,
    parse_seq,
    real_time_lt,
    spec_linearizations,
)

# Writes w(1) then w(2) on A, with a read of B invoked during w(1).
WW_R_PENDING = "A:inv w 1; B:inv r; A:res w; A:inv w 2; A:res w"
WW_R_DONE = WW_R_PENDING + "; B:res r 2"


def seq(text):
    return parse_seq(text)


@pytest.mark.parametrize("text, ok", [("w1.r=1", True), ("r=0", True), ("w1.w2.r=1", False), ("", True)])
def test_is_spec_reg(text, ok):
    assert is_spec_reg(seq(text)) is ok


@pytest.mark.parametrize("text, value", [("", 0), ("w2.w1", 1), ("w1.r=1", 1)])
def test_obs(text, value):
    assert obs(seq(text)) == value


def test_obs_between_examples():
    w1 = parse_seq("A:w1#1")
    w2 = parse_seq("B:w2#2")
    assert obs_between(w1, w1) == {1}
    assert obs_between((), w1) == {0, 1}
    assert obs_between(w1, w2 + w1) == {1}
    assert obs_between(w1, w1 + w2) == {1, 2}
    with pytest.raises(NotSubsequence):
        obs_between(w2, w1)


def test_is_linearization_examples():
    pending = parse_history(WW_R_PENDING)
    done = parse_history(WW_R_DONE)
    assert is_linearization(pending, parse_seq("A:w1#1.A:w2#3"))
    assert is_linearization(done, parse_seq("A:w1#1.A:w2#3.B:r=2#2"))
    assert not is_linearization(done, parse_seq("A:w2#3.A:w1#1.B:r=2#2"))
    assert not is_linearization(done, parse_seq("A:w1#1.A:w2#3"))
    assert not is_linearization(done, parse_seq("A:w1#1.A:w2#3.B:r=1#2"))


def test_real_time_order_examples():
    seq_hist = parse_history("A:inv w 1; A:res w; B:inv r; B:res r 1")
    assert len(real_time_lt(seq_hist)) == 1
    overlap = parse_history("A:inv w 1; B:inv r; A:res w; B:res r 1")
    assert real_time_lt(overlap) == set()
    nested = parse_history("B:inv w 2; A:inv w 1; A:res w; B:res w")
    assert real_time_lt(nested) == set()


def test_spec_linearizations_are_ordered_shortest_first():
    h = parse_history("A:inv w 1; B:inv r")
    lins = spec_linearizations(h)
    assert lins[0] == ()
    assert [len(s) for s in lins] == sorted(len(s) for s in lins)
    assert all(is_spec_reg(s) and is_linearization(h, s) for s in lins)


def test_subsequence_and_prefix():
    assert is_subsequence((1, 3), (1, 2, 3)) and not is_subsequence((3, 1), (1, 2, 3))
    assert is_prefix((1, 2), (1, 2, 3)) and not is_prefix((2,), (1, 2))


def test_history_round_trip():
    h = parse_history(WW_R_DONE)
    assert parse_history(format_history(h, ids=True)) == h
    assert format_history(h) == "A:inv w 1; B:inv r; A:res w; A:inv w 2; A:res w; B:res r 2"
    assert completed_keys(h) == {("A", 1), ("B", 2), ("A", 3)}


def test_seq_round_trip():
    s = parse_seq("A:w1#1.B:r=1#3")
    assert parse_seq(format_seq(s)) == s
    assert format_seq(()) == "ε" and parse_seq("ε") == ()
    assert format_seq(parse_seq("w1.r=1"), ids=False) == "w1.r=1"


@pytest.mark.parametrize("text", ["A:inv x", "A:res w", "A:inv w 1; A:inv r", "A:inv w", "A:inv r; A:res r", "A:inv r #1; A:res r 0 #2"])
def test_history_parse_errors(text):
    with pytest.raises(ParseError):
        parse_history(text)


def test_parse_error_reports_position():
    with pytest.raises(ParseError) as err:
        parse_history("A:inv w 1; A:res w; bogus")
    assert err.value.position == len("A:inv w 1; A:res w; ")


@pytest.mark.parametrize("text", ["q", "r", "w"])
def test_seq_parse_errors(text):
    with pytest.raises(ParseError):
        parse_seq(text)


@settings(max_examples=300, deadline=None)
@given(h=histories(max_ops=5))
def test_random_histories_are_well_formed_and_round_trip(h):
    assert is_well_formed(h)
    assert parse_history(format_history(h, ids=True)) == h


@settings(max_examples=200, deadline=None)
@given(h=histories(max_ops=5))
def test_spec_linearizations_match_filtered_brute_force(h):
    brute = {s for s in brute_force_linearizations(h, (0, 1, 2)) if is_spec_reg(s)}
    assert set(spec_linearizations(h)) == brute


@settings(max_examples=200, deadline=None)
@given(h=histories(max_ops=5))
def test_linearizations_keep_completed_ops_and_spec_is_prefix_closed(h):
    done = {k for k, info in op_table(h).items() if info.completed}
    for s in spec_linearizations(h):
        assert done <= {op.key for op in s}
        for k in range(len(s)):
            assert is_spec_reg(s[:k])
