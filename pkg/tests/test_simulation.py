import pytest

from linlab.errors import MatcherStuck
from linlab.lts import HarnessBounds, ObjInternal, ghost
from linlab.registers import make_register
from linlab.simulation import (
    WeakSteps,
    check_certificate,
    ghost_relation,
    identity_matcher,
    is_simulation,
    weak_sim,
)

W1_R = HarnessBounds(threads=("A", "B"), ops=1, menu={"A": "w1", "B": "r"})
W1_W2_R = HarnessBounds(threads=("A", "B", "C"), ops=1, menu={"A": "w1", "B": "w2", "C": "r"})


@pytest.mark.parametrize("kind", ["atr", "tnsr", "wsr", "dr"])
def test_simulation_is_reflexive(kind):
    lts = make_register(kind, W1_W2_R)
    assert weak_sim(lts, make_register(kind, W1_W2_R)).simulated


@pytest.mark.parametrize("source, target", [("atr", "wsr"), ("tnsr", "dr"), ("wsr", "dr"), ("ticket", "wsr")])
def test_relation_passes_direct_recheck(source, target):
    concrete, abstract = make_register(source, W1_W2_R), make_register(target, W1_W2_R)
    result = weak_sim(concrete, abstract)
    assert result.simulated and is_simulation(concrete, abstract, result.relation)


@pytest.mark.parametrize("source, target", [("atr", "wsr"), ("dlr", "atr"), ("tnsr", "wsr"), ("wsr", "dr")])
def test_lazy_matching_agrees_with_saturated_matching(source, target):
    concrete, abstract = make_register(source, W1_W2_R), make_register(target, W1_W2_R)
    lazy = weak_sim(concrete, abstract, keep_relation=False)
    full = weak_sim(concrete, abstract, keep_relation=False, saturate=True)
    assert lazy.simulated == full.simulated


def test_transitivity_by_composing_relations():
    atr, wsr, dr = (make_register(k, W1_W2_R) for k in ("atr", "wsr", "dr"))
    r1 = weak_sim(atr, wsr).relation
    r2 = weak_sim(wsr, dr).relation
    by_mid = {}
    for m, a in r2:
        by_mid.setdefault(m, set()).add(a)
    composed = {(c, a) for c, m in r1 for a in by_mid.get(m, ())}
    assert is_simulation(atr, dr, composed)
    assert weak_sim(atr, dr, keep_relation=False).simulated


def test_counterexample_names_the_unmatched_step():
    result = weak_sim(make_register("dlr", W1_W2_R), make_register("atr", W1_W2_R))
    assert not result.simulated and result.relation is None
    ce = result.counterexample
    assert "unmatched_label" in ce and ce["stuck_pair"]["concrete_trace"]
    assert result.to_json()["verdict"] == "NotSimulated"


def test_empty_relation_is_not_a_simulation():
    atr = make_register("atr", W1_R)
    assert not is_simulation(atr, atr, set())


def test_bounded_recheck_of_a_certificate():
    lts = make_register("atr", W1_R)
    report = check_certificate(lts, make_register("atr", W1_R), lambda c, a, ann: c == a, identity_matcher, keep_pairs=True)
    assert report.ok
    assert is_simulation(lts, make_register("atr", W1_R), report.certified, budget=1)
    assert not is_simulation(lts, make_register("atr", W1_R), report.certified, budget=0)


def test_ghost_certificate_pairs_recheck():
    inner = make_register("wsr", W1_R)
    report = check_certificate(inner, ghost(inner), ghost_relation, identity_matcher, keep_pairs=True)
    assert report.ok
    assert is_simulation(inner, ghost(inner), report.certified, budget=1)


def test_wrong_matcher_is_caught():
    lts = make_register("atr", W1_R)

    def drop_internal(c, a, ann, lab, c2):
        return ([] if isinstance(lab, ObjInternal) else [lab]), ann

    report = check_certificate(lts, make_register("atr", W1_R), lambda c, a, ann: c == a, drop_internal)
    assert not report.ok and report.violations[0].kind == "relation"

    def invent(c, a, ann, lab, c2):
        return [ObjInternal("Z", "nothing")], ann

    with pytest.raises(MatcherStuck):
        check_certificate(lts, make_register("atr", W1_R), lambda c, a, ann: True, invent)


def test_gamma_mismatch_is_reported():
    lts = make_register("atr", W1_R)

    def swallow(c, a, ann, lab, c2):
        return [], ann

    report = check_certificate(lts, make_register("atr", W1_R), lambda c, a, ann: True, swallow)
    assert report.violations[0].kind == "gamma"


def test_weak_steps_match_includes_internal_closure():
    wsr = make_register("wsr", W1_R)
    steps = WeakSteps(wsr, lambda lab: not isinstance(lab, ObjInternal))
    inv = wsr.enabled(wsr.initial)[0][0]
    assert steps.lazy_match(wsr.initial, inv) <= steps.match(wsr.initial, inv)
