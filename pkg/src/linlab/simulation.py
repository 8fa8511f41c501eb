"""Weak forward simulation between finite LTSs: exact fixpoint and certificate checks."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Sequence

from .errors import BudgetExceeded, MatcherStuck
from .lts import Label, Lts, is_external

Gamma = Callable[[Label], bool]


class WeakSteps:
    """Cached internal closures and weak successors of an abstract LTS."""

    def __init__(self, lts: Lts, gamma: Gamma = is_external):
        self.lts = lts
        self.gamma = gamma
        self._enabled: dict[Hashable, list] = {}
        self._closure: dict[Hashable, tuple] = {}
        self._weak: dict[tuple, tuple] = {}

    def enabled(self, state):
        got = self._enabled.get(state)
        if got is None:
            got = self.lts.enabled(state)
            self._enabled[state] = got
        return got

    def closure(self, state) -> tuple:
        """States reachable by zero or more internal steps, in BFS order."""
        got = self._closure.get(state)
        if got is not None:
            return got
        order = [state]
        seen = {state}
        i = 0
        while i < len(order):
            for lab, post in self.enabled(order[i]):
                if not self.gamma(lab) and post not in seen:
                    seen.add(post)
                    order.append(post)
            i += 1
        got = tuple(order)
        self._closure[state] = got
        return got

    def weak(self, state, label: Label) -> tuple:
        """States reachable by internal* label internal*."""
        key = (state, label)
        got = self._weak.get(key)
        if got is not None:
            return got
        out: dict = {}
        for mid in self.closure(state):
            for lab, post in self.enabled(mid):
                if lab == label:
                    for s in self.closure(post):
                        out.setdefault(s, None)
        got = tuple(out)
        self._weak[key] = got
        return got

    def match(self, state, label: Label) -> tuple:
        return self.weak(state, label) if self.gamma(label) else self.closure(state)

    def lazy_match(self, state, label: Label) -> tuple:
        """Undominated matches: stay put on internal steps, no closure after the label."""
        if not self.gamma(label):
            return (state,)
        key = ("lazy", state, label)
        got = self._weak.get(key)
        if got is None:
            out: dict = {}
            for mid in self.closure(state):
                for lab, post in self.enabled(mid):
                    if lab == label:
                        out.setdefault(post, None)
            got = tuple(out)
            self._weak[key] = got
        return got


@dataclass
class SimResult:
    simulated: bool
    relation: set | None = None
    pairs_explored: int = 0
    counterexample: dict | None = None
    concrete: str = ""
    abstract: str = ""

    @property
    def verdict(self) -> str:
        return "Simulated" if self.simulated else "NotSimulated"

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "concrete": self.concrete,
            "abstract": self.abstract,
            "pairs_explored": self.pairs_explored,
        }
        if self.relation is not None:
            out["relation_size"] = len(self.relation)
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample
        return out


def weak_sim(
    concrete: Lts,
    abstract: Lts,
    gamma: Gamma = is_external,
    pair_cap: int | None = 5_000_000,
    keep_relation: bool = True,
    saturate: bool = False,
) -> SimResult:
    """Greatest weak forward simulation over the reachable pair graph.

    Pairs are explored depth-first; a pair is bad once some concrete step
    has no matching abstract weak step into a pair that is not bad.
    Badness is propagated with per-step counters, so the result is the
    least fixpoint of badness, i.e. the complement of the greatest
    simulation.  Exploration stops early once the initial pair is bad.

    A pair (c, a) is simulated whenever (c, a') is for some internal
    successor a' of a, so by default only undominated matches are tried:
    internal concrete steps keep the abstract state and visible steps land
    right after the abstract label.  The verdict equals the one over fully
    saturated weak steps, which `saturate=True` computes instead.
    """
    steps = WeakSteps(abstract, gamma)
    conc_enabled: dict[Hashable, list] = {}
    index: dict[tuple, int] = {}
    pairs: list[tuple] = []
    parent: list[tuple[int, Label] | None] = []
    bad: list[bool] = []
    reason: list[Any] = []
    counters: list[list[int]] = []
    reverse: list[list[tuple[int, int]]] = []

    def intern(pair, par):
        idx = index.get(pair)
        if idx is None:
            idx = len(pairs)
            if pair_cap is not None and idx >= pair_cap:
                raise BudgetExceeded(f"simulation pair graph exceeds {pair_cap} pairs")
            index[pair] = idx
            pairs.append(pair)
            parent.append(par)
            bad.append(False)
            reason.append(None)
            counters.append([])
            reverse.append([])
            stack.append(idx)
        return idx

    def mark(idx: int, why) -> None:
        queue = deque([(idx, why)])
        while queue:
            q, why = queue.popleft()
            if bad[q]:
                continue
            bad[q] = True
            reason[q] = why
            for p, t in reverse[q]:
                if bad[p]:
                    continue
                counters[p][t] -= 1
                if counters[p][t] == 0:
                    queue.append((p, ("all-matches-fail", t)))
            reverse[q] = []

    stack: list[int] = []
    intern((concrete.initial, abstract.initial), None)
    while stack and not bad[0]:
        idx = stack.pop()
        if bad[idx] or counters[idx]:
            continue
        c, a = pairs[idx]
        moves = conc_enabled.get(c)
        if moves is None:
            moves = concrete.enabled(c)
            conc_enabled[c] = moves
        if not moves:
            counters[idx] = [1]
            continue
        counts = []
        fail = None
        for t, (lab, c2) in enumerate(moves):
            targets = steps.match(a, lab) if saturate else steps.lazy_match(a, lab)
            good = 0
            for a2 in targets:
                q = intern((c2, a2), (idx, lab))
                if not bad[q]:
                    good += 1
                    reverse[q].append((idx, t))
            counts.append(good)
            if good == 0 and fail is None:
                fail = ("no-match", t) if not targets else ("all-matches-fail", t)
        counters[idx] = counts
        if fail is not None:
            mark(idx, fail)

    explored = len(pairs)
    if bad[0]:
        return SimResult(False, None, explored, _counterexample(concrete, abstract, pairs, parent, reason, bad, conc_enabled), concrete.name, abstract.name)
    relation = {pairs[i] for i in range(len(pairs)) if not bad[i]} if keep_relation else None
    return SimResult(True, relation, explored, None, concrete.name, abstract.name)


def _counterexample(concrete, abstract, pairs, parent, reason, bad, conc_enabled) -> dict:
    """Describe why the initial pair fails, plus a reachable pair with an unmatchable step."""
    def failing_label(idx):
        why = reason[idx]
        c = pairs[idx][0]
        moves = conc_enabled.get(c) or concrete.enabled(c)
        return str(moves[why[1]][0]), why[0]

    lab0, _ = failing_label(0)
    out = {
        "pair": {"concrete": concrete.describe_state(pairs[0][0]), "abstract": abstract.describe_state(pairs[0][1])},
        "unmatched_label": lab0,
    }
    direct = [i for i in range(len(pairs)) if bad[i] and reason[i] and reason[i][0] == "no-match"]
    if direct:
        idx = direct[0]
        trace = []
        cur = idx
        while parent[cur] is not None:
            p, lab = parent[cur]
            trace.append(str(lab))
            cur = p
        lab, _ = failing_label(idx)
        out["stuck_pair"] = {
            "concrete": concrete.describe_state(pairs[idx][0]),
            "abstract": abstract.describe_state(pairs[idx][1]),
            "unmatched_label": lab,
            "concrete_trace": list(reversed(trace)),
        }
    return out


def is_simulation(
    concrete: Lts,
    abstract: Lts,
    relation: Iterable[tuple],
    gamma: Gamma = is_external,
    budget: int | None = None,
) -> bool:
    """Direct check of the simulation conditions for a finite pair set.

    With `budget` set, abstract matches may use at most that many internal
    steps in total around the visible one.
    """
    rel = set(relation)
    if (concrete.initial, abstract.initial) not in rel:
        return False
    steps = WeakSteps(abstract, gamma)
    for c, a in rel:
        for lab, c2 in concrete.enabled(c):
            if budget is None:
                targets = steps.match(a, lab)
            else:
                targets = _bounded_match(steps, a, lab, budget)
            if not any((c2, a2) in rel for a2 in targets):
                return False
    return True


def _bounded_match(steps: WeakSteps, state, label, budget: int) -> set:
    visible = steps.gamma(label)
    frontier = {(state, False)}
    out = set()
    for used in range(budget + 2):
        nxt = set()
        for s, done in frontier:
            if done or not visible:
                out.add(s)
            for lab, post in steps.enabled(s):
                if steps.gamma(lab):
                    if visible and not done and lab == label:
                        out.add(post)
                        nxt.add((post, True))
                elif used < budget:
                    nxt.add((post, done))
        frontier = nxt
        if not frontier:
            break
    return out


# ---------------------------------------------------------------- certificates


@dataclass
class Violation:
    kind: str
    label: str
    detail: str
    concrete: Any
    abstract: Any
    annotation: Any
    abstract_labels: list[str]
    trace: list[str]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "label": self.label,
            "detail": self.detail,
            "abstract_labels": self.abstract_labels,
            "trace": self.trace,
            "concrete": self.concrete,
            "abstract": self.abstract,
            "annotation": self.annotation,
        }


@dataclass
class Report:
    concrete: str
    abstract: str
    pairs: int = 0
    transitions: int = 0
    violations: list[Violation] = field(default_factory=list)
    certified: set | None = None
    bounds: dict | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "verdict": "CertificateValid" if self.ok else "CertificateViolated",
            "concrete": self.concrete,
            "abstract": self.abstract,
            "pairs": self.pairs,
            "transitions": self.transitions,
            "violations": [v.to_json() for v in self.violations],
            "bounds": self.bounds,
        }


Relation = Callable[[Hashable, Hashable, Any], Any]
Matcher = Callable[[Hashable, Hashable, Any, Label, Hashable], tuple[Sequence[Label], Any]]


def _failures(result) -> list[str]:
    if result is True:
        return []
    if result is False or result is None:
        return ["relation"]
    return list(result)


def check_certificate(
    concrete: Lts,
    abstract: Lts,
    relation: Relation,
    matcher: Matcher,
    gamma: Gamma = is_external,
    budget: int | None = None,
    annotation: Any = None,
    max_violations: int = 1,
    cap: int | None = 5_000_000,
    keep_pairs: bool = False,
) -> Report:
    """Breadth-first check of a matcher-driven simulation certificate.

    Triples (concrete, abstract, annotation) are explored from the initial
    states.  For every concrete step the matcher proposes abstract labels and
    a new annotation; the labels must be enabled in turn, their visible part
    must equal the concrete step's, and the landing triple must satisfy the
    relation.  `relation` returns True, False or a list of failed condition
    names.
    """
    report = Report(concrete.name, abstract.name)
    start = (concrete.initial, abstract.initial, annotation)
    parent: dict[tuple, tuple | None] = {start: None}
    queue = deque([start])
    failed = _failures(relation(*start))
    if failed:
        report.violations.append(_violation(concrete, abstract, start, "relation", "(initial)", ", ".join(failed), [], parent))
        return report

    def record(kind, triple, lab, detail, seq):
        report.violations.append(_violation(concrete, abstract, triple, kind, str(lab), detail, [str(x) for x in seq], parent))

    while queue and len(report.violations) < max_violations:
        triple = queue.popleft()
        c, a, ann = triple
        report.pairs += 1
        for lab, c2 in concrete.enabled(c):
            report.transitions += 1
            seq, ann2 = matcher(c, a, ann, lab, c2)
            state = a
            for step in seq:
                post = abstract.step(state, step)
                if post is None:
                    raise MatcherStuck(
                        f"abstract label {step} not enabled while matching {lab} "
                        f"(after {len(parent)} certified triples)"
                    )
                state = post
            visible = [x for x in seq if gamma(x)]
            want = [lab] if gamma(lab) else []
            if visible != want:
                record("gamma", triple, lab, f"visible abstract labels {[str(v) for v in visible]} differ", seq)
                break
            if budget is not None and len(seq) - len(visible) > budget:
                record("budget", triple, lab, f"{len(seq) - len(visible)} internal steps exceed budget {budget}", seq)
                break
            nxt = (c2, state, ann2)
            if nxt in parent:
                continue
            failed = _failures(relation(*nxt))
            if failed:
                parent[nxt] = (triple, lab)
                record("relation", nxt, lab, "failed: " + ", ".join(failed), seq)
                break
            parent[nxt] = (triple, lab)
            if cap is not None and len(parent) > cap:
                raise BudgetExceeded(f"certificate exploration exceeds {cap} triples")
            queue.append(nxt)
    if keep_pairs and report.ok:
        report.certified = {(c, a) for c, a, _ in parent}
    if report.ok:
        report.pairs = len(parent)
    return report


def _violation(concrete, abstract, triple, kind, label, detail, seq, parent) -> Violation:
    trace = []
    cur = triple
    while parent.get(cur) is not None:
        prev, lab = parent[cur]
        trace.append(str(lab))
        cur = prev
    c, a, ann = triple
    return Violation(
        kind, label, detail, concrete.describe_state(c), abstract.describe_state(a),
        _plain(ann), seq, list(reversed(trace)),
    )


def _plain(obj):
    if isinstance(obj, tuple):
        return [_plain(x) for x in obj]
    return obj


def identity_matcher(c, a, ann, lab, c2):
    return [lab], ann


def ghost_relation(c, a, ann) -> bool:
    return a[0] == c
