"""Coin-correlation attacks, trace-set generation, scripted adversaries and the results table.

A program tosses a coin into `a` and reads the register into `b`.  An
adversary violates the property when it forces a = b with probability 1:
from some reachable configuration at the coin toss, the coin=1 branch can
still complete with b = 1 and the coin=2 branch with b = 2.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Hashable, Sequence

from .abd import make_abd
from .errors import BudgetExceeded, InvalidParam, ScriptStuck, TargetMalformed
from .lts import READ, SHORT, HarnessBounds, Inv, Lts, ProgInternal, Res, compose, reachable, replay
from .programs import COIN_TAGS, Program, make_program
from .registers import make_register, parse_kind

DEFAULT_CAP = 2_000_000
TABLE_PROGRAMS = ("P1", "P2", "P3")
TABLE_IMPLS = ("atr", "dlr", "tnsr", "abd:3")
PASS, FAIL = "✓", "✗"


def make_impl(kind: str, bounds: HarnessBounds, prune_queries: bool = True) -> Lts:
    """Register implementation for a program harness; ABD drops dead query messages by default."""
    name, arg = parse_kind(kind)
    if name == "abd":
        return make_abd(arg, bounds, prune_queries=prune_queries)
    return make_register(kind, bounds)


def _as_program(program: Program | str) -> Program:
    return make_program(program) if isinstance(program, str) else program


def _as_impl(impl: Lts | str, program: Program, prune_queries: bool = True) -> Lts:
    return make_impl(impl, program.bounds, prune_queries) if isinstance(impl, str) else impl


def _coin_value(label) -> int | None:
    if isinstance(label, ProgInternal) and label.tag in COIN_TAGS:
        return COIN_TAGS.index(label.tag) + 1
    return None


# ---------------------------------------------------------------- attack search


@dataclass
class AttackWitness:
    """A shared prefix up to the coin and one continuation per coin outcome."""

    program: str
    impl: str
    prefix: tuple
    branches: dict[int, tuple]
    finals: dict[int, tuple[int, int]]
    kind: str = "correlated"

    def runs(self) -> dict[int, tuple]:
        return {c: self.prefix + rest for c, rest in self.branches.items()}

    def validate(self, comp: Lts, program: Program) -> bool:
        """Replay both branches and confirm the claimed final (a, b)."""
        for c, labels in self.runs().items():
            run = replay(comp, labels)
            last = run.last[0]
            if not program.is_done(last):
                return False
            if (program.variable(last, "a"), program.variable(last, "b")) != self.finals[c]:
                return False
            if labels[len(self.prefix)] != ProgInternal(COIN_TAGS[c - 1], _coin_thread(program)):
                return False
        return True

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "impl": self.impl,
            "kind": self.kind,
            "prefix": [str(lab) for lab in self.prefix],
            "branches": {str(c): [str(lab) for lab in rest] for c, rest in self.branches.items()},
            "finals": {str(c): {"a": a, "b": b} for c, (a, b) in self.finals.items()},
        }

    def to_text(self, comp: Lts | None = None) -> str:
        lines = [f"# {self.kind} witness for {self.program} with {self.impl}"]
        lines += [f"  {i:3d}  {lab}" for i, lab in enumerate(self.prefix)]
        for c, rest in self.branches.items():
            a, b = self.finals[c]
            lines.append(f"# branch coin={c}: final a={a} b={b}")
            lines += [f"  {len(self.prefix) + i:3d}  {lab}" for i, lab in enumerate(rest)]
        if comp is not None:
            for c, labels in self.runs().items():
                lines.append(f"# final state coin={c}: {comp.describe_state(replay(comp, labels).last)}")
        return "\n".join(lines)


def _coin_thread(program: Program) -> str:
    for t, body in program.bodies.items():
        if any(ins.op == "coin" for ins in body):
            return t
    raise InvalidParam(f"{program.name} tosses no coin")


@dataclass
class AttackResult:
    witness: AttackWitness | None
    anti: AttackWitness | None
    states: int
    coin_states: int

    @property
    def violated(self) -> bool:
        return self.witness is not None


def _outcomes(order, edges, program: Program, var: str) -> dict:
    """For each state, the values of `var` at completed runs reachable from it."""
    preds: dict[Hashable, list] = {s: [] for s in order}
    for s in order:
        for _, post in edges[s]:
            preds[post].append(s)
    out: dict[Hashable, set] = {s: set() for s in order}
    work = []
    for s in order:
        if program.is_done(s[0]):
            out[s].add(program.variable(s[0], var))
            work.append(s)
    while work:
        s = work.pop()
        vals = out[s]
        for p in preds[s]:
            if not vals <= out[p]:
                out[p] |= vals
                work.append(p)
    return out


def _bfs_path(order, edges, target) -> tuple:
    parent = {order[0]: None}
    for s in order:
        if s == target:
            break
        for lab, post in edges[s]:
            if post not in parent:
                parent[post] = (s, lab)
    labels = []
    s = target
    while parent[s] is not None:
        s, lab = parent[s]
        labels.append(lab)
    return tuple(reversed(labels))


def _steer(edges, out, program: Program, start, var: str, value: int) -> tuple:
    """First-enabled continuation from `start` to a completed run with var = value."""
    labels = []
    s = start
    while not program.is_done(s[0]):
        for lab, post in edges[s]:
            if value in out[post]:
                labels.append(lab)
                s = post
                break
        else:  # pragma: no cover - excluded by the outcome sets
            raise AssertionError("outcome sets are inconsistent")
    return tuple(labels)


def correlation_attack(
    program: Program | str,
    impl: Lts | str,
    bounds: HarnessBounds | None = None,
    cap: int | None = DEFAULT_CAP,
) -> AttackResult:
    """Exhaustive search for an adversary forcing a = b (and, separately, a != b)."""
    program = _as_program(program)
    impl = _as_impl(impl, program)
    if bounds is not None and bounds.node_cap is not None:
        cap = bounds.node_cap
    if "b" not in program.variables:
        raise InvalidParam(f"{program.name} has no variable b")
    coin_tid = _coin_thread(program)
    comp = compose(program, impl)
    order, edges = reachable(comp, cap=cap)
    out = _outcomes(order, edges, program, "b")
    found: dict[str, tuple] = {}
    coin_states = 0
    for s in order:
        posts = {}
        for lab, post in edges[s]:
            c = _coin_value(lab)
            if c is not None:
                posts[c] = post
        if not posts:
            continue
        coin_states += 1
        s1, s2 = posts[1], posts[2]
        if "correlated" not in found and 1 in out[s1] and 2 in out[s2]:
            found["correlated"] = (s, {1: (s1, 1), 2: (s2, 2)})
        if "anti" not in found and 2 in out[s1] and 1 in out[s2]:
            found["anti"] = (s, {1: (s1, 2), 2: (s2, 1)})
    witnesses = {}
    for kind, (s, branch) in found.items():
        prefix = _bfs_path(order, edges, s)
        rests, finals = {}, {}
        for c, (post, b) in branch.items():
            rests[c] = (ProgInternal(COIN_TAGS[c - 1], coin_tid),) + _steer(edges, out, program, post, "b", b)
            finals[c] = (c, b)
        w = AttackWitness(program.name, impl.name, prefix, rests, finals, kind)
        if not w.validate(comp, program):  # pragma: no cover - guards the search itself
            raise AssertionError(f"{kind} witness failed to replay")
        witnesses[kind] = w
    return AttackResult(witnesses.get("correlated"), witnesses.get("anti"), len(order), coin_states)


# ---------------------------------------------------------------- program-visible traces


@dataclass(frozen=True)
class ProgramTrace:
    """Operations and the coin of one run, with each event's completed predecessors.

    Operations are named by thread and ordinal (A1, A2, ...); the coin is an
    instantaneous event named `coin`.  `preds` maps an event to the events
    that had completed when it started, which fixes the real-time order.
    """

    ops: tuple  # sorted (name, method, input, output)
    coin: int | None
    preds: tuple  # sorted (name, sorted tuple of names)

    def pred_map(self) -> dict[str, frozenset]:
        return {name: frozenset(p) for name, p in self.preds}

    def op_map(self) -> dict[str, tuple]:
        return {name: (method, inp, outp) for name, method, inp, outp in self.ops}

    def __str__(self) -> str:
        preds = self.pred_map()
        parts = []
        for name, method, inp, outp in self.ops:
            call = SHORT[method] + (str(inp) if inp is not None else "") + (f"={outp}" if outp is not None else "")
            parts.append(f"{name}:{call}" + _after(preds[name]))
        if self.coin is not None:
            parts.append(f"coin={self.coin}" + _after(preds["coin"]))
        return "; ".join(parts)

    def to_json(self) -> dict:
        preds = self.pred_map()
        return {
            "ops": [
                {"name": n, "method": m, "input": i, "output": o, "after": sorted(preds[n])}
                for n, m, i, o in self.ops
            ],
            "coin": None if self.coin is None else {"value": self.coin, "after": sorted(preds["coin"])},
        }


def _after(names) -> str:
    return " after " + ",".join(sorted(names)) if names else ""


def make_trace(ops: dict[str, tuple], coin: int, preds: dict[str, Sequence[str]]) -> ProgramTrace:
    """Build a trace from {name: (method, input, output)} and {name: predecessors}."""
    return ProgramTrace(
        tuple(sorted((n,) + tuple(v) for n, v in ops.items())),
        coin,
        tuple(sorted((n, tuple(sorted(p))) for n, p in preds.items())),
    )


def project(labels: Sequence, threads: Sequence[str] | None = None) -> ProgramTrace:
    """Program-visible trace of a composite run: operations, coin and real-time order."""
    started: dict[str, int] = {}
    names: dict[tuple[str, int], str] = {}
    ops: dict[str, list] = {}
    preds: dict[str, frozenset] = {}
    done: set[str] = set()
    coin = None
    for lab in labels:
        if isinstance(lab, Inv):
            k = started.get(lab.tid, 0) + 1
            started[lab.tid] = k
            name = f"{lab.tid}{k}"
            names[(lab.tid, lab.opid)] = name
            ops[name] = [lab.method, lab.value, None]
            preds[name] = frozenset(done)
        elif isinstance(lab, Res):
            name = names[(lab.tid, lab.opid)]
            ops[name][2] = lab.value
            done.add(name)
        elif _coin_value(lab) is not None:
            coin = _coin_value(lab)
            preds["coin"] = frozenset(done)
            done.add("coin")
    return make_trace({n: tuple(v) for n, v in ops.items()}, coin, preds)


def _w(v):
    return ("write", v, None)


def _r(v):
    return (READ, None, v)


def _t1(c):
    return make_trace({"A1": _w(1), "A2": _w(2), "B1": _r(c)}, c, {"A1": (), "A2": ("A1",), "B1": (), "coin": ("A1", "A2")})


def _t2(c):
    return make_trace(
        {"A1": _w(1), "B1": _w(2), "B2": _r(c)}, c,
        {"A1": (), "B1": (), "coin": ("A1",), "B2": ("A1", "B1", "coin")},
    )


def _t3(c):
    return make_trace(
        {"A1": _w(1), "B1": _w(2), "B2": _r(c)}, c,
        {"A1": (), "B1": (), "coin": ("A1", "B1"), "B2": ("A1", "B1")},
    )


def _t4(c):
    return make_trace(
        {"A1": _w(1), "B1": _w(2), "B2": _r(c), "C1": _r(2)}, c,
        {"A1": (), "B1": (), "C1": (), "coin": ("A1",), "B2": ("A1", "B1", "C1", "coin")},
    )


TARGETS = {name: (f(1), f(2)) for name, f in (("T1", _t1), ("T2", _t2), ("T3", _t3), ("T4", _t4))}
TARGET_PROGRAMS = {"T1": "P1", "T2": "P2", "T3": "P3", "T4": "P4"}


def target(name: str) -> tuple[ProgramTrace, ProgramTrace]:
    key = name.upper()
    if key not in TARGETS:
        raise InvalidParam(f"unknown target {name!r}; known: {', '.join(TARGETS)}")
    return TARGETS[key]


def check_targets(targets: tuple[ProgramTrace, ProgramTrace]) -> None:
    """Raise TargetMalformed unless the pair is a coin=1 / coin=2 trace set with a shared pre-coin part."""
    if len(targets) != 2:
        raise TargetMalformed("a target set is a pair of traces")
    t1, t2 = targets
    if (t1.coin, t2.coin) != (1, 2):
        raise TargetMalformed("the first target must toss 1 and the second 2")
    for t in targets:
        ops, preds = t.op_map(), t.pred_map()
        if set(preds) != set(ops) | {"coin"}:
            raise TargetMalformed(f"predecessors must be given for every event of {t}")
        for name, ps in preds.items():
            if not ps <= set(preds) - {name}:
                raise TargetMalformed(f"{name} is preceded by unknown events")
            tid, k = name[0], name[1:]
            if name != "coin" and k != "1" and f"{tid}{int(k) - 1}" not in ps:
                raise TargetMalformed(f"{name} must follow its thread's previous operation")
    if set(t1.op_map()) != set(t2.op_map()):
        raise TargetMalformed("targets differ in their operations")
    p1, p2 = t1.pred_map(), t2.pred_map()
    if p1["coin"] != p2["coin"]:
        raise TargetMalformed("targets disagree on what precedes the coin")
    for name in p1["coin"]:
        if p1[name] != p2[name] or t1.op_map()[name] != t2.op_map()[name]:
            raise TargetMalformed(f"targets disagree on pre-coin event {name}")


def can_generate(
    program: Program | str,
    impl: Lts | str,
    targets: tuple[ProgramTrace, ProgramTrace] | str,
    bounds: HarnessBounds | None = None,
) -> bool:
    """Whether one deterministic script yields the first target on coin=1 and the second on coin=2."""
    return generate(program, impl, targets, bounds) is not None


def generate(
    program: Program | str,
    impl: Lts | str,
    targets: tuple[ProgramTrace, ProgramTrace] | str,
    bounds: HarnessBounds | None = None,
) -> AttackWitness | None:
    """A script generating the target pair, as a shared prefix and two continuations."""
    program = _as_program(program)
    impl = _as_impl(impl, program)
    if isinstance(targets, str):
        targets = target(targets)
    check_targets(targets)
    comp = compose(program, impl)
    goals = [(t.op_map(), t.pred_map()) for t in targets]
    coin_tid = _coin_thread(program)
    all_events = frozenset(goals[0][1])
    limit = bounds.node_cap if bounds is not None and bounds.node_cap is not None else DEFAULT_CAP
    visited = [0]

    def advance(goal_ids, summary, lab):
        """Summary after `lab`, or None if it contradicts a goal."""
        started, done, names = summary
        if isinstance(lab, Inv):
            k = sum(1 for n in started if n[0] == lab.tid) + 1
            name = f"{lab.tid}{k}"
            for g in goal_ids:
                ops, preds = goals[g]
                if name not in ops or ops[name][:2] != (lab.method, lab.value) or preds[name] != done:
                    return None
            return (started | {name}, done, names + ((lab.tid, lab.opid, name),))
        if isinstance(lab, Res):
            name = next(n for t, o, n in names if t == lab.tid and o == lab.opid)
            for g in goal_ids:
                if goals[g][0][name][2] != lab.value:
                    return None
            return (started, done | {name}, names)
        return summary

    memo: dict = {}

    def finish(g, state, summary) -> tuple | None:
        key = (g, state, summary)
        if key in memo:
            return memo[key]
        visited[0] += 1
        if visited[0] > limit:
            raise BudgetExceeded(f"generation search exceeds cap {limit}")
        memo[key] = None
        if comp.left.is_done(state[0]):
            result = () if summary[1] | {"coin"} == all_events else None
        else:
            result = None
            for lab, post in comp.enabled(state):
                nxt = advance((g,), summary, lab)
                if nxt is None:
                    continue
                rest = finish(g, post, nxt)
                if rest is not None:
                    result = (lab,) + rest
                    break
        memo[key] = result
        return result

    def before(state, summary) -> tuple | None:
        key = ("pre", state, summary)
        if key in memo:
            return memo[key]
        visited[0] += 1
        if visited[0] > limit:
            raise BudgetExceeded(f"generation search exceeds cap {limit}")
        memo[key] = None
        result = None
        moves = comp.enabled(state)
        coins = {_coin_value(lab): post for lab, post in moves if _coin_value(lab) is not None}
        if coins and goals[0][1]["coin"] == summary[1]:
            started, done, names = summary
            after = (started, done | {"coin"}, names)
            rest1 = finish(0, coins[1], after)
            rest2 = finish(1, coins[2], after) if rest1 is not None else None
            if rest2 is not None:
                result = ((), {1: (ProgInternal(COIN_TAGS[0], coin_tid),) + rest1, 2: (ProgInternal(COIN_TAGS[1], coin_tid),) + rest2})
        if result is None:
            for lab, post in moves:
                if _coin_value(lab) is not None:
                    continue
                nxt = advance((0, 1), summary, lab)
                if nxt is None:
                    continue
                got = before(post, nxt)
                if got is not None:
                    result = ((lab,) + got[0], got[1])
                    break
        memo[key] = result
        return result

    found = before(comp.initial, (frozenset(), frozenset(), ()))
    if found is None:
        return None
    prefix, rests = found
    finals = {}
    for c, rest in rests.items():
        last = replay(comp, prefix + rest).last[0]
        finals[c] = (program.variable(last, "a"), program.variable(last, "b"))
    return AttackWitness(program.name, impl.name, prefix, rests, finals, kind="generated")


# ---------------------------------------------------------------- scripted adversaries


@dataclass(frozen=True)
class SchedulerScript:
    """Label selectors up to the coin, then one selector list per coin outcome."""

    name: str
    program: str
    impl: str
    target: str
    before: tuple[str, ...]
    after: dict = field(default_factory=dict)


def _strip_id(text: str) -> str:
    head, sep, tail = text.rpartition(" #")
    return head if sep and tail.isdigit() else text


def _select(comp: Lts, state, selector: str):
    hits = [(lab, post) for lab, post in comp.enabled(state) if _strip_id(str(lab)) == selector or str(lab) == selector]
    if len(hits) != 1:
        enabled = ", ".join(str(lab) for lab, _ in comp.enabled(state))
        why = "not enabled" if not hits else "ambiguous"
        raise ScriptStuck(f"selector {selector!r} is {why}; enabled: {enabled}")
    return hits[0]


@dataclass
class ScriptRun:
    script: SchedulerScript
    runs: dict[int, tuple]
    traces: dict[int, ProgramTrace]
    finals: dict[int, tuple[int, int]]

    def trace_set(self) -> tuple[ProgramTrace, ProgramTrace]:
        return (self.traces[1], self.traces[2])

    def matches_target(self) -> bool:
        return self.trace_set() == target(self.script.target)

    def to_json(self) -> dict:
        return {
            "script": self.script.name,
            "program": self.script.program,
            "impl": self.script.impl,
            "target": self.script.target,
            "matches_target": self.matches_target(),
            "runs": {
                str(c): {
                    "labels": [str(lab) for lab in self.runs[c]],
                    "trace": str(self.traces[c]),
                    "a": self.finals[c][0],
                    "b": self.finals[c][1],
                }
                for c in (1, 2)
            },
        }


def run_script(script: SchedulerScript, program: Program | None = None, impl: Lts | None = None) -> ScriptRun:
    """Run a script in both coin branches; ABD runs on the unpruned model."""
    program = program or make_program(script.program)
    impl = impl or make_impl(script.impl, program.bounds, prune_queries=False)
    comp = compose(program, impl)
    coin_tid = _coin_thread(program)
    state = comp.initial
    prefix = []
    for sel in script.before:
        lab, state = _select(comp, state, sel)
        prefix.append(lab)
    runs, traces, finals = {}, {}, {}
    for c in (1, 2):
        lab, s = _select(comp, state, f"{coin_tid}:{COIN_TAGS[c - 1]}")
        labels = prefix + [lab]
        for sel in script.after[c]:
            lab, s = _select(comp, s, sel)
            labels.append(lab)
        if not program.is_done(s[0]):
            raise ScriptStuck(f"script {script.name} ends before the program completes (coin={c})")
        runs[c] = tuple(labels)
        traces[c] = project(labels)
        finals[c] = (program.variable(s[0], "a"), program.variable(s[0], "b"))
    return ScriptRun(script, runs, traces, finals)


def _abd_acks(kind: str, owner: str, opid: int, responders: str) -> list[str]:
    return [f"{p}:server-{kind}-ack ({owner},{opid})" for p in responders.split()]


def _dlr_p1() -> SchedulerScript:
    before = (
        "B:inv r",
        "A:inv w 1", "A:write-store", "A:res w",
        "B:read-load",
        "A:inv w 2", "A:write-store", "A:res w",
        "B:read-load",
    )
    return SchedulerScript("dlr_p1", "P1", "dlr", "T1", before, {1: ("B:res r 1",), 2: ("B:res r 2",)})


def _tnsr_p2() -> SchedulerScript:
    before = (
        "B:inv w 2", "B:write-load1",
        "A:inv w 1", "A:write-load1", "A:write-load2", "A:write-store", "A:res w",
        "B:write-load2",
    )
    tail = ("B:res w", "*:barrier", "B:inv r", "B:read-load")
    return SchedulerScript(
        "tnsr_p2", "P2", "tnsr", "T2", before,
        {1: ("B:write-skip",) + tail + ("B:res r 1",), 2: ("B:write-store",) + tail + ("B:res r 2",)},
    )


def _abd_p1() -> SchedulerScript:
    # Processes A, B, S3; the writer's quorums are {A, S3} then {A, B}.
    before = (
        "B:inv r", "B:read-query",
        "A:inv w 1", "A:write-query", *_abd_acks("query", "A", 1, "A S3"),
        "A:write-update (1,1,A)", *_abd_acks("update", "A", 1, "A S3"), "A:write-end", "A:res w",
        *_abd_acks("query", "B", 3, "A S3"),
        "A:inv w 2", "A:write-query", *_abd_acks("query", "A", 2, "A S3"),
        "A:write-update (2,2,A)", *_abd_acks("update", "A", 2, "A B"), "A:write-end", "A:res w",
        *_abd_acks("query", "B", 3, "B"),
    )

    def finish(pair: str, v: int):
        return (f"B:read-update {pair}", *_abd_acks("update", "B", 3, "A B"), "B:read-end", f"B:res r {v}")

    return SchedulerScript("abd_p1", "P1", "abd:3", "T1", before, {1: finish("(1,1,A)", 1), 2: finish("(2,2,A)", 2)})


def _abd_p2_prefix(extra_reader: bool) -> tuple[str, ...]:
    # B's write query is answered with the initial value before write(1) starts.
    early = "B C" if extra_reader else "B S3"
    fellow = "C" if extra_reader else "S3"
    steps = ["A:inv w 1", "B:inv w 2"]
    if extra_reader:
        steps.append("C:inv r")
    steps += ["B:write-query"]
    if extra_reader:
        steps += ["C:read-query", *_abd_acks("query", "C", 5, "C")]
    steps += _abd_acks("query", "B", 3, early)
    steps += [
        "A:write-query", *_abd_acks("query", "A", 1, f"A {fellow}"),
        "A:write-update (1,1,A)", *_abd_acks("update", "A", 1, f"A {fellow}"), "A:write-end", "A:res w",
        *_abd_acks("query", "B", 3, "A"),
    ]
    return tuple(steps)


def _abd_p2() -> SchedulerScript:
    def finish(t: int, v: int):
        return (
            f"B:write-update (2,{t},B)", *_abd_acks("update", "B", 3, "B S3"), "B:write-end", "B:res w",
            "*:barrier", "B:inv r", "B:read-query", *_abd_acks("query", "B", 4, "A S3"),
            f"B:read-update ({v},{1 if v == 1 else 2},{'A' if v == 1 else 'B'})",
            *_abd_acks("update", "B", 4, "A S3"), "B:read-end", f"B:res r {v}",
        )

    return SchedulerScript("abd_p2", "P2", "abd:3", "T2", _abd_p2_prefix(False), {1: finish(1, 1), 2: finish(2, 2)})


def _abd_p4() -> SchedulerScript:
    # C's query holds one initial reply, one short of a quorum, until B's update.
    def finish(t: int, v: int):
        pair = f"(2,{t},B)"
        return (
            f"B:write-update {pair}", *_abd_acks("update", "B", 3, "B"), *_abd_acks("query", "C", 5, "B"),
            f"C:read-update {pair}", *_abd_acks("update", "C", 5, "B C"), "C:read-end", "C:res r 2",
            *_abd_acks("update", "B", 3, "C"), "B:write-end", "B:res w",
            "*:barrier", "B:inv r", "B:read-query", *_abd_acks("query", "B", 4, "A C"),
            f"B:read-update ({v},{1 if v == 1 else 2},{'A' if v == 1 else 'B'})",
            *_abd_acks("update", "B", 4, "A C"), "B:read-end", f"B:res r {v}",
        )

    return SchedulerScript("abd_p4", "P4", "abd:3", "T4", _abd_p2_prefix(True), {1: finish(1, 1), 2: finish(2, 2)})


SCRIPTS = {"dlr_p1": _dlr_p1, "tnsr_p2": _tnsr_p2, "abd_p1": _abd_p1, "abd_p2": _abd_p2, "abd_p4": _abd_p4}


def scripted(name: str) -> SchedulerScript:
    if name not in SCRIPTS:
        raise InvalidParam(f"unknown script {name!r}; known: {', '.join(SCRIPTS)}")
    return SCRIPTS[name]()


# ---------------------------------------------------------------- results table

CELL_SCRIPTS = {("P1", "dlr"): "dlr_p1", ("P2", "tnsr"): "tnsr_p2", ("P1", "abd:3"): "abd_p1", ("P2", "abd:3"): "abd_p2"}


@dataclass
class Cell:
    program: str
    impl: str
    verdict: str
    witness: AttackWitness | None
    anti: AttackWitness | None
    states: int
    script: str | None = None

    def to_json(self) -> dict:
        return {
            "program": self.program,
            "impl": self.impl,
            "verdict": self.verdict,
            "states": self.states,
            "script": self.script,
            "anti_correlation": self.anti is not None,
            "witness": None if self.witness is None else self.witness.to_json(),
        }


@dataclass
class Table:
    programs: tuple[str, ...]
    impls: tuple[str, ...]
    cells: dict[tuple[str, str], Cell]

    def row(self, program: str) -> str:
        return "".join(self.cells[(program, impl)].verdict for impl in self.impls)

    def rows(self) -> dict[str, str]:
        return {p: self.row(p) for p in self.programs}

    def to_text(self) -> str:
        width = max(len(i) for i in self.impls) + 2
        lines = ["    " + "".join(i.upper().ljust(width) for i in self.impls)]
        for p in self.programs:
            lines.append(p.ljust(4) + "".join(self.cells[(p, i)].verdict.ljust(width) for i in self.impls))
        notes = [f"{p}/{i}: {c.script}" for (p, i), c in self.cells.items() if c.script]
        if notes:
            lines.append("adversaries: " + ", ".join(notes))
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {
            "columns": list(self.impls),
            "rows": {p: [self.cells[(p, i)].to_json() for i in self.impls] for p in self.programs},
            "matrix": self.rows(),
        }


def _cell(args) -> Cell:
    program, impl, values, cap = args
    prog = make_program(program, values)
    res = correlation_attack(prog, impl, cap=cap)
    verdict = FAIL if res.violated else PASS
    script = CELL_SCRIPTS.get((program, impl)) if res.violated else None
    return Cell(program, impl, verdict, res.witness, res.anti, res.states, script)


def run_table(
    bounds: HarnessBounds | None = None,
    impls: Sequence[str] = TABLE_IMPLS,
    programs: Sequence[str] = TABLE_PROGRAMS,
    workers: int | None = None,
) -> Table:
    """Attack every (program, implementation) cell; a cell fails iff some adversary forces a = b."""
    values = bounds.values if bounds is not None else (0, 1, 2)
    cap = bounds.node_cap if bounds is not None and bounds.node_cap is not None else DEFAULT_CAP
    for kind in impls:
        parse_kind(kind)
    jobs = [(p, i, tuple(values), cap) for p in programs for i in impls]
    workers = workers if workers is not None else int(os.environ.get("LINLAB_WORKERS", "1") or 1)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(job) for job in jobs]
    cells = {(c.program, c.impl): c for c in results}
    return Table(tuple(programs), tuple(impls), cells)
