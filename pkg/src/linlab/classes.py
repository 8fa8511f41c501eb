"""Linearizability classes over bounded execution trees.

A linearization map assigns a sequential history to every node of an
execution tree.  The four classes differ only in the constraint they put
on the sequences of a parent and its child.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

from .errors import BudgetExceeded, InvalidParam, NotDrExecution, NotWsrExecution, PreconditionFailed
from .lts import READ, WRITE, Execution, ExecutionTree, Inv, ObjInternal, Res, canonical_key
from .seqspec import (
    Operation,
    SeqHistory,
    brute_force_linearizations,
    completed_keys,
    format_seq,
    is_linearization,
    is_prefix,
    is_spec_reg,
    is_subsequence,
    obs_between,
    op_table,
    parse_history,
    spec_linearizations,
    writes_of,
)


class RelConstraint(Enum):
    ANY = "Any"
    PREFIX = "Prefix"
    WRITE_PREFIX = "WritePrefix"
    SUBSEQUENCE = "Subsequence"


class ClassId(Enum):
    LINEARIZABLE = "Linearizable"
    STRONG = "Strong"
    WRITE_STRONG = "WriteStrong"
    DECISIVE = "Decisive"

    @property
    def constraint(self) -> RelConstraint:
        return _CLASS_REL[self]

    @classmethod
    def parse(cls, text: str) -> "ClassId":
        norm = text.replace("-", "").replace("_", "").lower()
        for c in cls:
            if c.value.lower() == norm or c.name.replace("_", "").lower() == norm:
                return c
        raise InvalidParam(f"unknown class {text!r}")


_CLASS_REL = {
    ClassId.LINEARIZABLE: RelConstraint.ANY,
    ClassId.STRONG: RelConstraint.PREFIX,
    ClassId.WRITE_STRONG: RelConstraint.WRITE_PREFIX,
    ClassId.DECISIVE: RelConstraint.SUBSEQUENCE,
}

HIERARCHY = (ClassId.STRONG, ClassId.WRITE_STRONG, ClassId.DECISIVE, ClassId.LINEARIZABLE)


def related(rel: RelConstraint, before: SeqHistory, after: SeqHistory) -> bool:
    if rel is RelConstraint.ANY:
        return True
    if rel is RelConstraint.PREFIX:
        return is_prefix(before, after)
    if rel is RelConstraint.WRITE_PREFIX:
        return is_prefix(writes_of(before), writes_of(after))
    return is_subsequence(before, after)


# ---------------------------------------------------------------- maps


class LinMap:
    """Sequential history per tree node, indexed by node id."""

    def __init__(self, tree: ExecutionTree, seqs: Sequence[SeqHistory]):
        if len(seqs) != len(tree):
            raise InvalidParam("a linearization map needs one sequence per node")
        self.tree = tree
        self.seqs = list(seqs)

    def __getitem__(self, node: int) -> SeqHistory:
        return self.seqs[node]

    def __len__(self) -> int:
        return len(self.seqs)

    def to_json(self) -> dict:
        return {".".join(map(str, self.tree.path(n))) or "ε": format_seq(self.seqs[n]) for n in self.tree.nodes()}


def node_histories(tree: ExecutionTree) -> list[tuple]:
    hist: list[tuple] = [()] * len(tree)
    for node in tree.preorder():
        if node == 0:
            continue
        lab = tree.label[node]
        base = hist[tree.parent[node]]
        hist[node] = base + (lab,) if isinstance(lab, (Inv, Res)) else base
    return hist


def validate_mapping(tree: ExecutionTree, lmap: LinMap | Sequence[SeqHistory], cls: ClassId) -> bool:
    seqs = lmap.seqs if isinstance(lmap, LinMap) else list(lmap)
    if len(seqs) != len(tree) or tuple(seqs[0]) != ():
        return False
    rel = cls.constraint
    hist = node_histories(tree)
    for node in tree.nodes():
        s = seqs[node]
        if not is_spec_reg(s) or not is_linearization(hist[node], s):
            return False
        if node and not related(rel, seqs[tree.parent[node]], s):
            return False
    return True


@dataclass(frozen=True)
class Decision:
    cls: ClassId
    holds: bool
    witness: LinMap | None = None
    nodes: int = 0
    memo_entries: int = 0

    @property
    def verdict(self) -> str:
        return "Yes" if self.holds else "No"


def _signatures(tree: ExecutionTree, hist: list[tuple], by_state: bool) -> list:
    if not by_state:
        return list(tree.nodes())
    max_depth = tree.bounds.max_depth if tree.bounds is not None else None
    sigs = []
    for node in tree.nodes():
        depth = tree.depth[node]
        sigs.append((canonical_key(tree.state[node]), hist[node], None if max_depth is None else max_depth - depth))
    return sigs


def decide_class(
    tree: ExecutionTree,
    cls: ClassId,
    op_cap: int = 6,
    candidate_cap: int = 100_000,
    share_subtrees: bool | None = None,
) -> Decision:
    """Decide whether the tree admits a linearization map of the class.

    A node's feasibility for a given parent sequence depends only on its
    subtree, so results are memoized on (node, parent sequence).  When the
    tree was produced by enumerate_executions, nodes with equal state,
    history and remaining depth have equal subtrees and share entries.
    """
    rel = cls.constraint
    hist = node_histories(tree)
    if share_subtrees is None:
        share_subtrees = tree.bounds is not None and tree.lts is not None
    sigs = _signatures(tree, hist, share_subtrees)
    cand_cache: dict[tuple, list[SeqHistory]] = {}
    total = [0]

    def candidates(node: int) -> list[SeqHistory]:
        h = hist[node]
        got = cand_cache.get(h)
        if got is None:
            if len(op_table(h)) > op_cap:
                raise BudgetExceeded(f"node history has more than {op_cap} operations")
            got = spec_linearizations(h)
            total[0] += len(got)
            if total[0] > candidate_cap:
                raise BudgetExceeded(f"more than {candidate_cap} candidate sequences")
            cand_cache[h] = got
        return got

    memo: dict[tuple, SeqHistory | None] = {}
    children = tree.children

    def feasible(node: int, parent_seq: SeqHistory | None) -> SeqHistory | None:
        key = (sigs[node], parent_seq)
        if key in memo:
            return memo[key]
        found = None
        for s in candidates(node):
            if parent_seq is not None and not related(rel, parent_seq, s):
                continue
            if all(feasible(c, s) is not None for c in children[node]):
                found = s
                break
        memo[key] = found
        return found

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * max(tree.depth, default=0) + 1000))
    try:
        root = feasible(0, None)
    finally:
        sys.setrecursionlimit(limit)
    if root is None:
        return Decision(cls, False, None, len(tree), len(memo))
    seqs: list[SeqHistory] = [()] * len(tree)
    seqs[0] = root
    for node in tree.preorder():
        for c in children[node]:
            seqs[c] = memo[(sigs[c], seqs[node])]
    witness = LinMap(tree, seqs)
    if not validate_mapping(tree, witness, cls):
        raise AssertionError("decide_class produced an invalid witness")
    return Decision(cls, True, witness, len(tree), len(memo))


@dataclass(frozen=True)
class GraphDecision:
    """Decision over the quotient of an execution tree by (state, history, remaining depth).

    `assignment` maps each reachable (vertex, sequence) pair of the witness
    to the chosen child sequences; it is empty when the class is refuted.
    """

    cls: ClassId
    holds: bool
    vertices: int = 0
    memo_entries: int = 0
    witness_pairs: int = 0

    @property
    def verdict(self) -> str:
        return "Yes" if self.holds else "No"


def decide_class_lts(
    lts,
    bounds,
    cls: ClassId,
    op_cap: int = 6,
    candidate_cap: int = 100_000,
    vertex_cap: int | None = 2_000_000,
) -> GraphDecision:
    """Same verdict as decide_class(enumerate_executions(lts, bounds), cls) without building the tree.

    Tree nodes with equal state, history and remaining depth root equal
    subtrees, so the search runs on those vertices directly.  A positive
    verdict is re-validated edge by edge over the unfolded witness.
    """
    rel = cls.constraint
    max_depth = bounds.max_depth
    succ: dict[tuple, list[tuple]] = {}
    cand_cache: dict[tuple, list[SeqHistory]] = {}
    total = [0]

    def children(v: tuple) -> list[tuple]:
        got = succ.get(v)
        if got is None:
            state, hist, left = v
            got = []
            if left > 0:
                for lab, post in lts.enabled(state):
                    h2 = hist + (lab,) if isinstance(lab, (Inv, Res)) else hist
                    got.append((post, h2, left - 1))
            succ[v] = got
            if vertex_cap is not None and len(succ) > vertex_cap:
                raise BudgetExceeded(f"more than {vertex_cap} tree vertices")
        return got

    def candidates(h: tuple) -> list[SeqHistory]:
        got = cand_cache.get(h)
        if got is None:
            if len(op_table(h)) > op_cap:
                raise BudgetExceeded(f"node history has more than {op_cap} operations")
            got = spec_linearizations(h)
            total[0] += len(got)
            if total[0] > candidate_cap:
                raise BudgetExceeded(f"more than {candidate_cap} candidate sequences")
            cand_cache[h] = got
        return got

    memo: dict[tuple, SeqHistory | None] = {}

    def feasible(v: tuple, parent_seq: SeqHistory | None) -> SeqHistory | None:
        key = (v, parent_seq)
        if key in memo:
            return memo[key]
        found = None
        for s in candidates(v[1]):
            if parent_seq is not None and not related(rel, parent_seq, s):
                continue
            if all(feasible(c, s) is not None for c in children(v)):
                found = s
                break
        memo[key] = found
        return found

    root = (lts.initial, (), max_depth)
    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * max_depth + 1000))
    try:
        got = feasible(root, None)
    finally:
        sys.setrecursionlimit(limit)
    if got is None:
        return GraphDecision(cls, False, len(succ), len(memo))
    seen = {(root, got)}
    stack = [(root, got)]
    while stack:
        v, s = stack.pop()
        if not is_spec_reg(s) or not is_linearization(v[1], s):
            raise AssertionError("decide_class_lts produced an invalid witness")
        for c in children(v):
            s2 = memo[(c, s)]
            if not related(rel, s, s2):
                raise AssertionError("decide_class_lts produced an invalid witness")
            if (c, s2) not in seen:
                seen.add((c, s2))
                stack.append((c, s2))
    return GraphDecision(cls, True, len(succ), len(memo), len(seen))


def decide_class_naive(tree: ExecutionTree, cls: ClassId, values: Sequence[int]) -> bool:
    """Reference: try every assignment of brute-force linearizations to nodes."""
    hist = node_histories(tree)
    options = []
    for node in tree.nodes():
        opts = sorted(
            (s for s in brute_force_linearizations(hist[node], values) if is_spec_reg(s)),
            key=lambda s: (len(s), [str(o) for o in s]),
        )
        options.append(opts)
    order = list(tree.nodes())
    assign: list[SeqHistory | None] = [None] * len(tree)

    def rec(i: int) -> bool:
        if i == len(order):
            return validate_mapping(tree, assign, cls)
        for s in options[order[i]]:
            assign[order[i]] = s
            if rec(i + 1):
                return True
        return False

    return rec(0)


# ---------------------------------------------------------------- lazy linearizations


@dataclass(frozen=True)
class LazyFlags:
    decisive: bool
    response_activated: bool
    last_completed: bool
    pending_read_free: bool

    @property
    def all(self) -> bool:
        return self.decisive and self.response_activated and self.last_completed and self.pending_read_free

    def as_dict(self) -> dict:
        return {
            "decisive": self.decisive,
            "response_activated": self.response_activated,
            "last_completed": self.last_completed,
            "pending_read_free": self.pending_read_free,
        }


def lazy_flags(tree: ExecutionTree, lmap: LinMap) -> LazyFlags:
    hist = node_histories(tree)
    decisive = response_activated = last_completed = pending_read_free = True
    for node in tree.nodes():
        s = lmap[node]
        done = completed_keys(hist[node])
        if node:
            parent = lmap[tree.parent[node]]
            if not is_subsequence(parent, s):
                decisive = False
            if not isinstance(tree.label[node], Res) and s != parent:
                response_activated = False
            if s and s[-1].key not in done:
                last_completed = False
        if any(op.method == READ and op.key not in done for op in s):
            pending_read_free = False
    return LazyFlags(decisive, response_activated, last_completed, pending_read_free)


def check_lazy_read_window(tree: ExecutionTree, lmap: LinMap) -> bool:
    """Every linearized read returns a value observable between its invocation and now."""
    flags = lazy_flags(tree, lmap)
    if not (flags.decisive and flags.last_completed):
        raise PreconditionFailed("the map must be decisive and last-completed")
    before_inv: dict[int, dict] = {0: {}}
    for node in tree.preorder():
        if node:
            par = tree.parent[node]
            lab = tree.label[node]
            table = before_inv[par]
            if isinstance(lab, Inv):
                table = dict(table)
                table[(lab.tid, lab.opid)] = par
            before_inv[node] = table
        s = lmap[node]
        for op in s:
            if op.method != READ:
                continue
            anchor = before_inv[node].get(op.key)
            if anchor is None:
                return False
            if op.output not in obs_between(lmap[anchor], s):
                return False
    return True


def lazify(tree: ExecutionTree, lmap: LinMap) -> LinMap:
    """Lazy variant of a map: frozen between responses, pending reads and trailing pending ops dropped.

    Each node takes the sequence of its closest ancestor-or-self reached by a
    response (or the root), minus reads pending at that ancestor, and minus
    pending operations at its end.
    """
    hist = node_histories(tree)
    anchor = [0] * len(tree)
    seqs: list[SeqHistory] = [()] * len(tree)
    for node in tree.preorder():
        if node == 0 or isinstance(tree.label[node], Res):
            anchor[node] = node
            done = completed_keys(hist[node])
            s = [op for op in lmap[node] if op.method == WRITE or op.key in done]
            while s and s[-1].key not in done:
                s.pop()
            seqs[node] = tuple(s)
        else:
            anchor[node] = anchor[tree.parent[node]]
            seqs[node] = seqs[anchor[node]]
    return LinMap(tree, seqs)


# ---------------------------------------------------------------- canonical maps


_WSR_RULES = {"read-init", "read-loop", "read-pick", "write-int"}
_DR_RULES = {"read-init", "read-loop", "read-pick", "write-init", "write-top", "write-roll-back", "write-roll-forward"}


def wsr_lin(e: Execution) -> SeqHistory:
    """Writes placed at their store, reads at the load of the value they pick."""
    current: dict[str, Operation] = {}
    loads: dict[str, dict[int, int]] = {}
    points: list[tuple[int, Operation]] = []
    for pos, (pre, lab, post) in enumerate(e.transitions):
        if not isinstance(pre, tuple) or len(pre) != 5:
            raise NotWsrExecution(f"step {pos} does not start in a write-snapshot register state")
        x = pre[0]
        if isinstance(lab, Inv):
            current[lab.tid] = Operation(lab.tid, lab.opid, lab.method, lab.value, None)
        elif isinstance(lab, Res):
            continue
        elif isinstance(lab, ObjInternal) and lab.rule in _WSR_RULES:
            op = current.get(lab.tid)
            if op is None:
                raise NotWsrExecution(f"step {pos} acts for a thread with no open operation")
            if lab.rule == "read-init":
                loads[lab.tid] = {x: pos}
            elif lab.rule == "read-loop":
                loads[lab.tid].setdefault(x, pos)
            elif lab.rule == "read-pick":
                anchor = loads.get(lab.tid, {}).get(lab.arg)
                if anchor is None:
                    raise NotWsrExecution(f"step {pos} picks a value that was never loaded")
                points.append((anchor, Operation(op.tid, op.opid, READ, None, lab.arg)))
            else:
                points.append((pos, op))
        else:
            raise NotWsrExecution(f"step {pos} has label {lab} outside the register's rules")
    points.sort(key=lambda p: p[0])
    return tuple(op for _, op in points)


def dr_lin(e: Execution) -> SeqHistory:
    """Operations ordered by version, ties broken by the anchoring step's position."""
    current: dict[str, Operation] = {}
    loads: dict[str, dict[int, tuple[int, int]]] = {}
    points: list[tuple[int, int, Operation]] = []
    for pos, (pre, lab, post) in enumerate(e.transitions):
        if not isinstance(pre, tuple) or len(pre) != 8:
            raise NotDrExecution(f"step {pos} does not start in a rollback register state")
        x, ver = pre[0], pre[1]
        if isinstance(lab, Inv):
            current[lab.tid] = Operation(lab.tid, lab.opid, lab.method, lab.value, None)
        elif isinstance(lab, Res):
            continue
        elif isinstance(lab, ObjInternal) and lab.rule in _DR_RULES:
            op = current.get(lab.tid)
            if op is None:
                raise NotDrExecution(f"step {pos} acts for a thread with no open operation")
            if lab.rule == "read-init":
                loads[lab.tid] = {x: (ver, pos)}
            elif lab.rule == "read-loop":
                loads[lab.tid].setdefault(x, (ver, pos))
            elif lab.rule == "read-pick":
                anchor = loads.get(lab.tid, {}).get(lab.arg)
                if anchor is None:
                    raise NotDrExecution(f"step {pos} picks a value that was never loaded")
                points.append((anchor[0], anchor[1], Operation(op.tid, op.opid, READ, None, lab.arg)))
            elif lab.rule in ("write-top", "write-roll-back"):
                points.append((post[1], pos, op))
        else:
            raise NotDrExecution(f"step {pos} has label {lab} outside the register's rules")
    points.sort(key=lambda p: (p[0], p[1]))
    return tuple(op for _, _, op in points)


def map_tree(tree: ExecutionTree, lin: Callable[[Execution], SeqHistory]) -> LinMap:
    return LinMap(tree, [lin(tree.execution(node)) for node in tree.nodes()])


# ---------------------------------------------------------------- fixtures


class _FixtureLts:
    name = "fixture"
    initial = ()
    threads: tuple[str, ...] = ()


def tree_from_branches(prefix: str, branches: Iterable[str]) -> ExecutionTree:
    """Tree whose shared history `prefix` forks into one branch per history suffix.

    Each branch starts with a distinct internal step so that branches with a
    common history prefix still come from different executions of one node.
    """
    tree = ExecutionTree(_FixtureLts())
    node = 0
    labels = parse_history(prefix)
    for lab in labels:
        node = tree.add(node, lab, tree.path_labels(node) + (lab,))
    fork = node
    for b, suffix in enumerate(branches, start=1):
        full = parse_history(prefix + ("; " if prefix.strip() and suffix.strip() else "") + suffix)
        tail = full[len(labels):]
        lab = ObjInternal("*", "branch", b)
        node = tree.add(fork, lab, tree.path_labels(fork) + (lab,))
        for lab in tail:
            node = tree.add(node, lab, tree.path_labels(node) + (lab,))
    return tree


FIXTURES = {
    "ex41": (
        "A:inv w 1; B:inv r; A:res w; A:inv w 2; A:res w",
        ("B:res r 1", "B:res r 2"),
    ),
    "ex42": (
        "B:inv w 2; A:inv w 1; A:res w",
        ("B:res w; B:inv r; B:res r 2", "B:res w; B:inv r; B:res r 1"),
    ),
    "ex62": (
        "B:inv w 2; A:inv w 1; B:res w; A:res w",
        ("A:inv r; A:res r 1", "A:inv r; A:res r 2"),
    ),
}


def fixture(name: str) -> ExecutionTree:
    if name not in FIXTURES:
        raise InvalidParam(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    prefix, branches = FIXTURES[name]
    return tree_from_branches(prefix, branches)
