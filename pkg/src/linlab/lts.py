"""Labeled transition systems: labels, harness bounds, executions and trees."""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field, fields, is_dataclass
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

from .errors import AlphabetClash, BudgetExceeded, InvalidParam

READ = "read"
WRITE = "write"
METHODS = (READ, WRITE)
SHORT = {READ: "r", WRITE: "w"}


# ---------------------------------------------------------------- labels


@dataclass(frozen=True, slots=True)
class Inv:
    """Invocation of `method` with `value` (None for reads) by thread `tid`."""

    method: str
    value: int | None
    tid: str
    opid: int

    def __str__(self) -> str:
        arg = "" if self.value is None else f" {self.value}"
        return f"{self.tid}:inv {SHORT[self.method]}{arg} #{self.opid}"


@dataclass(frozen=True, slots=True)
class Res:
    """Response of `method` with `value` (None for writes) to thread `tid`."""

    method: str
    value: int | None
    tid: str
    opid: int

    def __str__(self) -> str:
        arg = "" if self.value is None else f" {self.value}"
        return f"{self.tid}:res {SHORT[self.method]}{arg} #{self.opid}"


@dataclass(frozen=True, slots=True)
class ObjInternal:
    """Object-internal step of thread `tid`.

    `rule` names the transition rule and `arg` carries the value chosen by
    that rule, so every label is unique among the steps enabled in a state.
    """

    tid: str
    rule: str = ""
    arg: Any = None

    def __str__(self) -> str:
        arg = "" if self.arg is None else f" {format_arg(self.arg)}"
        return f"{self.tid}:{self.rule}{arg}"


@dataclass(frozen=True, slots=True)
class ProgInternal:
    """Program-internal step such as a coin toss or a barrier."""

    tag: str
    tid: str

    def __str__(self) -> str:
        return f"{self.tid}:{self.tag}"


Label = Inv | Res | ObjInternal | ProgInternal


def format_arg(arg: Any) -> str:
    if isinstance(arg, tuple):
        return "(" + ",".join(format_arg(a) for a in arg) + ")"
    if arg is None:
        return "_"
    return str(arg)


def is_external(label: Label) -> bool:
    return isinstance(label, (Inv, Res))


def label_text(label: Label) -> str:
    return str(label)


# ---------------------------------------------------------------- bounds


Call = tuple[str, int | None]


def _parse_call(text: str) -> Call:
    text = text.strip()
    if text in ("r", "read"):
        return (READ, None)
    if text.startswith("w"):
        body = text[5:] if text.startswith("write") else text[1:]
        body = body.strip("() ")
        try:
            return (WRITE, int(body))
        except ValueError:
            pass
    raise InvalidParam(f"unknown call {text!r}; expected r or w<value>")


@dataclass(frozen=True)
class HarnessBounds:
    """Finite harness that closes an object implementation.

    `menu` restricts what each listed thread may call; threads absent from
    the menu may call read and write of every value.  `ops` may be a single
    count or a per-thread mapping.  Action ids default to a globally
    increasing pool: thread i gets ids i*m+1 .. i*m+m where m is the largest
    per-thread op count.
    """

    threads: tuple[str, ...] = ("A", "B")
    ops: int | Mapping[str, int] = 1
    values: tuple[int, ...] = (0, 1, 2)
    id_pool: Mapping[str, Sequence[int]] | None = None
    max_depth: int = 64
    node_cap: int | None = None
    menu: Mapping[str, Iterable[Call | str]] | None = None
    ops_per_thread: tuple[tuple[str, int], ...] = field(init=False, repr=False)
    pool: tuple[tuple[str, tuple[int, ...]], ...] = field(init=False, repr=False)
    calls: tuple[tuple[str, tuple[Call, ...]], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        threads = tuple(self.threads)
        if not threads or len(set(threads)) != len(threads):
            raise InvalidParam("threads must be a nonempty list of distinct ids")
        if self.max_depth < 0:
            raise InvalidParam("max_depth must be >= 0")
        if not self.values:
            raise InvalidParam("values must be nonempty")
        if isinstance(self.ops, Mapping):
            per = {t: int(self.ops.get(t, 0)) for t in threads}
        else:
            per = {t: int(self.ops) for t in threads}
        if any(n < 0 for n in per.values()):
            raise InvalidParam("operation counts must be >= 0")
        width = max(per.values(), default=0)
        if self.id_pool is None:
            pool = {t: tuple(i * width + j + 1 for j in range(width)) for i, t in enumerate(threads)}
        else:
            pool = {t: tuple(self.id_pool.get(t, ())) for t in threads}
        for t in threads:
            if len(pool[t]) < per[t]:
                raise InvalidParam(f"id pool of {t} is shorter than its operation count")
        calls = {}
        for t in threads:
            raw = None if self.menu is None else self.menu.get(t)
            if raw is None:
                options = [(READ, None)] + [(WRITE, v) for v in sorted(self.values)]
            else:
                if isinstance(raw, str):
                    raw = raw.split()
                options = [c if isinstance(c, tuple) else _parse_call(c) for c in raw]
            calls[t] = tuple(options)
        object.__setattr__(self, "threads", threads)
        object.__setattr__(self, "values", tuple(sorted(self.values)))
        object.__setattr__(self, "ops_per_thread", tuple(per.items()))
        object.__setattr__(self, "pool", tuple(pool.items()))
        object.__setattr__(self, "calls", tuple(calls.items()))
        if isinstance(self.ops, Mapping):
            object.__setattr__(self, "ops", tuple(sorted(per.items())))
        if self.id_pool is not None:
            object.__setattr__(self, "id_pool", tuple(pool.items()))
        if self.menu is not None:
            object.__setattr__(self, "menu", tuple(calls.items()))

    def ops_of(self, tid: str) -> int:
        return dict(self.ops_per_thread)[tid]

    def ids_of(self, tid: str) -> tuple[int, ...]:
        return dict(self.pool)[tid]

    def calls_of(self, tid: str) -> tuple[Call, ...]:
        return dict(self.calls)[tid]

    def replace(self, **changes: Any) -> "HarnessBounds":
        base = {
            "threads": self.threads,
            "ops": dict(self.ops_per_thread),
            "values": self.values,
            "id_pool": None if self.id_pool is None else dict(self.pool),
            "max_depth": self.max_depth,
            "node_cap": self.node_cap,
            "menu": None if self.menu is None else dict(self.calls),
        }
        base.update(changes)
        return HarnessBounds(**base)

    def describe(self) -> dict:
        return {
            "threads": list(self.threads),
            "ops": dict(self.ops_per_thread),
            "values": list(self.values),
            "ids": {t: list(ids) for t, ids in self.pool},
            "max_depth": self.max_depth,
            "node_cap": self.node_cap,
            "calls": {t: [SHORT[m] + ("" if v is None else str(v)) for m, v in cs] for t, cs in self.calls},
        }


class Harness:
    """Precomputed per-thread invocation menus for an object LTS."""

    def __init__(self, bounds: HarnessBounds, threads: Sequence[str] | None = None):
        self.bounds = bounds
        self.threads = tuple(bounds.threads if threads is None else threads)
        known = set(bounds.threads)
        self._ids = {t: bounds.ids_of(t)[: bounds.ops_of(t)] if t in known else () for t in self.threads}
        self._calls = {t: bounds.calls_of(t) if t in known else () for t in self.threads}

    def invocations(self, tid: str, used: int) -> list[tuple[str, int | None, int]]:
        """(method, input, opid) triples a thread may invoke after `used` ops."""
        ids = self._ids[tid]
        if used >= len(ids):
            return []
        opid = ids[used]
        return [(m, v, opid) for m, v in self._calls[tid]]


# ---------------------------------------------------------------- LTS


class Lts:
    """Base class for a labeled transition system.

    Subclasses set `initial`, `threads`, `internal_tags` and implement
    `enabled(state)`, returning an ordered list of (label, post-state).
    """

    name: str = "lts"
    initial: Hashable = None
    threads: tuple[str, ...] = ()
    internal_tags: frozenset[str] = frozenset()
    internal_kind: str = "obj"

    def enabled(self, state: Hashable) -> list[tuple[Label, Hashable]]:
        raise NotImplementedError

    @property
    def alphabet(self) -> dict:
        return {"internal_kind": self.internal_kind, "internal_tags": sorted(self.internal_tags)}

    def describe_state(self, state: Hashable) -> Any:
        return state

    def step(self, state: Hashable, label: Label) -> Hashable | None:
        for lab, post in self.enabled(state):
            if lab == label:
                return post
        return None

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Composite(Lts):
    """Interface parallel composition synchronizing on invocations and responses."""

    internal_kind = "both"

    def __init__(self, left: Lts, right: Lts):
        shared = left.internal_tags & right.internal_tags
        if shared:
            raise AlphabetClash(f"internal tags shared by both components: {sorted(shared)}")
        self.left = left
        self.right = right
        self.name = f"{left.name}||{right.name}"
        self.initial = (left.initial, right.initial)
        self.threads = tuple(dict.fromkeys(left.threads + right.threads))
        self.internal_tags = left.internal_tags | right.internal_tags

    def enabled(self, state):
        lstate, rstate = state
        rmoves = self.right.enabled(rstate)
        rext: dict = {}
        for lab, post in rmoves:
            if isinstance(lab, (Inv, Res)):
                rext.setdefault(lab, []).append(post)
        out = []
        for lab, lpost in self.left.enabled(lstate):
            if isinstance(lab, (Inv, Res)):
                for rpost in rext.get(lab, ()):
                    out.append((lab, (lpost, rpost)))
            else:
                out.append((lab, (lpost, rstate)))
        for lab, rpost in rmoves:
            if not isinstance(lab, (Inv, Res)):
                out.append((lab, (lstate, rpost)))
        return out

    def describe_state(self, state):
        return {"program": self.left.describe_state(state[0]), "object": self.right.describe_state(state[1])}


def compose(program: Lts, impl: Lts) -> Lts:
    return Composite(program, impl)


class Ghost(Lts):
    """States pair an original state with the execution performed so far."""

    def __init__(self, inner: Lts):
        self.inner = inner
        self.name = f"ghost({inner.name})"
        self.initial = (inner.initial, ())
        self.threads = inner.threads
        self.internal_tags = inner.internal_tags
        self.internal_kind = inner.internal_kind

    def enabled(self, state):
        inner_state, past = state
        return [
            (lab, (post, past + ((inner_state, lab, post),)))
            for lab, post in self.inner.enabled(inner_state)
        ]

    def describe_state(self, state):
        return {"state": self.inner.describe_state(state[0]), "execution": [str(t[1]) for t in state[1]]}


def ghost(impl: Lts) -> Lts:
    return Ghost(impl)


# ---------------------------------------------------------------- executions


Transition = tuple[Hashable, Label, Hashable]


@dataclass(frozen=True)
class Execution:
    """A finite execution as a chain of (pre, label, post) transitions."""

    initial: Hashable
    transitions: tuple[Transition, ...] = ()

    @property
    def labels(self) -> tuple[Label, ...]:
        return tuple(t[1] for t in self.transitions)

    @property
    def last(self) -> Hashable:
        return self.transitions[-1][2] if self.transitions else self.initial

    def __len__(self) -> int:
        return len(self.transitions)

    def extend(self, label: Label, post: Hashable) -> "Execution":
        return Execution(self.initial, self.transitions + ((self.last, label, post),))

    def prefix(self, n: int) -> "Execution":
        return Execution(self.initial, self.transitions[:n])

    def is_chained(self, lts: Lts | None = None) -> bool:
        state = self.initial
        if lts is not None and state != lts.initial:
            return False
        for pre, lab, post in self.transitions:
            if pre != state:
                return False
            if lts is not None and (lab, post) not in lts.enabled(pre):
                return False
            state = post
        return True


def replay(lts: Lts, labels: Iterable[Label]) -> Execution:
    """Execute a label sequence from the initial state; labels must be enabled."""
    e = Execution(lts.initial)
    for lab in labels:
        post = lts.step(e.last, lab)
        if post is None:
            raise ValueError(f"label {lab} not enabled after {len(e)} steps")
        e = e.extend(lab, post)
    return e


def history_of(e: Execution | Iterable[Label]) -> tuple[Label, ...]:
    labels = e.labels if isinstance(e, Execution) else e
    return tuple(lab for lab in labels if isinstance(lab, (Inv, Res)))


def is_well_formed(history: Iterable[Label]) -> bool:
    """Per-thread alternation of invocations and matching responses, unique ids."""
    open_ops: dict[str, Inv] = {}
    seen: set[tuple[str, int]] = set()
    for lab in history:
        if isinstance(lab, Inv):
            if lab.tid in open_ops or (lab.tid, lab.opid) in seen:
                return False
            if (lab.method == READ) != (lab.value is None):
                return False
            open_ops[lab.tid] = lab
            seen.add((lab.tid, lab.opid))
        elif isinstance(lab, Res):
            inv = open_ops.pop(lab.tid, None)
            if inv is None or inv.opid != lab.opid or inv.method != lab.method:
                return False
            if (lab.method == WRITE) != (lab.value is None):
                return False
    return True


def restrict(labels: Iterable[Label], keep: Callable[[Label], bool]) -> tuple[Label, ...]:
    return tuple(lab for lab in labels if keep(lab))


# ---------------------------------------------------------------- canonical keys


def _encode(obj: Any, out: list[str]) -> None:
    if obj is None:
        out.append("N")
    elif obj is True or obj is False:
        out.append("T" if obj else "F")
    elif isinstance(obj, int):
        out.append(f"i{obj};")
    elif isinstance(obj, str):
        out.append(f"s{len(obj)}:{obj}")
    elif isinstance(obj, tuple):
        out.append("(")
        for item in obj:
            _encode(item, out)
        out.append(")")
    elif isinstance(obj, (frozenset, set)):
        parts = sorted(canonical_key(item) for item in obj)
        out.append("{")
        out.extend(p.decode() for p in parts)
        out.append("}")
    elif isinstance(obj, (Inv, Res, ObjInternal, ProgInternal)):
        out.append(type(obj).__name__)
        _encode(tuple(getattr(obj, f) for f in obj.__slots__), out)
    elif isinstance(obj, Execution):
        _encode((obj.initial, obj.transitions), out)
    elif is_dataclass(obj) and not isinstance(obj, type):
        out.append(type(obj).__name__)
        _encode(tuple(getattr(obj, f.name) for f in fields(obj)), out)
    else:
        raise TypeError(f"cannot canonically encode {type(obj).__name__}")


def canonical_key(obj: Any) -> bytes:
    """Deterministic byte encoding of a state or label."""
    out: list[str] = []
    _encode(obj, out)
    return "".join(out).encode()


def short_key(obj: Any) -> str:
    return hashlib.blake2b(canonical_key(obj), digest_size=6).hexdigest()


# ---------------------------------------------------------------- execution trees


class ExecutionTree:
    """Prefix-closed tree of executions; node 0 is the empty execution."""

    def __init__(self, lts: Lts, bounds: HarnessBounds | None = None):
        self.lts = lts
        self.bounds = bounds
        self.parent: list[int] = [-1]
        self.label: list[Label | None] = [None]
        self.state: list[Hashable] = [lts.initial]
        self.depth: list[int] = [0]
        self.children: list[list[int]] = [[]]

    def add(self, parent: int, label: Label, state: Hashable) -> int:
        idx = len(self.parent)
        self.parent.append(parent)
        self.label.append(label)
        self.state.append(state)
        self.depth.append(self.depth[parent] + 1)
        self.children.append([])
        self.children[parent].append(idx)
        return idx

    def __len__(self) -> int:
        return len(self.parent)

    def nodes(self) -> range:
        return range(len(self.parent))

    def path_labels(self, node: int) -> tuple[Label, ...]:
        out = []
        while node > 0:
            out.append(self.label[node])
            node = self.parent[node]
        return tuple(reversed(out))

    def path_nodes(self, node: int) -> list[int]:
        out = []
        while node >= 0:
            out.append(node)
            node = self.parent[node]
        return list(reversed(out))

    def path(self, node: int) -> tuple[int, ...]:
        """Child-index address of a node, used as its serialization key."""
        out = []
        while node > 0:
            par = self.parent[node]
            out.append(self.children[par].index(node))
            node = par
        return tuple(reversed(out))

    def execution(self, node: int) -> Execution:
        nodes = self.path_nodes(node)
        trans = tuple(
            (self.state[self.parent[n]], self.label[n], self.state[n]) for n in nodes[1:]
        )
        return Execution(self.state[0], trans)

    def history(self, node: int) -> tuple[Label, ...]:
        return history_of(self.path_labels(node))

    def leaves(self) -> Iterator[int]:
        return (n for n in self.nodes() if not self.children[n])

    def preorder(self) -> Iterator[int]:
        stack = [0]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(self.children[node]))


def enumerate_executions(lts: Lts, bounds: HarnessBounds) -> ExecutionTree:
    """All executions of `lts` up to `bounds.max_depth`, children in enabled order.

    The harness bounds on threads, operations and ids are enforced by the LTS
    itself; this walk applies the depth bound and the optional node cap.
    Node ids follow preorder.
    """
    tree = ExecutionTree(lts, bounds)
    cap = bounds.node_cap
    max_depth = bounds.max_depth
    stack: list[tuple[int, Label, Hashable]] = []
    if max_depth > 0:
        stack.extend((0, lab, post) for lab, post in reversed(lts.enabled(lts.initial)))
    while stack:
        parent, lab, post = stack.pop()
        node = tree.add(parent, lab, post)
        if cap is not None and len(tree) > cap:
            raise BudgetExceeded(f"execution tree exceeds node cap {cap}")
        if tree.depth[node] < max_depth:
            stack.extend((node, l2, p2) for l2, p2 in reversed(lts.enabled(post)))
    return tree


def reachable(lts: Lts, cap: int | None = None, stop: Callable[[Hashable], bool] | None = None):
    """Breadth-first reachable state graph.

    Returns (order, edges) where `order` lists states in discovery order and
    `edges[state]` is the enabled list.  States for which `stop` holds are not
    expanded.
    """
    edges: dict[Hashable, list[tuple[Label, Hashable]]] = {}
    order = [lts.initial]
    seen = {lts.initial}
    i = 0
    while i < len(order):
        state = order[i]
        i += 1
        if stop is not None and stop(state):
            edges[state] = []
            continue
        moves = lts.enabled(state)
        edges[state] = moves
        for _, post in moves:
            if post not in seen:
                seen.add(post)
                order.append(post)
                if cap is not None and len(order) > cap:
                    raise BudgetExceeded(f"state space exceeds cap {cap}")
    return order, edges
