"""Sequential register specification, operations, real-time order and linearizations."""

from __future__ import annotations

import re
from dataclasses import dataclass
from itertools import combinations, permutations, product
from typing import Iterable, Iterator, Sequence

from .errors import NotSubsequence, ParseError
from .lts import READ, SHORT, WRITE, Inv, Label, Res


@dataclass(frozen=True, slots=True, order=True)
class Operation:
    """A matched invocation/response pair; `output` is None for writes and pending reads."""

    tid: str
    opid: int
    method: str
    input: int | None = None
    output: int | None = None

    @property
    def key(self) -> tuple[str, int]:
        return (self.tid, self.opid)

    @property
    def is_write(self) -> bool:
        return self.method == WRITE

    @property
    def is_read(self) -> bool:
        return self.method == READ

    def __str__(self) -> str:
        if self.method == WRITE:
            return f"{self.tid}:w{self.input}#{self.opid}"
        out = "?" if self.output is None else self.output
        return f"{self.tid}:r={out}#{self.opid}"


SeqHistory = tuple[Operation, ...]


@dataclass(frozen=True, slots=True)
class OpInfo:
    """An operation of a history with the positions of its actions."""

    method: str
    input: int | None
    output: int | None
    tid: str
    opid: int
    inv_pos: int
    res_pos: int | None

    @property
    def key(self) -> tuple[str, int]:
        return (self.tid, self.opid)

    @property
    def completed(self) -> bool:
        return self.res_pos is not None

    def operation(self, output: int | None = None) -> Operation:
        out = self.output if self.completed else output
        return Operation(self.tid, self.opid, self.method, self.input, out if self.method == READ else None)


def op_table(history: Sequence[Label]) -> dict[tuple[str, int], OpInfo]:
    """Operations of a well-formed history keyed by (tid, opid), in invocation order."""
    table: dict[tuple[str, int], OpInfo] = {}
    for pos, lab in enumerate(history):
        if isinstance(lab, Inv):
            table[(lab.tid, lab.opid)] = OpInfo(lab.method, lab.value, None, lab.tid, lab.opid, pos, None)
        elif isinstance(lab, Res):
            info = table[(lab.tid, lab.opid)]
            table[info.key] = OpInfo(info.method, info.input, lab.value, info.tid, info.opid, info.inv_pos, pos)
    return table


def operations(history: Sequence[Label]) -> list[Operation]:
    return [info.operation() for info in op_table(history).values()]


def completed_keys(history: Sequence[Label]) -> set[tuple[str, int]]:
    return {k for k, info in op_table(history).items() if info.completed}


# ---------------------------------------------------------------- specification


def is_spec_reg(s: Iterable[Operation]) -> bool:
    current = 0
    for op in s:
        if op.method == WRITE:
            current = op.input
        elif op.output != current:
            return False
    return True


def spec_outputs(s: Iterable[Operation]) -> SeqHistory:
    """Fill every read's output with the value the specification forces."""
    current = 0
    out = []
    for op in s:
        if op.method == WRITE:
            current = op.input
            out.append(op)
        else:
            out.append(Operation(op.tid, op.opid, op.method, op.input, current))
    return tuple(out)


def obs(s: Iterable[Operation]) -> int:
    value = 0
    for op in s:
        if op.method == WRITE:
            value = op.input
    return value


def is_subsequence(short: Sequence, long: Sequence) -> bool:
    it = iter(long)
    return all(any(x == y for y in it) for x in short)


def is_prefix(short: Sequence, long: Sequence) -> bool:
    return len(short) <= len(long) and tuple(long[: len(short)]) == tuple(short)


def writes_of(s: Iterable[Operation]) -> SeqHistory:
    return tuple(op for op in s if op.method == WRITE)


def obs_between(s1: Sequence[Operation], s2: Sequence[Operation]) -> set[int]:
    """obs(s1) together with inputs of writes of s2 placed after every write of s1."""
    if not is_subsequence(s1, s2):
        raise NotSubsequence("first sequence is not a subsequence of the second")
    out = {obs(s1)}
    earlier = {op.key for op in s1 if op.method == WRITE}
    last = -1
    for i, op in enumerate(s2):
        if op.key in earlier:
            last = i
    for op in s2[last + 1 :]:
        if op.method == WRITE:
            out.add(op.input)
    return out


# ---------------------------------------------------------------- real time


def real_time_lt(history: Sequence[Label]) -> set[tuple[Operation, Operation]]:
    infos = list(op_table(history).values())
    pairs = set()
    for a in infos:
        if a.res_pos is None:
            continue
        for b in infos:
            if a.res_pos < b.inv_pos:
                pairs.add((a.operation(), b.operation()))
    return pairs


def is_linearization(history: Sequence[Label], s: Sequence[Operation]) -> bool:
    """Does some completion of `history` have exactly the operations and order constraints of `s`?"""
    table = op_table(history)
    position: dict[tuple[str, int], int] = {}
    for i, op in enumerate(s):
        info = table.get(op.key)
        if info is None or op.key in position:
            return False
        if op.method != info.method or op.input != info.input:
            return False
        if op.method == WRITE:
            if op.output is not None:
                return False
        elif info.completed:
            if op.output != info.output:
                return False
        elif op.output is None:
            return False
        position[op.key] = i
    for key, info in table.items():
        if info.completed and key not in position:
            return False
    # Per-thread order: the thread's ops in s appear in invocation order.
    last_pos: dict[str, tuple[int, int]] = {}
    for key in sorted(position, key=lambda k: table[k].inv_pos):
        tid = key[0]
        if tid in last_pos and last_pos[tid][1] > position[key]:
            return False
        last_pos[tid] = (table[key].inv_pos, position[key])
    # Real-time order among the included operations.
    included = [table[k] for k in position]
    for a in included:
        if a.res_pos is None:
            continue
        for b in included:
            if a.res_pos < b.inv_pos and position[a.key] > position[b.key]:
                return False
    return True


def _linear_extensions(items: list, before: dict) -> Iterator[tuple]:
    """All orders of `items` where before[x] lists items that must precede x."""
    n = len(items)
    placed: list = []
    used = set()

    def rec():
        if len(placed) == n:
            yield tuple(placed)
            return
        for x in items:
            if x in used or any(y not in used for y in before[x]):
                continue
            used.add(x)
            placed.append(x)
            yield from rec()
            placed.pop()
            used.discard(x)

    yield from rec()


def spec_linearizations(history: Sequence[Label]) -> list[SeqHistory]:
    """Every s in Spec_Reg with is_linearization(history, s), shortest first then lexicographic."""
    table = op_table(history)
    infos = list(table.values())
    mandatory = [i for i in infos if i.completed]
    optional = [i for i in infos if not i.completed]
    out: list[SeqHistory] = []
    for r in range(len(optional) + 1):
        for extra in combinations(optional, r):
            chosen = mandatory + list(extra)
            keys = [i.key for i in chosen]
            before = {
                a.key: [b.key for b in chosen if b.res_pos is not None and b.res_pos < a.inv_pos]
                for a in chosen
            }
            for order in _linear_extensions(sorted(keys), before):
                seq = spec_outputs(table[k].operation(0) for k in order)
                ok = True
                for op in seq:
                    info = table[op.key]
                    if info.completed and info.method == READ and op.output != info.output:
                        ok = False
                        break
                if ok:
                    out.append(seq)
    out.sort(key=seq_sort_key)
    return out


def seq_sort_key(s: Sequence[Operation]) -> tuple:
    return (len(s), tuple((op.tid, op.opid, op.output if op.output is not None else -1) for op in s))


def brute_force_linearizations(history: Sequence[Label], values: Sequence[int]) -> set[SeqHistory]:
    """Reference oracle: complete pending ops every way, then try every total order.

    A candidate order is kept when it contains the completed history's
    operations, keeps each thread's operations in program order, and extends
    the real-time order of the completed history.
    """
    ops = []  # (key, method, input, output_or_None, inv, res)
    open_: dict[str, int] = {}
    for pos, lab in enumerate(history):
        if isinstance(lab, Inv):
            open_[lab.tid] = len(ops)
            ops.append([(lab.tid, lab.opid), lab.method, lab.value, None, pos, None])
        elif isinstance(lab, Res):
            idx = open_.pop(lab.tid)
            ops[idx][3] = lab.value
            ops[idx][5] = pos
    pending = [o for o in ops if o[5] is None]
    done = [o for o in ops if o[5] is not None]
    end = len(history)
    results: set[SeqHistory] = set()
    for mask in product((False, True), repeat=len(pending)):
        chosen_pending = [o for o, keep in zip(pending, mask) if keep]
        output_spaces = [values if o[1] == READ else [None] for o in chosen_pending]
        for outs in product(*output_spaces):
            completed = [list(o) for o in done]
            for o, v in zip(chosen_pending, outs):
                c = list(o)
                c[3] = v
                c[5] = end
                completed.append(c)
            for perm in permutations(range(len(completed))):
                seq = [completed[i] for i in perm]
                rank = {tuple(o[0]): j for j, o in enumerate(seq)}
                good = True
                for a in completed:
                    for b in completed:
                        if a[5] < b[4] and rank[a[0]] > rank[b[0]]:
                            good = False
                        if a[0][0] == b[0][0] and a[4] < b[4] and rank[a[0]] > rank[b[0]]:
                            good = False
                if good:
                    results.add(tuple(Operation(o[0][0], o[0][1], o[1], o[2], o[3]) for o in seq))
    return results


# ---------------------------------------------------------------- text notation


_HIST_ITEM = re.compile(r"\s*([A-Za-z_][\w]*)\s*:\s*(inv|res)\s+(r|w|read|write)\s*(-?\d+)?\s*(?:#\s*(\d+))?\s*")
_SEQ_ITEM = re.compile(r"\s*(?:([A-Za-z_][\w]*)\s*:)?\s*(?:(w)\s*(-?\d+)|(r)\s*(?:=\s*(-?\d+))?)\s*(?:#\s*(\d+))?\s*")


def _token_start(chunk: str, pos: int) -> int:
    return pos + len(chunk) - len(chunk.lstrip())


def parse_history(text: str) -> tuple[Label, ...]:
    """Parse `A:inv w 1; A:res w; B:inv r; B:res r 2` (optional `#opid` per item).

    Missing opids are drawn from a counter at each invocation; a response
    without an opid answers its thread's open invocation.
    """
    out: list[Label] = []
    open_ops: dict[str, Inv] = {}
    used: set[int] = set()
    counter = 0
    pos = 0
    text = text.strip()
    if not text:
        return ()
    for chunk in text.split(";"):
        m = _HIST_ITEM.fullmatch(chunk)
        if m is None:
            raise ParseError(f"cannot parse history item {chunk.strip()!r}", _token_start(chunk, pos))
        tid, kind, meth, val, opid = m.groups()
        method = READ if meth.startswith("r") else WRITE
        value = None if val is None else int(val)
        if kind == "inv":
            if tid in open_ops:
                raise ParseError(f"thread {tid} invokes while an operation is open", pos)
            if (method == WRITE) != (value is not None):
                raise ParseError("writes take an input and reads take none", pos)
            if opid is None:
                counter += 1
                while counter in used:
                    counter += 1
                k = counter
            else:
                k = int(opid)
            used.add(k)
            lab = Inv(method, value, tid, k)
            open_ops[tid] = lab
        else:
            inv = open_ops.pop(tid, None)
            if inv is None or inv.method != method:
                raise ParseError(f"response of {tid} matches no open invocation", pos)
            if opid is not None and int(opid) != inv.opid:
                raise ParseError("response id differs from its invocation", pos)
            if (method == READ) != (value is not None):
                raise ParseError("read responses carry a value and write responses none", pos)
            lab = Res(method, value, tid, inv.opid)
        out.append(lab)
        pos += len(chunk) + 1
    return tuple(out)


def format_history(history: Iterable[Label], ids: bool = False) -> str:
    parts = []
    for lab in history:
        kind = "inv" if isinstance(lab, Inv) else "res"
        arg = "" if lab.value is None else f" {lab.value}"
        suffix = f" #{lab.opid}" if ids else ""
        parts.append(f"{lab.tid}:{kind} {SHORT[lab.method]}{arg}{suffix}")
    return "; ".join(parts)


def parse_seq(text: str, default_tid: str = "A") -> SeqHistory:
    """Parse `w1.w2.r=2` or `A:w1.B:r=1#3`; missing opids count up from 1."""
    text = text.strip()
    if not text or text in ("ε", "eps"):
        return ()
    out = []
    pos = 0
    counter = 0
    for chunk in text.split("."):
        m = _SEQ_ITEM.fullmatch(chunk)
        if m is None:
            raise ParseError(f"cannot parse operation {chunk.strip()!r}", _token_start(chunk, pos))
        tid, w, wval, r, rval, opid = m.groups()
        tid = tid or default_tid
        counter += 1
        k = int(opid) if opid is not None else counter
        if w:
            out.append(Operation(tid, k, WRITE, int(wval), None))
        else:
            if rval is None:
                raise ParseError("a read in a sequential history needs an output", pos)
            out.append(Operation(tid, k, READ, None, int(rval)))
        pos += len(chunk) + 1
    return tuple(out)


def format_seq(s: Iterable[Operation], ids: bool = True) -> str:
    parts = []
    for op in s:
        body = f"w{op.input}" if op.method == WRITE else f"r={op.output}"
        parts.append(f"{op.tid}:{body}#{op.opid}" if ids else body)
    return ".".join(parts) if parts else "ε"
