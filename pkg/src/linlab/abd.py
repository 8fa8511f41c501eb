"""Multi-writer ABD register emulation over N crash-free processes.

Processes are the harness threads followed by server-only processes.  A
timestamp is (t, rank) where rank orders process ids; rank 0 is the bottom
id of the initial timestamp.  The first process carries the highest rank,
so in a timestamp tie the leftmost writer wins.

State: (M, ids, V, pcs, args) with M a sorted tuple of message entries
(kind, owner index, opid, pair, acks).  Query acks are (responder index,
pair) tuples; update acks are responder indices.  Pairs are (value, ts) and
compare by timestamp only.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable

from .errors import InvalidParam
from .lts import READ, WRITE, Harness, HarnessBounds, Inv, Lts, ObjInternal, Res

MAIN = "main"
QUERY = "q"
UPDATE = "u"
BOTTOM = 0
INITIAL_PAIR = (0, (0, BOTTOM))


def pair_ts(pair: tuple) -> tuple[int, int]:
    return pair[1]


def max_pair(pairs: Iterable[tuple]) -> tuple:
    return max(pairs, key=pair_ts)


def quorum_value_choices(replies: Iterable[tuple], n: int) -> set[tuple]:
    """Maxima of the replies of every quorum; only minimal quorums are visited."""
    replies = list(replies)
    size = n // 2 + 1
    if len(replies) < size:
        return set()
    return {max_pair(pair for _, pair in comb) for comb in combinations(replies, size)}


def quorum_value_choices_bruteforce(replies: Iterable[tuple], n: int) -> set[tuple]:
    """Reference: maxima over every subset of repliers larger than n/2."""
    replies = list(replies)
    out = set()
    for r in range(len(replies) + 1):
        if 2 * r <= n:
            continue
        for comb in combinations(replies, r):
            out.add(max_pair(pair for _, pair in comb))
    return out


def h_of(messages: tuple, n: int) -> set[tuple]:
    """Pairs carried by update messages acknowledged by a majority, plus the initial pair."""
    out = {INITIAL_PAIR}
    for kind, _, _, pair, acks in messages:
        if kind == UPDATE and 2 * len(acks) > n:
            out.add(pair)
    return out


def _put(seq: tuple, i: int, value) -> tuple:
    return seq[:i] + (value,) + seq[i + 1 :]


def _add_message(messages: tuple, entry: tuple) -> tuple:
    return tuple(sorted(messages + (entry,), key=lambda m: (m[0], m[1], m[2])))


class Abd(Lts):
    kind = "abd"
    rules = (
        "read-inv", "read-query", "read-update", "read-end", "read-res",
        "write-inv", "write-query", "write-update", "write-end", "write-res",
        "server-query-ack", "server-update-ack",
    )

    def __init__(self, n: int, bounds: HarnessBounds, prune_queries: bool = False):
        if not isinstance(n, int) or n < 2:
            raise InvalidParam(f"ABD needs n >= 2 processes, got {n!r}")
        if len(bounds.threads) > n:
            raise InvalidParam(f"ABD with {n} processes cannot host {len(bounds.threads)} threads")
        self.n = n
        self.bounds = bounds
        self.prune_queries = prune_queries
        extra = [f"S{i + 1}" for i in range(len(bounds.threads), n)]
        self.processes = tuple(bounds.threads) + tuple(extra)
        self.threads = self.processes
        self.clients = len(bounds.threads)
        self.harness = Harness(bounds, self.processes)
        self.name = f"abd:{n}" + ("/pruned" if prune_queries else "")
        self.internal_tags = frozenset(r for r in self.rules if not r.endswith(("-inv", "-res")))
        self._rank = {r: i for i, r in enumerate(self.rules)}
        self.initial = ((), ((),) * n, (INITIAL_PAIR,) * n, (MAIN,) * n, (0,) * n)

    def rank(self, index: int) -> int:
        return self.n - index

    def process_of_rank(self, rank: int) -> str | None:
        return None if rank == BOTTOM else self.processes[self.n - rank]

    def quorum(self, count: int) -> bool:
        return 2 * count > self.n

    def find(self, messages: tuple, kind: str, owner: int, opid: int):
        for entry in messages:
            if entry[0] == kind and entry[1] == owner and entry[2] == opid:
                return entry
        return None

    def enabled(self, state):
        messages, ids, vals, pcs, args = state
        moves: list = []
        n = self.n
        for i, p in enumerate(self.processes):
            pc = pcs[i]
            if pc == MAIN:
                used = ids[i]
                for method, value, opid in self.harness.invocations(p, len(used)):
                    ids2 = _put(ids, i, used + (opid,))
                    if method == READ:
                        moves.append(("read-inv", Inv(READ, None, p, opid), (messages, ids2, vals, _put(pcs, i, "r_b"), args)))
                    else:
                        st = (messages, ids2, vals, _put(pcs, i, "w_b"), _put(args, i, value))
                        moves.append(("write-inv", Inv(WRITE, value, p, opid), st))
                continue
            k = ids[i][-1]
            phase, stage = pc[0], pc[2]
            rule_prefix = "read" if phase == "r" else "write"
            if stage == "b":
                st = (_add_message(messages, (QUERY, i, k, None, frozenset())), ids, vals, _put(pcs, i, phase + "_q"), args)
                moves.append((rule_prefix + "-query", ObjInternal(p, rule_prefix + "-query"), st))
            elif stage == "q":
                entry = self.find(messages, QUERY, i, k)
                choices = quorum_value_choices(entry[4], n)
                base = tuple(m for m in messages if m is not entry) if self.prune_queries else messages
                if phase == "r":
                    for pair in sorted(choices, key=pair_ts):
                        msg = (UPDATE, i, k, pair, frozenset())
                        st = (_add_message(base, msg), ids, vals, _put(pcs, i, "r_u"), _put(args, i, pair[0]))
                        moves.append(("read-update", ObjInternal(p, "read-update", self.pair_arg(pair)), st))
                else:
                    for t in sorted({pair_ts(pair)[0] for pair in choices}):
                        pair = (args[i], (t + 1, self.rank(i)))
                        msg = (UPDATE, i, k, pair, frozenset())
                        st = (_add_message(base, msg), ids, vals, _put(pcs, i, "w_u"), args)
                        moves.append(("write-update", ObjInternal(p, "write-update", self.pair_arg(pair)), st))
            elif stage == "u":
                entry = self.find(messages, UPDATE, i, k)
                if 2 * len(entry[4]) > n:
                    st = (messages, ids, vals, _put(pcs, i, phase + "_e"), args)
                    moves.append((rule_prefix + "-end", ObjInternal(p, rule_prefix + "-end"), st))
            elif stage == "e":
                if phase == "r":
                    lab = Res(READ, args[i], p, k)
                else:
                    lab = Res(WRITE, None, p, k)
                moves.append((rule_prefix + "-res", lab, (messages, ids, vals, _put(pcs, i, MAIN), _put(args, i, 0))))
        for i, p in enumerate(self.processes):
            for j, entry in enumerate(messages):
                kind, owner, opid, pair, acks = entry
                if kind == QUERY:
                    if any(r == i for r, _ in acks):
                        continue
                    new = (kind, owner, opid, pair, acks | {(i, vals[i])})
                    st = (messages[:j] + (new,) + messages[j + 1 :], ids, vals, pcs, args)
                    moves.append(("server-query-ack", ObjInternal(p, "server-query-ack", (self.processes[owner], opid)), st))
                else:
                    if i in acks:
                        continue
                    new = (kind, owner, opid, pair, acks | {i})
                    mine = vals[i]
                    vals2 = vals if pair_ts(mine) >= pair_ts(pair) else _put(vals, i, pair)
                    st = (messages[:j] + (new,) + messages[j + 1 :], ids, vals2, pcs, args)
                    moves.append(("server-update-ack", ObjInternal(p, "server-update-ack", (self.processes[owner], opid)), st))
        moves.sort(key=lambda m: self._rank[m[0]])
        return [(lab, post) for _, lab, post in moves]

    def pair_arg(self, pair: tuple) -> tuple:
        v, (t, r) = pair
        return (v, t, self.process_of_rank(r))

    def pair_text(self, pair: tuple) -> str:
        v, (t, r) = pair
        who = self.process_of_rank(r) or "_"
        return f"({v},<{t},{who}>)"

    def describe_state(self, state):
        messages, ids, vals, pcs, args = state
        msgs = []
        for kind, owner, opid, pair, acks in messages:
            entry = {"kind": "query" if kind == QUERY else "update", "owner": self.processes[owner], "opid": opid}
            if kind == QUERY:
                entry["acks"] = [[self.processes[r], self.pair_text(pv)] for r, pv in sorted(acks)]
            else:
                entry["pair"] = self.pair_text(pair)
                entry["acks"] = [self.processes[r] for r in sorted(acks)]
            msgs.append(entry)
        per = lambda xs, f=lambda v: v: {p: f(x) for p, x in zip(self.processes, xs)}
        return {"M": msgs, "ID": per(ids, list), "V": per(vals, self.pair_text), "PC": per(pcs), "A": per(args)}


def make_abd(n: int, bounds: HarnessBounds | None = None, prune_queries: bool = False) -> Abd:
    return Abd(n, bounds or HarnessBounds(), prune_queries)
