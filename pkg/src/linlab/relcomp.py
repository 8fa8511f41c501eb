"""Generic implementation complete for a relation between successive linearizations.

The object records the history it has seen and a current linearization.
Each invocation and each response is logged by an internal step that
replaces the linearization by any specification-valid linearization of the
extended history related to the previous one.
State: (history, linearization, ids, statuses); a status is ("main",),
("begin", method, input), ("pend", method) or ("end", method, output).
"""

from __future__ import annotations

from .classes import RelConstraint, related
from .errors import InvalidParam
from .lts import READ, WRITE, Harness, HarnessBounds, Inv, Lts, ObjInternal, Res
from .seqspec import format_seq, spec_linearizations

MAIN = ("main",)


def _put(seq: tuple, i: int, value) -> tuple:
    return seq[:i] + (value,) + seq[i + 1 :]


class GenericComplete(Lts):
    rules = ("inv", "log-inv", "log-res", "res")

    def __init__(self, rel: RelConstraint, bounds: HarnessBounds):
        self.rel = rel
        self.bounds = bounds
        self.harness = Harness(bounds)
        self.threads = bounds.threads
        self.name = f"relcomp({rel.value})"
        self.internal_tags = frozenset({"log-inv", "log-res"})
        self._rank = {r: i for i, r in enumerate(self.rules)}
        self._cands: dict[tuple, list] = {}
        n = len(self.threads)
        self.initial = ((), (), ((),) * n, (MAIN,) * n)

    def candidates(self, history: tuple) -> list:
        got = self._cands.get(history)
        if got is None:
            got = spec_linearizations(history)
            self._cands[history] = got
        return got

    def enabled(self, state):
        hist, lin, ids, sts = state
        moves = []
        for i, p in enumerate(self.threads):
            st = sts[i]
            if st[0] == "main":
                for method, value, opid in self.harness.invocations(p, len(ids[i])):
                    ids2 = _put(ids, i, ids[i] + (opid,))
                    moves.append(("inv", Inv(method, value, p, opid), (hist, lin, ids2, _put(sts, i, ("begin", method, value)))))
            elif st[0] == "begin":
                _, method, value = st
                h2 = hist + (Inv(method, value, p, ids[i][-1]),)
                for s2 in self.candidates(h2):
                    if related(self.rel, lin, s2):
                        lab = ObjInternal(p, "log-inv", format_seq(s2))
                        moves.append(("log-inv", lab, (h2, s2, ids, _put(sts, i, ("pend", method)))))
            elif st[0] == "pend":
                method = st[1]
                outputs = self.bounds.values if method == READ else (None,)
                for v in outputs:
                    h2 = hist + (Res(method, v, p, ids[i][-1]),)
                    for s2 in self.candidates(h2):
                        if related(self.rel, lin, s2):
                            lab = ObjInternal(p, "log-res", (v, format_seq(s2)))
                            moves.append(("log-res", lab, (h2, s2, ids, _put(sts, i, ("end", method, v)))))
            else:
                _, method, v = st
                moves.append(("res", Res(method, v, p, ids[i][-1]), (hist, lin, ids, _put(sts, i, MAIN))))
        moves.sort(key=lambda m: self._rank[m[0]])
        return [(lab, post) for _, lab, post in moves]

    def describe_state(self, state):
        hist, lin, ids, sts = state
        from .seqspec import format_history

        return {
            "h": format_history(hist),
            "s": format_seq(lin),
            "ID": {p: list(x) for p, x in zip(self.threads, ids)},
            "St": {p: list(x) for p, x in zip(self.threads, sts)},
        }


def make_generic_complete(rel: RelConstraint | str, bounds: HarnessBounds) -> GenericComplete:
    if isinstance(rel, str):
        names = {r.value.lower(): r for r in RelConstraint}
        if rel.lower() not in names:
            raise InvalidParam(f"unknown relation {rel!r}; known: {', '.join(r.value for r in RelConstraint)}")
        rel = names[rel.lower()]
    return GenericComplete(rel, bounds)


def read_fork(lts: GenericComplete, reader: str, values=(1, 2)):
    """Shortest run whose history has two overlapping completed writes and no read yet,
    from which the reader can still return each of `values`.

    Returns (labels, state) or None.
    """
    from .lts import reachable

    order, edges = reachable(lts)
    preds: dict = {s: [] for s in order}
    for s in order:
        for _, post in edges[s]:
            preds[post].append(s)
    outs: dict = {s: set() for s in order}
    work = []
    for s in order:
        for lab, post in edges[s]:
            if isinstance(lab, Res) and lab.tid == reader and lab.value not in outs[s]:
                outs[s].add(lab.value)
                work.append(s)
    while work:
        s = work.pop()
        for p in preds[s]:
            if not outs[s] <= outs[p]:
                outs[p] |= outs[s]
                work.append(p)
    for s in order:
        if set(values) <= outs[s] and _two_overlapping_writes(s, lts.threads, reader):
            return _path(order, edges, s), s
    return None


def _two_overlapping_writes(state, threads, reader: str) -> bool:
    hist, _, _, sts = state
    if any(lab.tid == reader for lab in hist):
        return False
    if any(st != MAIN for t, st in zip(threads, sts) if t != reader):
        return False
    invs = [i for i, lab in enumerate(hist) if isinstance(lab, Inv) and lab.method == WRITE]
    ress = [i for i, lab in enumerate(hist) if isinstance(lab, Res) and lab.method == WRITE]
    return len(invs) == 2 and len(ress) == 2 and max(invs) < min(ress)


def _path(order, edges, target) -> tuple:
    parent = {order[0]: None}
    for s in order:
        if s == target:
            break
        for lab, post in edges[s]:
            parent.setdefault(post, (s, lab))
    labels = []
    s = target
    while parent[s] is not None:
        s, lab = parent[s]
        labels.append(lab)
    return tuple(reversed(labels))
