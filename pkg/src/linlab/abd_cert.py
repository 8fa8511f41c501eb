"""Simulation certificate showing that ABD is simulated by the rollback register.

The annotation is the monotone map from DR versions to ABD pairs, stored
as a tuple whose i-th entry is the pair of version i.  The relation and the
matcher follow the pairing of ABD phases with DR phases: queries map to
the DR init steps, a pair that newly reaches a majority is stored in DR
(as a top write if it is the new maximum, otherwise as a roll-back and
roll-forward), and readers waiting on that pair pick it.
"""

from __future__ import annotations

from itertools import combinations

from .abd import INITIAL_PAIR, QUERY, UPDATE, Abd, h_of, make_abd, max_pair, pair_ts
from .errors import InvalidParam
from .lts import HarnessBounds, ObjInternal
from .registers import Dr
from .simulation import Report, check_certificate

PHASE_PAIRS = frozenset({
    ("main", "main"),
    ("r_b", "r_b"), ("r_q", "r_l"), ("r_u", "r_l"), ("r_u", "r_e"), ("r_e", "r_e"),
    ("w_b", "w_b"), ("w_q", "w_w"), ("w_u", "w_w"), ("w_u", "w_e"), ("w_e", "w_e"),
})

MUTATIONS = (None, "drop-lock")


def default_certificate_bounds(n: int) -> HarnessBounds:
    """Two writers and a reader for n >= 3; a writer and a writer-or-reader for n = 2."""
    if n >= 3:
        return HarnessBounds(threads=("A", "B", "C"), ops=1, menu={"A": "w1", "B": "w2", "C": "r"})
    return HarnessBounds(threads=("A", "B"), ops={"A": 1, "B": 2}, menu={"A": "w1", "B": "w2 r"})


class AbdDrCertificate:
    """Relation and matcher for a fixed ABD instance and its DR counterpart."""

    def __init__(self, abd: Abd, dr: Dr, mutation: str | None = None):
        if mutation not in MUTATIONS:
            raise InvalidParam(f"unknown mutation {mutation!r}")
        self.abd = abd
        self.dr = dr
        self.mutation = mutation
        self.n = abd.n
        self.clients = len(dr.threads)
        self.quorums = [q for r in range(self.n + 1) if 2 * r > self.n for q in combinations(range(self.n), r)]

    # ------------------------------------------------------------ helpers

    def owner(self, pair) -> int | None:
        rank = pair_ts(pair)[1]
        return None if rank == 0 else self.n - rank

    def updates(self, messages):
        return [m for m in messages if m[0] == UPDATE]

    def own_update(self, messages, i, k):
        for m in messages:
            if m[0] == UPDATE and m[1] == i and m[2] == k:
                return m
        return None

    def own_query(self, messages, i, k):
        for m in messages:
            if m[0] == QUERY and m[1] == i and m[2] == k:
                return m
        return None

    # ------------------------------------------------------------ relation

    def relation(self, c, a, f) -> list[str]:
        messages, ids, vals, pcs, args = c
        x, ver, lock, dids, dpcs, vss, starts, dargs = a
        n = self.n
        fails: list[str] = []
        hset = h_of(messages, n)
        hmax = max_pair(hset)
        updates = self.updates(messages)

        # ABD-side consistency.
        for _, _, _, pair, acks in updates:
            if any(pair_ts(vals[r]) < pair_ts(pair) for r in acks):
                fails.append("acked-update-dominated")
                break
        for q in self.quorums:
            if pair_ts(max_pair(vals[r] for r in q)) < pair_ts(hmax):
                fails.append("quorum-sees-max")
                break
        for _, owner, k, _, _ in updates:
            if k not in ids[owner]:
                fails.append("update-of-unused-id")
        own: dict[int, tuple] = {}
        for i in range(n):
            if not ids[i]:
                continue
            k = ids[i][-1]
            msg = self.own_update(messages, i, k)
            if pcs[i] in ("r_b", "w_b", "r_q", "w_q") and msg is not None:
                fails.append("early-update")
            if pcs[i] in ("r_u", "w_u"):
                if msg is None or msg[3][0] != args[i]:
                    fails.append("own-update-pair")
                    continue
                if pcs[i] == "w_u" and self.owner(msg[3]) != i:
                    fails.append("write-timestamp-owner")
                own[i] = msg[3]
        seen_pairs = set(vals)
        for m in messages:
            if m[0] == UPDATE:
                seen_pairs.add(m[3])
            else:
                seen_pairs.update(pv for _, pv in m[4])
        for pair in seen_pairs:
            if pair in hset:
                continue
            o = self.owner(pair)
            if o is None or pcs[o] != "w_u" or own.get(o) != pair:
                fails.append("unstable-pair-owner")
                break

        # DR-side invariants.
        if self.mutation != "drop-lock" and lock != 0:
            fails.append("lock-free")
        if ver < 0:
            fails.append("version-nonnegative")
        if any(s > ver for s in starts):
            fails.append("start-below-version")

        # The version map.
        if len(f) != ver + 1 or f[0] != INITIAL_PAIR:
            fails.append("version-map-shape")
            return fails
        if any(pair_ts(f[j]) > pair_ts(f[j + 1]) for j in range(ver)):
            fails.append("version-map-monotone")
        if f[ver] != hmax or x != hmax[0]:
            fails.append("top-version-is-max")

        for i in range(self.clients):
            if ids[i] != dids[i]:
                fails.append("ids-equal")
            pc, dpc = pcs[i], dpcs[i]
            if (pc, dpc) not in PHASE_PAIRS:
                fails.append(f"phase-pair:{pc}/{dpc}")
                continue
            if dpc in ("r_e", "w_b", "w_w") and args[i] != dargs[i]:
                fails.append("args-equal")
            low = pair_ts(f[starts[i]]) if starts[i] <= ver else None
            if dpc == "r_l" and low is not None:
                top = pair_ts(f[ver])
                window = {v for v, ts in hset if low <= ts <= top}
                if set(vss[i]) != window:
                    fails.append("read-window")
            if pc in ("r_q", "w_q") and low is not None:
                query = self.own_query(messages, i, ids[i][-1])
                if query is None or not self._query_bound(query[4], vals, low):
                    fails.append("query-lower-bound")
            if pc in ("r_u", "w_u") and i in own:
                pair = own[i]
                if pair not in hset:
                    if low is None or pair_ts(pair) < low or dpc not in ("r_l", "w_w"):
                        fails.append("unstable-own-pair")
                elif dpc not in ("r_e", "w_e"):
                    fails.append("stable-own-pair")
        return fails

    def _query_bound(self, replies, vals, low) -> bool:
        """Any way of completing the query to a quorum yields a pair at least `low`."""
        n = self.n
        replied = {r: pv for r, pv in replies}
        keys = sorted(replied)
        for r in range(len(keys) + 1):
            for part in combinations(keys, r):
                rest = [j for j in range(n) if j not in part]
                for r2 in range(len(rest) + 1):
                    if 2 * (r + r2) <= n:
                        continue
                    for extra in combinations(rest, r2):
                        pairs = [replied[j] for j in part] + [vals[j] for j in extra]
                        if pair_ts(max_pair(pairs)) < low:
                            return False
        return True

    # ------------------------------------------------------------ matcher

    def matcher(self, c, a, f, lab, c2):
        messages, ids, vals, pcs, args = c
        dr_state = a
        seq = []
        if not isinstance(lab, ObjInternal):
            seq.append(lab)
        else:
            p = lab.tid
            rule = lab.rule
            if rule == "read-query":
                seq.append(ObjInternal(p, "read-init"))
            elif rule == "write-query":
                seq.append(ObjInternal(p, "write-init"))
            elif rule == "read-update":
                i = self.abd.processes.index(p)
                pair = self.own_update(c2[0], i, c2[1][i][-1])[3]
                if pair in h_of(messages, self.n):
                    seq.append(ObjInternal(p, "read-pick", pair[0]))
        before = h_of(messages, self.n)
        after = h_of(c2[0], self.n)
        fresh = after - before
        if fresh:
            (pair,) = fresh
            seq.extend(self._store(c2, dr_state, f, pair, before))
            if pair_ts(pair) > pair_ts(max_pair(before)):
                f = f + (pair,)
        return seq, f

    def _store(self, c2, a, f, pair, before):
        """DR steps for a pair that has just reached a majority."""
        x, ver, lock, dids, dpcs, vss, starts, dargs = a
        messages, ids, vals, pcs, args = c2
        writer = self.owner(pair)
        wtid = self.dr.threads[writer]
        value = pair[0]
        seq = []
        listeners = []
        new_max = pair_ts(pair) > pair_ts(max_pair(before))
        for j in range(self.clients):
            if dpcs[j] != "r_l" or value in vss[j]:
                continue
            if new_max or pair_ts(f[starts[j]]) <= pair_ts(pair):
                listeners.append(ObjInternal(self.dr.threads[j], "read-loop"))
        pickers = []
        for j in range(self.clients):
            if pcs[j] == "r_u" and ids[j]:
                msg = self.own_update(messages, j, ids[j][-1])
                if msg is not None and msg[3] == pair:
                    pickers.append(ObjInternal(self.dr.threads[j], "read-pick", value))
        if new_max:
            seq.append(ObjInternal(wtid, "write-top"))
            seq.extend(listeners)
        else:
            seq.append(ObjInternal(wtid, "write-roll-back"))
            seq.extend(listeners)
            if self.mutation != "drop-lock":
                seq.append(ObjInternal(wtid, "write-roll-forward"))
        seq.extend(pickers)
        return seq


def abd_dr_certificate(
    n: int = 3,
    bounds: HarnessBounds | None = None,
    mutation: str | None = None,
    prune_queries: bool = True,
    cap: int | None = 5_000_000,
) -> Report:
    """Check the ABD-to-DR simulation certificate under a bounded harness."""
    bounds = bounds or default_certificate_bounds(n)
    abd = make_abd(n, bounds, prune_queries=prune_queries)
    dr = Dr(bounds)
    cert = AbdDrCertificate(abd, dr, mutation)
    report = check_certificate(abd, dr, cert.relation, cert.matcher, annotation=(INITIAL_PAIR,), cap=cap)
    report.bounds = bounds.describe() | {"n": n, "pruned_queries": prune_queries, "mutation": mutation}
    return report
