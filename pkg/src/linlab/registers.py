"""Shared-memory register implementations as labeled transition systems.

Every model keeps a per-thread phase and a per-thread in/out slot; the
state is a plain tuple so it hashes and encodes canonically.  Enabled
transitions are ordered by rule declaration, then thread, then value.
"""

from __future__ import annotations

from typing import Hashable

from .errors import InvalidParam, NotAtPick
from .lts import READ, WRITE, Harness, HarnessBounds, Inv, Lts, ObjInternal, Res

MAIN = "main"


def _put(seq: tuple, i: int, value) -> tuple:
    return seq[:i] + (value,) + seq[i + 1 :]


class RegisterLts(Lts):
    """Common plumbing: harness menus, rule ordering and invocation steps."""

    kind = "register"
    rules: tuple[str, ...] = ()
    external_rules = frozenset({"read-inv", "read-res", "write-inv", "write-res"})

    def __init__(self, bounds: HarnessBounds):
        self.bounds = bounds
        self.harness = Harness(bounds)
        self.threads = bounds.threads
        self.name = self.kind
        self.internal_tags = frozenset(r for r in self.rules if r not in self.external_rules)
        self._rank = {r: i for i, r in enumerate(self.rules)}

    def enabled(self, state):
        moves: list[tuple[str, object, Hashable]] = []
        for i, p in enumerate(self.threads):
            self._thread_moves(state, i, p, moves)
        moves.sort(key=lambda m: self._rank[m[0]])
        return [(lab, post) for _, lab, post in moves]

    def _thread_moves(self, state, i: int, p: str, moves: list) -> None:
        raise NotImplementedError

    def _invocations(self, ids: tuple, i: int, p: str):
        """Yield (rule, label, new ids) for every call the harness allows."""
        used = ids[i]
        for method, value, opid in self.harness.invocations(p, len(used)):
            rule = "read-inv" if method == READ else "write-inv"
            yield rule, Inv(method, value, p, opid), _put(ids, i, used + (opid,)), value


class Atr(RegisterLts):
    """Atomic register: one internal load per read, one store per write.

    State: (X, ids, pcs, args).
    """

    kind = "atr"
    rules = ("read-inv", "read-load", "read-res", "write-inv", "write-store", "write-res")

    def __init__(self, bounds: HarnessBounds):
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, ((),) * n, (MAIN,) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, ids, pcs, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "r_b"), args)))
                else:
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "w_b"), _put(args, i, value))))
        elif pc == "r_b":
            moves.append(("read-load", ObjInternal(p, "read-load"), (x, ids, _put(pcs, i, "r_e"), _put(args, i, x))))
        elif pc == "r_e":
            lab = Res(READ, args[i], p, ids[i][-1])
            moves.append(("read-res", lab, (x, ids, _put(pcs, i, MAIN), _put(args, i, 0))))
        elif pc == "w_b":
            moves.append(("write-store", ObjInternal(p, "write-store"), (args[i], ids, _put(pcs, i, "w_e"), args)))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            moves.append(("write-res", lab, (x, ids, _put(pcs, i, MAIN), _put(args, i, 0))))

    def describe_state(self, state):
        x, ids, pcs, args = state
        return {"X": x, "ID": _per(self, ids, list), "PC": _per(self, pcs), "A": _per(self, args)}


class KLoad(RegisterLts):
    """Register whose read loads X k times and returns any loaded value.

    The choice among loaded values is made by the response itself, so k=1
    has exactly the transitions of the atomic register.
    State: (X, ids, pcs, loads, args).
    """

    rules = ("read-inv", "read-load", "read-res", "write-inv", "write-store", "write-res")

    def __init__(self, bounds: HarnessBounds, k: int):
        if not isinstance(k, int) or k < 1:
            raise InvalidParam(f"KLOAD needs k >= 1, got {k!r}")
        self.k = k
        self.kind = "dlr" if k == 2 else f"kload:{k}"
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, ((),) * n, (MAIN,) * n, ((),) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, ids, pcs, loads, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "r_b"), loads, args)))
                else:
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "w_b"), loads, _put(args, i, value))))
        elif pc == "r_b":
            got = loads[i] + (x,)
            nxt = "r_e" if len(got) == self.k else "r_b"
            moves.append(("read-load", ObjInternal(p, "read-load"), (x, ids, _put(pcs, i, nxt), _put(loads, i, got), args)))
        elif pc == "r_e":
            for v in sorted(set(loads[i])):
                lab = Res(READ, v, p, ids[i][-1])
                moves.append(("read-res", lab, (x, ids, _put(pcs, i, MAIN), _put(loads, i, ()), args)))
        elif pc == "w_b":
            moves.append(("write-store", ObjInternal(p, "write-store"), (args[i], ids, _put(pcs, i, "w_e"), loads, args)))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            moves.append(("write-res", lab, (x, ids, _put(pcs, i, MAIN), loads, _put(args, i, 0))))

    def describe_state(self, state):
        x, ids, pcs, loads, args = state
        return {"X": x, "ID": _per(self, ids, list), "PC": _per(self, pcs), "loaded": _per(self, loads, list), "A": _per(self, args)}


class Tnsr(RegisterLts):
    """Try-not-to-store: a write loads X twice and may skip its store if the loads differ.

    State: (X, ids, pcs, first loads, second loads, args).
    """

    kind = "tnsr"
    rules = (
        "read-inv", "read-load", "read-res",
        "write-inv", "write-load1", "write-load2", "write-skip", "write-store", "write-res",
    )

    def __init__(self, bounds: HarnessBounds):
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, ((),) * n, (MAIN,) * n, (0,) * n, (0,) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, ids, pcs, a1, a2, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "r_b"), a1, a2, args)))
                else:
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "w_b"), a1, a2, _put(args, i, value))))
        elif pc == "r_b":
            moves.append(("read-load", ObjInternal(p, "read-load"), (x, ids, _put(pcs, i, "r_e"), a1, a2, _put(args, i, x))))
        elif pc == "r_e":
            lab = Res(READ, args[i], p, ids[i][-1])
            moves.append(("read-res", lab, (x, ids, _put(pcs, i, MAIN), a1, a2, _put(args, i, 0))))
        elif pc == "w_b":
            moves.append(("write-load1", ObjInternal(p, "write-load1"), (x, ids, _put(pcs, i, "w_l"), _put(a1, i, x), a2, args)))
        elif pc == "w_l":
            moves.append(("write-load2", ObjInternal(p, "write-load2"), (x, ids, _put(pcs, i, "w_c"), a1, _put(a2, i, x), args)))
        elif pc == "w_c":
            if a1[i] != a2[i]:
                moves.append(("write-skip", ObjInternal(p, "write-skip"), (x, ids, _put(pcs, i, "w_e"), a1, a2, args)))
            moves.append(("write-store", ObjInternal(p, "write-store"), (args[i], ids, _put(pcs, i, "w_e"), a1, a2, args)))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            st = (x, ids, _put(pcs, i, MAIN), _put(a1, i, 0), _put(a2, i, 0), _put(args, i, 0))
            moves.append(("write-res", lab, st))

    def describe_state(self, state):
        x, ids, pcs, a1, a2, args = state
        return {"X": x, "ID": _per(self, ids, list), "PC": _per(self, pcs), "a1": _per(self, a1), "a2": _per(self, a2), "A": _per(self, args)}


class Ticket(RegisterLts):
    """Writers take a ticket and store strictly in ticket order.

    State: (X, C1, C2, ids, pcs, tickets, args).
    """

    kind = "ticket"
    rules = ("read-inv", "read-load", "read-res", "write-inv", "write-ticket", "write-store", "write-res")

    def __init__(self, bounds: HarnessBounds):
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, 0, 0, ((),) * n, (MAIN,) * n, (0,) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, c1, c2, ids, pcs, tickets, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, c1, c2, ids2, _put(pcs, i, "r_b"), tickets, args)))
                else:
                    moves.append((rule, lab, (x, c1, c2, ids2, _put(pcs, i, "w_b"), tickets, _put(args, i, value))))
        elif pc == "r_b":
            st = (x, c1, c2, ids, _put(pcs, i, "r_e"), tickets, _put(args, i, x))
            moves.append(("read-load", ObjInternal(p, "read-load"), st))
        elif pc == "r_e":
            lab = Res(READ, args[i], p, ids[i][-1])
            moves.append(("read-res", lab, (x, c1, c2, ids, _put(pcs, i, MAIN), tickets, _put(args, i, 0))))
        elif pc == "w_b":
            st = (x, c1 + 1, c2, ids, _put(pcs, i, "w_t"), _put(tickets, i, c1), args)
            moves.append(("write-ticket", ObjInternal(p, "write-ticket"), st))
        elif pc == "w_t":
            if tickets[i] == c2:
                st = (args[i], c1, c2 + 1, ids, _put(pcs, i, "w_e"), tickets, args)
                moves.append(("write-store", ObjInternal(p, "write-store"), st))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            st = (x, c1, c2, ids, _put(pcs, i, MAIN), _put(tickets, i, 0), _put(args, i, 0))
            moves.append(("write-res", lab, st))

    def describe_state(self, state):
        x, c1, c2, ids, pcs, tickets, args = state
        return {"X": x, "C1": c1, "C2": c2, "ID": _per(self, ids, list), "PC": _per(self, pcs), "t": _per(self, tickets), "A": _per(self, args)}


class Wsr(RegisterLts):
    """Complete write-strong register: reads collect every value seen in X and pick one.

    State: (X, ids, pcs, value sets, args).
    """

    kind = "wsr"
    rules = (
        "read-inv", "read-init", "read-loop", "read-pick", "read-res",
        "write-inv", "write-int", "write-res",
    )

    def __init__(self, bounds: HarnessBounds):
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, ((),) * n, (MAIN,) * n, (frozenset(),) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, ids, pcs, vss, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "r_b"), vss, args)))
                else:
                    moves.append((rule, lab, (x, ids2, _put(pcs, i, "w_b"), vss, _put(args, i, value))))
        elif pc == "r_b":
            st = (x, ids, _put(pcs, i, "r_l"), _put(vss, i, frozenset((x,))), args)
            moves.append(("read-init", ObjInternal(p, "read-init"), st))
        elif pc == "r_l":
            vs = vss[i]
            if x not in vs:
                moves.append(("read-loop", ObjInternal(p, "read-loop"), (x, ids, pcs, _put(vss, i, vs | {x}), args)))
            for v in sorted(vs):
                st = (x, ids, _put(pcs, i, "r_e"), vss, _put(args, i, v))
                moves.append(("read-pick", ObjInternal(p, "read-pick", v), st))
        elif pc == "r_e":
            lab = Res(READ, args[i], p, ids[i][-1])
            st = (x, ids, _put(pcs, i, MAIN), _put(vss, i, frozenset()), _put(args, i, 0))
            moves.append(("read-res", lab, st))
        elif pc == "w_b":
            moves.append(("write-int", ObjInternal(p, "write-int"), (args[i], ids, _put(pcs, i, "w_e"), vss, args)))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            st = (x, ids, _put(pcs, i, MAIN), _put(vss, i, frozenset()), _put(args, i, 0))
            moves.append(("write-res", lab, st))

    def describe_state(self, state):
        x, ids, pcs, vss, args = state
        return {"X": x, "ID": _per(self, ids, list), "PC": _per(self, pcs), "VS": _per(self, vss, sorted), "A": _per(self, args)}


class Dr(RegisterLts):
    """Complete decisive register: versioned stores with a lock-protected roll-back.

    State: (X, Ver, lock, ids, pcs, value sets, start versions, args).
    """

    kind = "dr"
    rules = (
        "read-inv", "read-init", "read-loop", "read-pick", "read-res",
        "write-inv", "write-init", "write-top", "write-roll-back", "write-roll-forward", "write-res",
    )

    def __init__(self, bounds: HarnessBounds):
        super().__init__(bounds)
        n = len(self.threads)
        self.initial = (0, 0, 0, ((),) * n, (MAIN,) * n, (frozenset(),) * n, (0,) * n, (0,) * n)

    def _thread_moves(self, state, i, p, moves):
        x, ver, lock, ids, pcs, vss, starts, args = state
        pc = pcs[i]
        if pc == MAIN:
            for rule, lab, ids2, value in self._invocations(ids, i, p):
                if rule == "read-inv":
                    moves.append((rule, lab, (x, ver, lock, ids2, _put(pcs, i, "r_b"), vss, starts, args)))
                else:
                    st = (x, ver, lock, ids2, _put(pcs, i, "w_b"), vss, starts, _put(args, i, value))
                    moves.append((rule, lab, st))
        elif pc == "r_b":
            if lock == 0:
                st = (x, ver, lock, ids, _put(pcs, i, "r_l"), _put(vss, i, frozenset((x,))), _put(starts, i, ver), args)
                moves.append(("read-init", ObjInternal(p, "read-init"), st))
        elif pc == "r_l":
            vs = vss[i]
            if x not in vs and ver >= starts[i]:
                st = (x, ver, lock, ids, pcs, _put(vss, i, vs | {x}), starts, args)
                moves.append(("read-loop", ObjInternal(p, "read-loop"), st))
            for v in sorted(vs):
                st = (x, ver, lock, ids, _put(pcs, i, "r_e"), vss, starts, _put(args, i, v))
                moves.append(("read-pick", ObjInternal(p, "read-pick", v), st))
        elif pc == "r_e":
            lab = Res(READ, args[i], p, ids[i][-1])
            st = (x, ver, lock, ids, _put(pcs, i, MAIN), _put(vss, i, frozenset()), _put(starts, i, 0), _put(args, i, 0))
            moves.append(("read-res", lab, st))
        elif pc == "w_b":
            if lock == 0:
                st = (x, ver, lock, ids, _put(pcs, i, "w_w"), vss, _put(starts, i, ver), args)
                moves.append(("write-init", ObjInternal(p, "write-init"), st))
        elif pc == "w_w":
            if lock == 0:
                st = (args[i], ver + 1, lock, ids, _put(pcs, i, "w_e"), vss, starts, args)
                moves.append(("write-top", ObjInternal(p, "write-top"), st))
                if ver > starts[i]:
                    st = (args[i], ver - 1, 1, ids, _put(pcs, i, "w_r"), vss, starts, _put(args, i, x))
                    moves.append(("write-roll-back", ObjInternal(p, "write-roll-back"), st))
        elif pc == "w_r":
            if lock == 1:
                st = (args[i], ver + 1, 0, ids, _put(pcs, i, "w_e"), vss, starts, args)
                moves.append(("write-roll-forward", ObjInternal(p, "write-roll-forward"), st))
        elif pc == "w_e":
            lab = Res(WRITE, None, p, ids[i][-1])
            st = (x, ver, lock, ids, _put(pcs, i, MAIN), _put(vss, i, frozenset()), _put(starts, i, 0), _put(args, i, 0))
            moves.append(("write-res", lab, st))

    def describe_state(self, state):
        x, ver, lock, ids, pcs, vss, starts, args = state
        return {
            "X": x, "Ver": ver, "L": lock, "ID": _per(self, ids, list), "PC": _per(self, pcs),
            "VS": _per(self, vss, sorted), "S": _per(self, starts), "A": _per(self, args),
        }


def _per(lts: Lts, values: tuple, conv=lambda v: v) -> dict:
    return {p: conv(v) for p, v in zip(lts.threads, values)}


KINDS = ("atr", "dlr", "kload:k", "tnsr", "ticket", "wsr", "dr", "abd:n")


def parse_kind(kind: str) -> tuple[str, int | None]:
    """Split a kind string such as `kload:3` or `abd:3` into (name, parameter)."""
    text = kind.strip().lower()
    name, _, arg = text.partition(":")
    if name in ("kload", "abd"):
        if not arg:
            raise InvalidParam(f"{name} needs a parameter, e.g. {name}:3")
        try:
            return name, int(arg)
        except ValueError:
            raise InvalidParam(f"bad parameter in {kind!r}") from None
    if arg or name not in ("atr", "dlr", "tnsr", "ticket", "wsr", "dr"):
        raise InvalidParam(f"unknown implementation kind {kind!r}; known: {', '.join(KINDS)}")
    return name, None


def make_register(kind: str, bounds: HarnessBounds | None = None) -> Lts:
    """Build a register LTS (or ABD) from a kind string under a harness."""
    bounds = bounds or HarnessBounds()
    name, arg = parse_kind(kind)
    if name == "atr":
        return Atr(bounds)
    if name == "dlr":
        return KLoad(bounds, 2)
    if name == "kload":
        return KLoad(bounds, arg)
    if name == "tnsr":
        return Tnsr(bounds)
    if name == "ticket":
        return Ticket(bounds)
    if name == "wsr":
        return Wsr(bounds)
    if name == "dr":
        return Dr(bounds)
    from .abd import make_abd

    return make_abd(arg, bounds)


def pick_choices(lts: Lts, state, tid: str) -> frozenset[int]:
    """Values a pending read of `tid` may still return by its pending choice."""
    i = lts.threads.index(tid)
    if isinstance(lts, (Wsr, Dr)):
        pcs = state[2] if isinstance(lts, Wsr) else state[4]
        vss = state[3] if isinstance(lts, Wsr) else state[5]
        if pcs[i] != "r_l":
            raise NotAtPick(f"thread {tid} is not choosing a value")
        return frozenset(vss[i])
    if isinstance(lts, KLoad):
        _, _, pcs, loads, _ = state
        if pcs[i] != "r_e":
            raise NotAtPick(f"thread {tid} has not finished its loads")
        return frozenset(loads[i])
    raise NotAtPick(f"{lts.name} reads have no pending choice")
