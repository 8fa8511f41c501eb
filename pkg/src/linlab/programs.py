"""Client programs that toss a coin and read the shared register."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InvalidParam
from .lts import READ, WRITE, HarnessBounds, Inv, Lts, ProgInternal, Res

COIN_TAGS = ("coin=1", "coin=2")
BARRIER = "barrier"
BARRIER_TID = "*"


@dataclass(frozen=True)
class Instr:
    op: str  # write | read | coin | barrier
    value: int | None = None
    var: str | None = None

    def __str__(self) -> str:
        if self.op == WRITE:
            return f"write({self.value})"
        if self.op == READ:
            return f"{self.var} := read()"
        if self.op == "coin":
            return f"{self.var} := coin()"
        return "barrier"


def write(v: int) -> Instr:
    return Instr(WRITE, v)


def read(var: str) -> Instr:
    return Instr(READ, var=var)


def coin(var: str) -> Instr:
    return Instr("coin", var=var)


BARRIER_INSTR = Instr(BARRIER)

LISTINGS: dict[str, dict[str, tuple[Instr, ...]]] = {
    "P1": {"A": (write(1), write(2), coin("a")), "B": (read("b"),)},
    "P2": {"A": (write(1), coin("a"), BARRIER_INSTR), "B": (write(2), BARRIER_INSTR, read("b"))},
    "P3": {"A": (write(1), BARRIER_INSTR, coin("a")), "B": (write(2), BARRIER_INSTR, read("b"))},
    "P4": {
        "A": (write(1), coin("a"), BARRIER_INSTR),
        "B": (write(2), BARRIER_INSTR, read("b")),
        "C": (read("c"), BARRIER_INSTR),
    },
}


class Program(Lts):
    """A client program as an LTS over register calls and program-internal steps.

    State: (pcs, pending opids, used op counts, variable values).  Responses to
    reads are accepted for every value of the harness alphabet.
    """

    internal_kind = "prog"

    def __init__(self, pid: str, bodies: dict[str, tuple[Instr, ...]], values=(0, 1, 2)):
        self.pid = pid
        self.name = pid
        self.bodies = bodies
        self.threads = tuple(bodies)
        self.values = tuple(values)
        self.variables = tuple(sorted({ins.var for body in bodies.values() for ins in body if ins.var}))
        self.internal_tags = frozenset(COIN_TAGS + (BARRIER,))
        self.bounds = program_bounds(bodies, values)
        self._ids = {t: self.bounds.ids_of(t) for t in self.threads}
        self._barrier = tuple(i for i, t in enumerate(self.threads) if BARRIER_INSTR in bodies[t])
        n = len(self.threads)
        self.initial = ((0,) * n, (None,) * n, (0,) * n, (0,) * len(self.variables))

    def enabled(self, state):
        pcs, pending, used, env = state
        moves = []
        for i, t in enumerate(self.threads):
            body = self.bodies[t]
            if pcs[i] >= len(body):
                continue
            ins = body[pcs[i]]
            if pending[i] is not None:
                opid = pending[i]
                after = (_put(pcs, i, pcs[i] + 1), _put(pending, i, None), used)
                if ins.op == WRITE:
                    moves.append((Res(WRITE, None, t, opid), after + (env,)))
                else:
                    slot = self.variables.index(ins.var)
                    for v in self.values:
                        moves.append((Res(READ, v, t, opid), after + (_put(env, slot, v),)))
            elif ins.op in (WRITE, READ):
                opid = self._ids[t][used[i]]
                lab = Inv(ins.op, ins.value, t, opid)
                moves.append((lab, (pcs, _put(pending, i, opid), _put(used, i, used[i] + 1), env)))
            elif ins.op == "coin":
                slot = self.variables.index(ins.var)
                for c, tag in ((1, COIN_TAGS[0]), (2, COIN_TAGS[1])):
                    moves.append((ProgInternal(tag, t), (_put(pcs, i, pcs[i] + 1), pending, used, _put(env, slot, c))))
        if self._barrier and all(
            pcs[i] < len(self.bodies[self.threads[i]])
            and self.bodies[self.threads[i]][pcs[i]] == BARRIER_INSTR
            for i in self._barrier
        ):
            new_pcs = tuple(pc + 1 if i in self._barrier else pc for i, pc in enumerate(pcs))
            moves.append((ProgInternal(BARRIER, BARRIER_TID), (new_pcs, pending, used, env)))
        return moves

    def is_done(self, state) -> bool:
        pcs = state[0]
        return all(pcs[i] >= len(self.bodies[t]) for i, t in enumerate(self.threads))

    def coin_tossed(self, state) -> bool:
        pcs = state[0]
        for i, t in enumerate(self.threads):
            body = self.bodies[t]
            for j, ins in enumerate(body):
                if ins.op == "coin" and pcs[i] <= j:
                    return False
        return True

    def variable(self, state, var: str) -> int:
        return state[3][self.variables.index(var)]

    def describe_state(self, state):
        pcs, pending, used, env = state
        return {
            "pc": dict(zip(self.threads, pcs)),
            "pending": dict(zip(self.threads, pending)),
            "vars": dict(zip(self.variables, env)),
        }

    def listing(self) -> str:
        cols = [f"{t}: " + "; ".join(str(ins) for ins in body) for t, body in self.bodies.items()]
        return " || ".join(cols)


def _put(seq: tuple, i: int, value) -> tuple:
    return seq[:i] + (value,) + seq[i + 1 :]


def program_bounds(bodies: dict[str, tuple[Instr, ...]], values=(0, 1, 2)) -> HarnessBounds:
    """Harness matching a program: its threads, op counts and calls."""
    ops = {t: sum(1 for ins in body if ins.op in (READ, WRITE)) for t, body in bodies.items()}
    menu = {}
    for t, body in bodies.items():
        calls = []
        for ins in body:
            call = (ins.op, ins.value) if ins.op in (READ, WRITE) else None
            if call and call not in calls:
                calls.append(call)
        menu[t] = calls
    return HarnessBounds(threads=tuple(bodies), ops=ops, values=tuple(values), menu=menu)


def make_program(pid: str, values=(0, 1, 2)) -> Program:
    key = pid.upper()
    if key not in LISTINGS:
        raise InvalidParam(f"unknown program {pid!r}; known: {', '.join(LISTINGS)}")
    return Program(key, LISTINGS[key], values)
