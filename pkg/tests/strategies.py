"""Hypothesis strategies for histories, trees and random walks."""

from hypothesis import strategies as st

from linlab.classes import _FixtureLts
from linlab.lts import READ, WRITE, ExecutionTree, Inv, Res

THREADS = ("A", "B", "C")
WRITE_VALUES = (1, 2)
READ_VALUES = (0, 1, 2)


def next_labels(history, max_ops, threads=THREADS):
    """Every label that keeps `history` well formed within `max_ops` operations."""
    open_ops, used, count = {}, {}, 0
    for lab in history:
        if isinstance(lab, Inv):
            open_ops[lab.tid] = lab
            used[lab.tid] = used.get(lab.tid, 0) + 1
            count += 1
        elif isinstance(lab, Res):
            del open_ops[lab.tid]
    out = []
    for t in threads:
        if t in open_ops:
            inv = open_ops[t]
            if inv.method == READ:
                out += [Res(READ, v, t, inv.opid) for v in READ_VALUES]
            else:
                out.append(Res(WRITE, None, t, inv.opid))
        elif count < max_ops:
            opid = 10 * (threads.index(t) + 1) + used.get(t, 0)
            out.append(Inv(READ, None, t, opid))
            out += [Inv(WRITE, v, t, opid) for v in WRITE_VALUES]
    return out


@st.composite
def histories(draw, max_ops=6, max_len=12):
    history = []
    for _ in range(draw(st.integers(0, max_len))):
        options = next_labels(history, max_ops)
        if not options:
            break
        history.append(draw(st.sampled_from(options)))
    return tuple(history)


@st.composite
def small_trees(draw, max_ops=4, max_nodes=6):
    """Trees of external labels only; states are the paths, so no subtree sharing."""
    tree = ExecutionTree(_FixtureLts())
    for _ in range(draw(st.integers(0, max_nodes - 1))):
        node = draw(st.integers(0, len(tree) - 1))
        options = next_labels(tree.path_labels(node), max_ops)
        if not options:
            continue
        lab = draw(st.sampled_from(options))
        tree.add(node, lab, tree.path_labels(node) + (lab,))
    return tree


@st.composite
def walks(draw, lts, max_steps=40):
    """A random maximal-or-truncated run of `lts` as a list of (pre, label, post)."""
    state = lts.initial
    steps = []
    for _ in range(draw(st.integers(0, max_steps))):
        moves = lts.enabled(state)
        if not moves:
            break
        lab, post = moves[draw(st.integers(0, len(moves) - 1))]
        steps.append((state, lab, post))
        state = post
    return steps
