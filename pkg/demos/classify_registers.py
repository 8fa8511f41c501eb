"""Decide every linearizability class for the bundled register implementations.

Uses one harness (A writes 1, B writes 2, C reads) and the graph-based
decision procedure, then prints one row per implementation.
"""
from linlab.classes import HIERARCHY, decide_class_lts
from linlab.lts import HarnessBounds
from linlab.registers import make_register

BOUNDS = HarnessBounds(threads=("A", "B", "C"), ops=1, menu={"A": "w1", "B": "w2", "C": "r"}, max_depth=16)


def main():
    print("impl".ljust(8) + "".join(c.value.ljust(14) for c in HIERARCHY))
    for kind in ("atr", "ticket", "wsr", "dr", "tnsr", "dlr"):
        lts = make_register(kind, BOUNDS)
        cells = ["Yes" if decide_class_lts(lts, BOUNDS, c).holds else "No" for c in HIERARCHY]
        print(kind.ljust(8) + "".join(v.ljust(14) for v in cells))


if __name__ == "__main__":
    main()
