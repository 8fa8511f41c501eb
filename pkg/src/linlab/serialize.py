"""Text, JSON and DOT renderings of executions and execution trees.

The text format has one transition per line:

    <path> <TAB> <pre-key> <TAB> <label> <TAB> <post-key>

where `path` lists child indices from the root (``.``-separated) and keys
are short digests of the canonical state encoding.
"""

from __future__ import annotations

import json

from .errors import InvalidParam
from .lts import Execution, ExecutionTree, short_key

DOT_LIMIT = 2000


def _path_text(path: tuple[int, ...]) -> str:
    return ".".join(str(i) for i in path)


def tree_lines(tree: ExecutionTree) -> list[str]:
    name = getattr(tree.lts, "name", "?")
    lines = [f"# tree lts={name} nodes={len(tree)}"]
    for node in tree.preorder():
        if node == 0:
            continue
        pre = short_key(tree.state[tree.parent[node]])
        post = short_key(tree.state[node])
        lines.append(f"{_path_text(tree.path(node))}\t{pre}\t{tree.label[node]}\t{post}")
    return lines


def tree_text(tree: ExecutionTree) -> str:
    return "\n".join(tree_lines(tree)) + "\n"


def tree_json(tree: ExecutionTree) -> dict:
    nodes = []
    for node in tree.preorder():
        nodes.append({
            "id": node,
            "parent": None if node == 0 else tree.parent[node],
            "path": list(tree.path(node)),
            "label": None if node == 0 else str(tree.label[node]),
            "state": short_key(tree.state[node]),
            "depth": tree.depth[node],
        })
    out = {"lts": getattr(tree.lts, "name", None), "nodes": nodes}
    if tree.bounds is not None:
        out["bounds"] = tree.bounds.describe()
    return out


def tree_dot(tree: ExecutionTree, limit: int = DOT_LIMIT) -> str:
    if len(tree) > limit:
        raise InvalidParam(f"DOT export is limited to {limit} nodes; tree has {len(tree)}")
    lines = ["digraph tree {", "  node [shape=point];"]
    for node in tree.preorder():
        if node:
            label = json.dumps(str(tree.label[node]))
            lines.append(f"  n{tree.parent[node]} -> n{node} [label={label}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def execution_lines(e: Execution) -> list[str]:
    return [f"{short_key(pre)}\t{lab}\t{short_key(post)}" for pre, lab, post in e.transitions]


def execution_text(e: Execution) -> str:
    return "\n".join(execution_lines(e)) + ("\n" if e.transitions else "")


def execution_json(e: Execution) -> dict:
    return {
        "initial": short_key(e.initial),
        "transitions": [
            {"pre": short_key(pre), "label": str(lab), "post": short_key(post)} for pre, lab, post in e.transitions
        ],
    }
