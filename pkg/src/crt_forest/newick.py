"""Newick serialization for trees (subset grammar).

Every node carries ``:length``; leaf labels are ``L<k>`` with k the stable
vertex id, internal labels are optional (the writer emits them so ids
survive a round trip).  Child order in the file is authoritative.  Lengths
are written with repr(), which round-trips doubles exactly.

Both the writer and the parser are iterative, so arbitrarily deep
caterpillar trees do not hit the interpreter recursion limit.
"""

from __future__ import annotations

import re

import numpy as np

from .errors import MalformedNewick
from .trees import Tree

__all__ = ["to_newick", "from_newick", "write_newick_file", "read_newick_file"]

_LABEL_RE = re.compile(r"L(\d+)$")
_TOKEN_STOP = set("(),:;")


def _format_length(x: float) -> str:
    return repr(float(x))


def to_newick(tree: Tree) -> str:
    """Serialize a tree to a single-line Newick string."""
    ids = tree.ids
    lengths = tree.edge_length
    indptr, order = tree.children_csr()
    parts: list[str] = []
    stack_v = [0]
    stack_c = [int(indptr[0])]
    while stack_v:
        v = stack_v[-1]
        c = stack_c[-1]
        begin, end = int(indptr[v]), int(indptr[v + 1])
        if begin == end:
            parts.append(f"L{int(ids[v])}:{_format_length(lengths[v])}")
            stack_v.pop()
            stack_c.pop()
            continue
        if c == begin:
            parts.append("(")
        if c < end:
            if c > begin:
                parts.append(",")
            stack_c[-1] = c + 1
            w = int(order[c])
            stack_v.append(w)
            stack_c.append(int(indptr[w]))
        else:
            parts.append(f")L{int(ids[v])}:{_format_length(lengths[v])}")
            stack_v.pop()
            stack_c.pop()
    parts.append(";")
    return "".join(parts)


def from_newick(text: str) -> Tree:
    """Parse a Newick string into a Tree."""
    s = text.strip()
    if not s.endswith(";"):
        raise MalformedNewick("newick string must end with ';'")
    s = s[:-1].strip()
    if not s:
        raise MalformedNewick("empty newick string")

    parents: list[int] = []
    lengths: list[float] = []
    labels: list[int | None] = []

    def new_node(parent: int) -> int:
        parents.append(parent)
        lengths.append(np.nan)
        labels.append(None)
        return len(parents) - 1

    i = 0
    ln = len(s)
    stack: list[int] = []
    last_closed: int | None = None  # node awaiting its label/length suffix
    root = -1

    def read_token() -> str:
        nonlocal i
        j = i
        while j < ln and s[j] not in _TOKEN_STOP and not s[j].isspace():
            j += 1
        tok = s[i:j]
        i = j
        return tok

    def apply_suffix(node: int) -> None:
        """Consume optional label and mandatory ':length' after a node."""
        nonlocal i
        tok = read_token()
        if tok:
            m = _LABEL_RE.match(tok)
            if not m:
                raise MalformedNewick(f"unsupported label {tok!r} at position {i}")
            labels[node] = int(m.group(1))
        if i < ln and s[i] == ":":
            i += 1
            num = read_token()
            try:
                lengths[node] = float(num)
            except ValueError:
                raise MalformedNewick(
                    f"invalid branch length {num!r} at position {i}"
                ) from None
        else:
            lengths[node] = 0.0 if parents[node] < 0 else np.nan

    while i < ln:
        ch = s[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "(":
            parent = stack[-1] if stack else -1
            node = new_node(parent)
            if parent < 0:
                if root >= 0:
                    raise MalformedNewick("multiple top-level nodes")
                root = node
            stack.append(node)
            i += 1
        elif ch == ",":
            if not stack:
                raise MalformedNewick(f"',' outside parentheses at position {i}")
            i += 1
        elif ch == ")":
            if not stack:
                raise MalformedNewick(f"unbalanced ')' at position {i}")
            node = stack.pop()
            i += 1
            apply_suffix(node)
        else:
            parent = stack[-1] if stack else -1
            node = new_node(parent)
            if parent < 0:
                if root >= 0:
                    raise MalformedNewick("multiple top-level nodes")
                root = node
            apply_suffix(node)
    if stack:
        raise MalformedNewick("unbalanced '(' at end of string")
    if root < 0:
        raise MalformedNewick("no root node found")

    n = len(parents)
    length_arr = np.asarray(lengths, dtype=np.float64)
    if np.isnan(length_arr[root]):
        length_arr[root] = 0.0
    if np.any(np.isnan(length_arr)):
        raise MalformedNewick("every non-root node must carry ':length'")

    given = [l for l in labels if l is not None]
    if len(set(given)) != len(given):
        raise MalformedNewick("duplicate vertex labels")
    next_id = max(given, default=-1) + 1
    ids = np.empty(n, dtype=np.int64)
    for j, lab in enumerate(labels):
        if lab is None:
            ids[j] = next_id
            next_id += 1
        else:
            ids[j] = lab
    return Tree(np.asarray(parents, dtype=np.int64), length_arr, ids=ids)


def write_newick_file(trees, path) -> None:
    """Write one Newick string per line."""
    with open(path, "w") as fh:
        for t in trees:
            fh.write(to_newick(t))
            fh.write("\n")


def read_newick_file(path) -> list[Tree]:
    """Read one tree per non-empty line; errors carry the line number."""
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(from_newick(line))
            except MalformedNewick as exc:
                raise MalformedNewick(f"{path}:{lineno}: {exc}") from None
    if not out:
        raise MalformedNewick(f"{path}: no trees found")
    return out
