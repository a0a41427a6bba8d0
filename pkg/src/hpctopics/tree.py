"""Topic hierarchy: parsing, validation, and the Gaussian tree prior precision.

The hierarchy is a rooted tree of topic nodes.  Node 0 is always the
corpus-level node; every non-root node is a "topic" that documents may be
labeled with.  Log word rates diffuse down this tree, so the joint prior on a
word's per-node log rates is Gaussian with a sparse precision matrix whose
off-diagonal entries appear only on parent-child edges.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CycleDetectedError,
    DanglingParentError,
    DuplicateIdError,
    InvalidNodeIdError,
    MultipleRootsError,
    NonPositiveVarianceError,
)

TREE_HEADER = ["child_id", "parent_id", "name"]


@dataclass(frozen=True)
class TopicTree:
    """Immutable rooted topic hierarchy.

    Node ids are 0..n_nodes-1 with the root at 0.  Topics (label targets) are
    the non-root nodes, addressed either by node id or by "topic index"
    ``node_id - 1``.  Safe to share read-only across parallel workers.
    """

    names: tuple[str, ...]
    parent: tuple[int | None, ...]
    children: tuple[tuple[int, ...], ...] = field(init=False)
    levels: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        n = len(self.names)
        kids: list[list[int]] = [[] for _ in range(n)]
        for c in range(n):
            p = self.parent[c]
            if p is not None:
                kids[p].append(c)
        object.__setattr__(self, "children", tuple(tuple(sorted(k)) for k in kids))
        levels = [0] * n
        for c in range(1, n):
            levels[c] = levels[self.parent[c]] + 1
        object.__setattr__(self, "levels", tuple(levels))

    @property
    def n_nodes(self) -> int:
        return len(self.names)

    @property
    def n_topics(self) -> int:
        return self.n_nodes - 1

    @property
    def root_id(self) -> int:
        return 0

    @property
    def parent_ids(self) -> tuple[int, ...]:
        """Node ids with at least one child, ascending."""
        return tuple(i for i in range(self.n_nodes) if self.children[i])

    @property
    def leaf_flags(self) -> tuple[bool, ...]:
        return tuple(not self.children[i] for i in range(self.n_nodes))

    @property
    def topic_ids(self) -> tuple[int, ...]:
        return tuple(range(1, self.n_nodes))

    @property
    def depth(self) -> int:
        return max(self.levels)

    def children_of(self, node_id: int) -> tuple[int, ...]:
        return self.children[node_id]

    def parent_of(self, node_id: int) -> int | None:
        return self.parent[node_id]

    def is_ancestor(self, a: int, b: int) -> bool:
        """True when node ``a`` is a strict ancestor of node ``b``."""
        p = self.parent[b]
        while p is not None:
            if p == a:
                return True
            p = self.parent[p]
        return False

    def common_ancestor_level(self, a: int, b: int) -> int:
        """Level of the deepest common ancestor of two nodes."""
        anc = set()
        x: int | None = a
        while x is not None:
            anc.add(x)
            x = self.parent[x]
        y: int | None = b
        while y is not None:
            if y in anc:
                return self.levels[y]
            y = self.parent[y]
        raise CycleDetectedError("nodes do not share a root")  # pragma: no cover

    def to_records(self) -> list[tuple[int, int | None, str]]:
        return [(i, self.parent[i], self.names[i]) for i in range(self.n_nodes)]


def parse_tree(edge_records) -> TopicTree:
    """Build a validated TopicTree from (child_id, parent_id_or_None, name) records."""
    records = list(edge_records)
    seen: set[int] = set()
    roots = []
    for child, parent, _name in records:
        if child in seen:
            raise DuplicateIdError(f"node id {child} appears more than once")
        seen.add(child)
        if parent is None:
            roots.append(child)
    if len(roots) != 1:
        raise MultipleRootsError(f"expected exactly one root node, found {len(roots)}")
    n = len(records)
    if seen != set(range(n)) or roots[0] != 0:
        raise InvalidNodeIdError("node ids must be 0..N-1 with the root at id 0")
    parent_arr: list[int | None] = [None] * n
    names = [""] * n
    for child, parent, name in records:
        if parent is not None and parent not in seen:
            raise DanglingParentError(f"node {child} references unknown parent {parent}")
        parent_arr[child] = parent
        names[child] = str(name)
    # reachability from the root: anything unreachable sits on a cycle
    reached = {0}
    stack = [0]
    kids: dict[int, list[int]] = {}
    for c in range(1, n):
        kids.setdefault(parent_arr[c], []).append(c)
    while stack:
        x = stack.pop()
        for c in kids.get(x, ()):
            reached.add(c)
            stack.append(c)
    if len(reached) != n:
        missing = sorted(set(range(n)) - reached)
        raise CycleDetectedError(f"nodes {missing} are not reachable from the root")
    return TopicTree(names=tuple(names), parent=tuple(parent_arr))


def read_tree_csv(path) -> TopicTree:
    """Read a tree file (header ``child_id,parent_id,name``; root row has empty parent)."""
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != TREE_HEADER:
            raise DanglingParentError(f"bad tree file header in {path!r}: {header!r}")
        for row in reader:
            if not row:
                continue
            child = int(row[0])
            parent = int(row[1]) if row[1].strip() != "" else None
            records.append((child, parent, row[2]))
    return parse_tree(records)


def write_tree_csv(tree: TopicTree, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TREE_HEADER)
        for node_id, parent, name in tree.to_records():
            writer.writerow([node_id, "" if parent is None else parent, name])


def build_precision(tree: TopicTree, gamma2: float, tau2_by_parent) -> np.ndarray:
    """Precision matrix of the joint Gaussian prior on one word's log rates.

    The prior is the Gaussian diffusion down ``tree``: the root log rate has
    variance ``gamma2`` and each child's log rate, given its parent's, has
    variance ``tau2_by_parent[parent_id]``.  The returned matrix equals the
    negative Hessian of the summed conditional log densities, so off-diagonal
    entries are nonzero only on parent-child edges.

    Parameters
    ----------
    gamma2 : float
        Root-level variance, > 0.
    tau2_by_parent : mapping or sequence
        ``tau2_by_parent[p]`` is the child variance under parent node ``p``,
        > 0 for every parent id of the tree.
    """
    if not gamma2 > 0:
        raise NonPositiveVarianceError(f"gamma2 must be positive, got {gamma2}")
    n = tree.n_nodes
    lam = np.zeros((n, n))
    lam[0, 0] = 1.0 / gamma2
    for p in tree.parent_ids:
        tau2 = float(tau2_by_parent[p])
        if not tau2 > 0:
            raise NonPositiveVarianceError(f"tau2 for parent {p} must be positive, got {tau2}")
        w = 1.0 / tau2
        kids = tree.children[p]
        lam[p, p] += w * len(kids)
        for c in kids:
            lam[c, c] += w
            lam[p, c] -= w
            lam[c, p] -= w
    return lam
