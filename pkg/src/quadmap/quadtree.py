"""Indexing of the full quadtree over a 2^l x 2^l grid and its valid prunings.

Nodes are numbered breadth-first from the root (0); the children of node
``t`` are ``4t+1 .. 4t+4`` in the order top-left, top-right, bottom-left,
bottom-right.  A pruned tree is described by one expansion bit per interior
node of the full tree; a bit may be set only if the parent's bit is set.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import CapacityError, DomainError, ValidityError

BRANCHING = 4


def n_interior(depth):
    """Number of interior nodes of the full tree of the given depth."""
    return (BRANCHING**depth - 1) // (BRANCHING - 1)


def n_nodes(depth):
    return (BRANCHING ** (depth + 1) - 1) // (BRANCHING - 1)


def level_start(level):
    """NodeId of the first node on ``level``."""
    return n_interior(level)


def node_level(node):
    if node < 0:
        raise IndexError(f"negative node id {node}")
    level = 0
    while level_start(level + 1) <= node:
        level += 1
    return level


def parent(node):
    return (node - 1) // BRANCHING if node > 0 else None


def children(node):
    first = BRANCHING * node + 1
    return range(first, first + BRANCHING)


def cell_coords(node, depth):
    """Square block covered by ``node`` as 1-based ``(i_min, j_min, side)``."""
    if not 0 <= node < n_nodes(depth):
        raise IndexError(f"node {node} outside the depth-{depth} tree")
    level = node_level(node)
    offset = node - level_start(level)
    row = col = 0
    for shift in range(level - 1, -1, -1):
        digit = (offset >> (2 * shift)) & 3
        row = 2 * row + (digit >> 1)
        col = 2 * col + (digit & 1)
    side = 1 << (depth - level)
    return row * side + 1, col * side + 1, side


@lru_cache(maxsize=None)
def morton_order(depth):
    """Row-major flat indices of the unit cells, ordered by their finest-level NodeId."""
    side = 1 << depth
    offsets = np.arange(side * side, dtype=np.int64)
    row = np.zeros_like(offsets)
    col = np.zeros_like(offsets)
    for shift in range(depth - 1, -1, -1):
        digit = (offsets >> (2 * shift)) & 3
        row = 2 * row + (digit >> 1)
        col = 2 * col + (digit & 1)
    order = row * side + col
    order.setflags(write=False)
    return order


@dataclass(frozen=True)
class Region:
    """Block of unit cells aggregated under one leaf of a pruned tree."""

    node: int
    row: int
    col: int
    side: int

    @property
    def size(self):
        return self.side * self.side

    @property
    def slices(self):
        """0-based numpy slices selecting the block in a 2-D grid."""
        return (slice(self.row - 1, self.row - 1 + self.side),
                slice(self.col - 1, self.col - 1 + self.side))

    @property
    def cells(self):
        return frozenset(
            (i, j)
            for i in range(self.row, self.row + self.side)
            for j in range(self.col, self.col + self.side)
        )


@dataclass(frozen=True, eq=False)
class TreeTopology:
    """Expansion bits ``z`` over the interior nodes of the depth-``depth`` full tree."""

    depth: int
    expanded: np.ndarray

    def __post_init__(self):
        if self.depth < 0:
            raise DomainError(f"depth must be >= 0, got {self.depth}")
        bits = np.asarray(self.expanded)
        if bits.shape != (n_interior(self.depth),):
            raise ValueError(
                f"expected {n_interior(self.depth)} expansion bits, got shape {bits.shape}"
            )
        if bits.dtype != np.bool_:
            if not np.isin(bits, (0, 1)).all():
                raise ValueError("expansion bits must be 0 or 1")
            bits = bits.astype(bool)
        bits = bits.copy()
        bits.setflags(write=False)
        object.__setattr__(self, "expanded", bits)

    @classmethod
    def from_nodes(cls, depth, nodes):
        bits = np.zeros(n_interior(depth), dtype=bool)
        bits[list(nodes)] = True
        return cls(depth, bits)

    @property
    def expanded_nodes(self):
        return tuple(int(t) for t in np.flatnonzero(self.expanded))

    @property
    def n_expanded(self):
        return int(self.expanded.sum())

    def __eq__(self, other):
        if not isinstance(other, TreeTopology):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self.expanded, other.expanded)

    def __hash__(self):
        return hash((self.depth, self.expanded.tobytes()))

    def __repr__(self):
        return f"TreeTopology(depth={self.depth}, expanded={list(self.expanded_nodes)})"


def root_tree(depth):
    return TreeTopology(depth, np.zeros(n_interior(depth), dtype=bool))


def full_tree(depth):
    return TreeTopology(depth, np.ones(n_interior(depth), dtype=bool))


def is_valid(topology):
    bits = topology.expanded
    if bits.size <= 1:
        return True
    nodes = np.arange(1, bits.size)
    return bool(np.all(~bits[1:] | bits[(nodes - 1) // BRANCHING]))


def _require_valid(topology):
    if not is_valid(topology):
        bits = topology.expanded
        bad = next(t for t in range(1, bits.size) if bits[t] and not bits[parent(t)])
        raise ValidityError(f"node {bad} is expanded but its parent {parent(bad)} is not")


def leaf_count(topology):
    _require_valid(topology)
    return (BRANCHING - 1) * topology.n_expanded + 1


def leaves(topology):
    """Leaf regions in depth-first preorder with the fixed child order."""
    _require_valid(topology)
    depth = topology.depth
    bits = topology.expanded
    n_int = bits.size
    out = []
    stack = [0]
    while stack:
        node = stack.pop()
        if node < n_int and bits[node]:
            stack.extend(reversed(children(node)))
        else:
            out.append(Region(node, *cell_coords(node, depth)))
    return out


def enumerate_valid(depth):
    """All valid topologies of the given depth (exhaustive; depth <= 3)."""
    if depth > 3:
        raise CapacityError(f"enumeration of depth-{depth} topologies is too large")

    def subtree(node, level):
        # each option is a tuple of expanded node ids inside this subtree
        if level == depth:
            return [()]
        options = [()]
        child_opts = [subtree(c, level + 1) for c in children(node)]
        combos = [()]
        for opts in child_opts:
            combos = [a + b for a in combos for b in opts]
        options.extend((node,) + c for c in combos)
        return options

    return [TreeTopology.from_nodes(depth, nodes) for nodes in subtree(0, 0)]
