"""Quadtree encoding of an innovation map under a leaf budget.

The squared encoding error of any valid pruning ``z`` decomposes as

    D(z)^2 = D(root)^2 + z . delta

where ``delta[t] <= 0`` is the change caused by expanding interior node ``t``
when every leaf is reproduced by the mean of its cells.  Choosing ``z`` is a
tree knapsack: pick a rooted set of at most ``(budget - 1) // 3`` expansions
minimising the summed ``delta``.  :func:`solve_budgeted_tree` solves it
exactly with a dynamic program; :func:`solve_branch_and_bound` and
:func:`solve_bruteforce` are independent routes to the same optimum.
"""

from dataclasses import dataclass
from functools import cached_property, lru_cache
import heapq

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_leaf_budget
from .exceptions import CapacityError, DimensionError, DomainError
from .grid import InnovationMap, as_values
from .quadtree import (
    BRANCHING,
    TreeTopology,
    children,
    enumerate_valid,
    leaf_count,
    leaves,
    level_start,
    morton_order,
    n_interior,
    root_tree,
)

ZERO_GAIN_TOL = 1e-12
SOLVERS = ("dp", "bnb", "bruteforce")


def _innovation_values(xi):
    if isinstance(xi, InnovationMap):
        return xi.values
    values, _ = check_grid(xi, -1.0, 1.0, name="innovation")
    return values


def _check_depth(values, topology):
    depth = values.shape[0].bit_length() - 1
    if depth != topology.depth:
        raise DimensionError(
            f"innovation depth {depth} does not match topology depth {topology.depth}"
        )


@dataclass(frozen=True, eq=False)
class EncodedInnovation:
    """A pruned topology plus one reproduction value per leaf (preorder)."""

    topology: TreeTopology
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).reshape(-1)
        n = leaf_count(self.topology)
        if vals.size != n:
            raise DimensionError(f"{vals.size} reproduction values for {n} leaves")
        if np.any(np.abs(vals) > 1.0) or not np.all(np.isfinite(vals)):
            raise DomainError("reproduction values must lie in [-1, 1]")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @cached_property
    def regions(self):
        return leaves(self.topology)

    @property
    def n_leaves(self):
        return self.values.size

    def to_grid(self):
        """Expand to a full-resolution array, constant on every leaf block."""
        side = 1 << self.topology.depth
        out = np.empty((side, side))
        for region, g in zip(self.regions, self.values):
            out[region.slices] = g
        return out

    def __eq__(self, other):
        if not isinstance(other, EncodedInnovation):
            return NotImplemented
        return self.topology == other.topology and np.array_equal(self.values, other.values)

    __hash__ = None


def reproduction_points(xi, topology):
    """Mean of ``xi`` over each leaf region, in leaf order."""
    values = _innovation_values(xi)
    _check_depth(values, topology)
    return np.array([values[r.slices].mean() for r in leaves(topology)])


def encode(xi, topology):
    values = _innovation_values(xi)
    _check_depth(values, topology)
    return EncodedInnovation(topology, reproduction_points(values, topology))


def encoder_distortion(xi, topology):
    """Frobenius distance between ``xi`` and its encoding under ``topology``."""
    values = _innovation_values(xi)
    z = encode(values, topology).to_grid()
    return float(np.sqrt(np.sum((values - z) ** 2)))


def _level_sums(values):
    """Per-level node sums in BFS order, finest level last."""
    depth = values.shape[0].bit_length() - 1
    sums = [values.ravel()[morton_order(depth)]]
    for _ in range(depth):
        sums.append(sums[-1].reshape(-1, BRANCHING).sum(axis=1))
    return sums[::-1]


def delta_distortion(xi):
    """Change in squared encoding error from expanding each interior node.

    Computed from per-node (count, sum) aggregates in a single bottom-up pass:
    expanding a node holding ``h`` cells whose children have means ``s_i``
    changes the squared error by ``-(h / 4) * sum_i (s_i - mean(s))**2``.
    """
    values = _innovation_values(xi)
    depth = values.shape[0].bit_length() - 1
    sums = _level_sums(values)
    out = np.empty(n_interior(depth))
    for level in range(depth):
        h = BRANCHING ** (depth - level)
        s = sums[level + 1].reshape(-1, BRANCHING) / (h // BRANCHING)
        dev = s - s.mean(axis=1, keepdims=True)
        start = level_start(level)
        out[start:start + s.shape[0]] = -(h / BRANCHING) * np.sum(dev * dev, axis=1)
    out.setflags(write=False)
    return out


def delta_distortion_quadratic(xi):
    """Same quantity as :func:`delta_distortion`, via ``s^T H s``.

    ``H`` has diagonal ``(h(t) - h(t_i) * 4**2) / 4**2`` and off-diagonal
    ``h(t) / 4**2``, with ``h`` the number of unit cells under a node.
    """
    values = _innovation_values(xi)
    depth = values.shape[0].bit_length() - 1
    sums = _level_sums(values)
    theta2 = BRANCHING * BRANCHING
    out = np.empty(n_interior(depth))
    for level in range(depth):
        h = BRANCHING ** (depth - level)
        h_child = np.full(BRANCHING, BRANCHING ** (depth - level - 1))
        H = np.full((BRANCHING, BRANCHING), h / theta2)
        H[np.diag_indices(BRANCHING)] = (h - h_child * theta2) / theta2
        s = sums[level + 1].reshape(-1, BRANCHING) / h_child
        start = level_start(level)
        out[start:start + s.shape[0]] = np.einsum("ni,ij,nj->n", s, H, s)
    return out


def objective(delta, topology):
    """``z . delta`` for the topology's expansion bits."""
    return float(np.sum(np.asarray(delta)[topology.expanded]))


def max_expansions(leaf_budget):
    return (leaf_budget - 1) // (BRANCHING - 1)


def _clamped(delta):
    return np.where(delta > -ZERO_GAIN_TOL, 0.0, delta)


def _minplus(A, B, cap):
    """Batched (min, +) convolution of row arrays, truncated to length cap + 1.

    Returns the combined costs and, per entry, the share given to ``B``.
    Ties keep the smallest share for ``B``.
    """
    n, a1 = A.shape
    b1 = B.shape[1]
    length = min(a1 + b1 - 2, cap) + 1
    C = np.full((n, length), np.inf)
    arg = np.zeros((n, length), dtype=np.int32)
    for i in range(min(b1 - 1, cap) + 1):
        span = min(a1, length - i)
        cand = A[:, :span] + B[:, i:i + 1]
        region = C[:, i:i + span]
        better = cand < region
        region[better] = cand[better]
        arg[:, i:i + span][better] = i
    return C, arg


def _select_dp(delta, depth, m):
    """Exact tree-knapsack selection over the BFS-indexed ``delta`` vector.

    ``F[t][j]`` is the least summed delta using exactly ``j`` expansions in
    the subtree of ``t`` (with ``t`` expanded when ``j >= 1``).  Levels are
    processed bottom-up with all nodes of a level batched together.
    """
    bits = np.zeros(n_interior(depth), dtype=bool)
    if depth == 0 or m == 0:
        return bits
    delta = _clamped(np.asarray(delta, dtype=np.float64))

    tables = {}
    F = None
    for level in range(depth - 1, -1, -1):
        start = level_start(level)
        count = BRANCHING**level
        d = delta[start:start + count]
        cap = min(m, n_interior(depth - level))
        if F is None:
            G = np.zeros((count, 1))
            args = ()
        else:
            kids = F.reshape(count, BRANCHING, -1)
            G = kids[:, 0]
            args = []
            for k in range(1, BRANCHING):
                G, arg = _minplus(G, kids[:, k], cap - 1)
                args.append(arg)
        tables[level] = args
        F = np.empty((count, G.shape[1] + 1))
        F[:, 0] = 0.0
        F[:, 1:] = d[:, None] + G

    budget = np.array([int(np.argmin(F[0]))])
    for level in range(depth):
        start = level_start(level)
        active = budget > 0
        bits[start:start + budget.size] = active
        if level == depth - 1:
            break
        rem = np.where(active, budget - 1, 0)
        shares = np.zeros((budget.size, BRANCHING), dtype=np.int64)
        rows = np.arange(budget.size)
        for k in range(BRANCHING - 1, 0, -1):
            share = tables[level][k - 1][rows, rem]
            shares[:, k] = np.where(active, share, 0)
            rem = rem - shares[:, k]
        shares[:, 0] = np.where(active, rem, 0)
        budget = shares.reshape(-1)
    return bits


def solve_budgeted_tree(xi, leaf_budget):
    """Optimal valid topology with at most ``leaf_budget`` leaves.

    Among optimal trees the one with fewest expansions is returned; nodes
    whose expansion gains nothing are only expanded to reach descendants.
    """
    leaf_budget = check_leaf_budget(leaf_budget)
    values = _innovation_values(xi)
    depth = values.shape[0].bit_length() - 1
    delta = delta_distortion(values)
    bits = _select_dp(delta, depth, max_expansions(leaf_budget))
    return TreeTopology(depth, bits)


@lru_cache(maxsize=4)
def _valid_bit_matrix(depth):
    topologies = enumerate_valid(depth)
    mat = np.array([t.expanded for t in topologies], dtype=bool).reshape(
        len(topologies), n_interior(depth)
    )
    mat.setflags(write=False)
    return mat


def _tie_key(bits):
    return (int(bits.sum()), tuple(np.flatnonzero(bits)))


def solve_bruteforce(xi, leaf_budget):
    """Exhaustive search over every valid topology (depth <= 3)."""
    leaf_budget = check_leaf_budget(leaf_budget)
    values = _innovation_values(xi)
    depth = values.shape[0].bit_length() - 1
    if depth > 3:
        raise CapacityError(f"brute force limited to depth <= 3, got {depth}")
    delta = _clamped(delta_distortion(values))
    mat = _valid_bit_matrix(depth)
    counts = mat.sum(axis=1)
    feasible = np.flatnonzero(counts <= max_expansions(leaf_budget))
    scores = mat[feasible].astype(np.float64) @ delta if delta.size else np.zeros(feasible.size)
    best = scores.min()
    tied = feasible[scores == best]
    pick = min(tied, key=lambda r: _tie_key(mat[r]))
    return TreeTopology(depth, mat[pick])


def solve_branch_and_bound(xi, leaf_budget):
    """Depth-first 0/1 branch and bound over the expansion bits.

    Branches on the lowest-numbered undecided node whose parent is expanded.
    The bound relaxes precedence: the current cost plus the most negative
    remaining deltas reachable below the frontier.
    """
    leaf_budget = check_leaf_budget(leaf_budget)
    values = _innovation_values(xi)
    depth = values.shape[0].bit_length() - 1
    n_int = n_interior(depth)
    m = max_expansions(leaf_budget)
    if n_int == 0 or m == 0:
        return root_tree(depth)
    delta = _clamped(delta_distortion(values))

    def subtree_costs(node):
        out = []
        stack = [node]
        while stack:
            t = stack.pop()
            if t < n_int:
                if delta[t] < 0:
                    out.append(delta[t])
                stack.extend(children(t))
        return out

    best = {"key": (0.0, 0, ()), "chosen": ()}

    def bound(cost, frontier, room):
        pool = [c for t in frontier for c in subtree_costs(t)]
        return cost + sum(heapq.nsmallest(room, pool))

    def search(chosen, frontier, cost):
        key = (cost, len(chosen), tuple(sorted(chosen)))
        if key < best["key"]:
            best["key"] = key
            best["chosen"] = tuple(chosen)
        room = m - len(chosen)
        if room == 0 or not frontier:
            return
        if bound(cost, frontier, room) > best["key"][0]:
            return
        t = frontier[0]
        rest = frontier[1:]
        if delta[t] < 0 or any(subtree_costs(c) for c in children(t) if c < n_int):
            grown = sorted(rest + [c for c in children(t) if c < n_int])
            search(chosen + [t], grown, cost + delta[t])
        search(chosen, rest, cost)

    search([], [0], 0.0)
    return TreeTopology.from_nodes(depth, best["chosen"])


_SOLVER_FUNCS = {
    "dp": solve_budgeted_tree,
    "bnb": solve_branch_and_bound,
    "bruteforce": solve_bruteforce,
}


def solve(xi, leaf_budget, solver="dp"):
    try:
        func = _SOLVER_FUNCS[solver]
    except KeyError:
        raise ValueError(f"unknown solver {solver!r}; expected one of {SOLVERS}") from None
    return func(xi, leaf_budget)


class QuadtreeEncoder(TransformerMixin, BaseEstimator):
    """Budgeted quadtree quantizer for innovation maps.

    ``fit`` chooses the pruned tree for an innovation map; ``transform``
    replaces every leaf block of a map by its mean under that tree.

    Parameters
    ----------
    leaf_budget : int, default=1
        Maximum number of leaves (transmitted values) of the tree.
    solver : {"dp", "bnb", "bruteforce"}, default="dp"
        Exact selection routine.

    Attributes
    ----------
    topology_ : TreeTopology
    delta_ : ndarray of shape (n_interior,)
    depth_ : int
    n_leaves_ : int
    """

    def __init__(self, leaf_budget=1, solver="dp"):
        self.leaf_budget = leaf_budget
        self.solver = solver

    def fit(self, X, y=None):
        values = _innovation_values(X)
        self.depth_ = values.shape[0].bit_length() - 1
        self.topology_ = solve(values, self.leaf_budget, self.solver)
        self.delta_ = delta_distortion(values)
        self.n_leaves_ = leaf_count(self.topology_)
        return self

    def encode(self, X):
        check_is_fitted(self, "topology_")
        return encode(_innovation_values(X), self.topology_)

    def transform(self, X):
        return self.encode(X).to_grid()

    def distortion(self, X):
        check_is_fitted(self, "topology_")
        return encoder_distortion(as_values(X), self.topology_)
