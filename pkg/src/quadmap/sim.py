"""Synthetic environments: static random maps and a moving circular obstacle.

The obstacle ("amoeba") follows a Dijkstra path over the base map.  The
path cost is a stand-in: entering a cell costs ``0.5 + occupancy`` times the
step length (1 orthogonal, sqrt(2) diagonal).
"""

from dataclasses import dataclass
import heapq
import math

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .grid import OccupancyGrid, as_values

PATH_EPSILON = 0.5
QUANTUM = 2.0**-16

_MOVES = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]


def _box_blur(a):
    p = np.pad(a, 1, mode="edge")
    n = a.shape[0]
    acc = np.zeros_like(a)
    for di in range(3):
        for dj in range(3):
            acc += p[di:di + n, dj:dj + n]
    return acc / 9.0


def random_map(depth, seed=0, smoothness=2):
    """Random occupancy grid, deterministic in ``seed``.

    ``smoothness`` box-blur passes correlate neighbouring cells; the blurred
    field is then stretched back to span [0, 1].  Values are snapped to
    multiples of 2**-16 so that innovation arithmetic on them is exact.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    if smoothness < 0:
        raise DomainError(f"smoothness must be >= 0, got {smoothness}")
    rng = np.random.default_rng(seed)
    side = 1 << depth
    field = rng.random((side, side))
    for _ in range(smoothness):
        field = _box_blur(field)
    if smoothness:
        lo, hi = field.min(), field.max()
        if hi > lo:
            field = (field - lo) / (hi - lo)
    field = np.clip(np.round(field / QUANTUM) * QUANTUM, 0.0, 1.0)
    return OccupancyGrid(field)


def path_weights(grid):
    """Per-cell traversal weight ``0.5 + occupancy`` (strictly positive)."""
    return PATH_EPSILON + as_values(grid)


def _check_cell(cell, side, what):
    i, j = cell
    if not (1 <= i <= side and 1 <= j <= side):
        raise DomainError(f"{what} cell {cell} outside the {side}x{side} grid")


def shortest_path(grid, start, goal):
    """Least-cost 8-connected path between 1-based cells, inclusive of both ends.

    Ties are resolved by popping the frontier in (distance, row-major index)
    order and only relaxing on strict improvement.
    """
    w = path_weights(grid)
    side = w.shape[0]
    _check_cell(start, side, "start")
    _check_cell(goal, side, "goal")
    if tuple(start) == tuple(goal):
        raise DomainError("start and goal must differ")

    src = (start[0] - 1) * side + (start[1] - 1)
    dst = (goal[0] - 1) * side + (goal[1] - 1)
    dist = {src: 0.0}
    prev = {}
    done = set()
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        ui, uj = divmod(u, side)
        for di, dj in _MOVES:
            vi, vj = ui + di, uj + dj
            if not (0 <= vi < side and 0 <= vj < side):
                continue
            v = vi * side + vj
            if v in done:
                continue
            nd = d + w[vi, vj] * (math.sqrt(2.0) if di and dj else 1.0)
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))

    path = [dst]
    while path[-1] != src:
        path.append(prev[path[-1]])
    return [(u // side + 1, u % side + 1) for u in reversed(path)]


def path_cost(grid, path):
    w = path_weights(grid)
    total = 0.0
    for (ai, aj), (bi, bj) in zip(path, path[1:]):
        step = math.sqrt(2.0) if ai != bi and aj != bj else 1.0
        total += w[bi - 1, bj - 1] * step
    return total


@dataclass(frozen=True)
class AmoebaScenario:
    base: OccupancyGrid
    path: tuple
    radius: int = 8
    occupancy_value: float = 1.0

    def __post_init__(self):
        path = tuple(tuple(int(c) for c in cell) for cell in self.path)
        side = self.base.side
        for cell in path:
            _check_cell(cell, side, "path")
        for a, b in zip(path, path[1:]):
            if max(abs(a[0] - b[0]), abs(a[1] - b[1])) != 1:
                raise ConfigurationError(f"path cells {a} and {b} are not neighbours")
        if self.radius < 0:
            raise DomainError(f"radius must be >= 0, got {self.radius}")
        if not 0.0 <= self.occupancy_value <= 1.0:
            raise DomainError(f"amoeba occupancy {self.occupancy_value} outside [0, 1]")
        object.__setattr__(self, "path", path)


def disk_mask(side, center, radius):
    """Cells whose centres lie within Euclidean ``radius`` of the 1-based ``center``."""
    i, j = np.ogrid[1:side + 1, 1:side + 1]
    return (i - center[0]) ** 2 + (j - center[1]) ** 2 <= radius * radius


def dynamic_sequence(scenario, steps):
    """Frames of the base map with the amoeba stamped at ``path[k]``."""
    if steps > len(scenario.path):
        raise ConfigurationError(
            f"{steps} steps requested but the path has only {len(scenario.path)} cells"
        )
    base = scenario.base.values
    side = base.shape[0]
    frames = []
    for k in range(steps):
        frame = base.copy()
        frame[disk_mask(side, scenario.path[k], scenario.radius)] = scenario.occupancy_value
        frames.append(OccupancyGrid(frame))
    return frames


def amoeba_scenario(depth, seed=0, smoothness=2, radius=8, start=None, goal=None,
                    occupancy_value=1.0):
    """Random base map plus a corner-to-corner shortest path for the amoeba."""
    base = random_map(depth, seed, smoothness)
    side = base.side
    margin = min(radius, (side - 1) // 2)
    start = start or (1 + margin, 1 + margin)
    goal = goal or (side - margin, side - margin)
    path = shortest_path(base, start, goal)
    return AmoebaScenario(base, tuple(path), radius, occupancy_value)


def static_sequence(base, steps):
    return [base] * steps
