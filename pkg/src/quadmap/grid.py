"""Occupancy grids, innovation maps and elementary map arithmetic.

Cell ``(i, j)`` (1-based) of a depth-``l`` grid sits at row-major flat index
``(i - 1) * 2**l + (j - 1)``; internally grids are 2-D float64 arrays.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_grid, check_same_shape
from .exceptions import DimensionError, DomainError


@dataclass(frozen=True, eq=False)
class _Grid:
    values: np.ndarray

    _low = 0.0
    _high = 1.0

    def __post_init__(self):
        values, _ = check_grid(self.values, self._low, self._high,
                               name=type(self).__name__)
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def depth(self):
        return self.values.shape[0].bit_length() - 1

    @property
    def side(self):
        return self.values.shape[0]

    @property
    def flat(self):
        """Row-major view of length ``4**depth``."""
        return self.values.ravel()

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


class OccupancyGrid(_Grid):
    """Square grid of occupancy probabilities in [0, 1]."""


class InnovationMap(_Grid):
    """Square grid of occupancy discrepancies in [-1, 1]."""

    _low = -1.0
    _high = 1.0


def as_values(x):
    """Return the 2-D float array behind a grid type or array-like."""
    if isinstance(x, _Grid):
        return x.values
    return np.asarray(x, dtype=np.float64)


def innovation(current, estimate_prev):
    """Map innovation ``current - estimate_prev``: what the receiver does not know yet."""
    cur = as_values(current)
    est = as_values(estimate_prev)
    if cur.shape != est.shape:
        raise DimensionError(
            f"depth mismatch: observed map {cur.shape} vs estimate {est.shape}"
        )
    return InnovationMap(cur - est)


def frobenius_distance(a, b):
    a = as_values(a)
    b = as_values(b)
    check_same_shape(a, b)
    return float(np.sqrt(np.sum((a - b) ** 2)))


def uniform_grid(depth, value=0.5):
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"occupancy value {value!r} outside [0, 1]")
    side = 1 << depth
    return OccupancyGrid(np.full((side, side), float(value)))
