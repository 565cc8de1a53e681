"""Input validation helpers for square power-of-two grids."""

import numpy as np
from sklearn.utils import check_array

from .exceptions import DimensionError, DomainError


def grid_depth(side):
    """Return l such that ``side == 2**l``, or raise DimensionError."""
    if side < 1 or side & (side - 1):
        raise DimensionError(f"grid side {side} is not a power of two")
    return side.bit_length() - 1


def check_grid(X, low=0.0, high=1.0, name="grid"):
    """Validate ``X`` as a square 2^l x 2^l float array with values in [low, high].

    Returns a float64 C-contiguous copy-or-view and the depth ``l``.
    """
    X = check_array(np.asarray(X, dtype=np.float64), ensure_2d=True,
                    ensure_min_samples=1, ensure_min_features=1,
                    input_name=name)
    n_rows, n_cols = X.shape
    if n_rows != n_cols:
        raise DimensionError(f"{name} must be square, got shape {X.shape}")
    depth = grid_depth(n_rows)
    bad = (X < low) | (X > high)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise DomainError(
            f"{name} value {X[i, j]!r} at cell ({i + 1},{j + 1}) outside [{low}, {high}]"
        )
    return np.ascontiguousarray(X), depth


def check_same_shape(a, b, what="grids"):
    if a.shape != b.shape:
        raise DimensionError(f"{what} have mismatched shapes {a.shape} and {b.shape}")


def check_leaf_budget(leaf_budget):
    from .exceptions import BudgetError

    if isinstance(leaf_budget, (bool, np.bool_)) or not isinstance(
        leaf_budget, (int, np.integer)
    ):
        raise BudgetError(f"leaf budget must be an integer, got {leaf_budget!r}")
    if leaf_budget < 1:
        raise BudgetError(f"leaf budget must be >= 1, got {leaf_budget}")
    return int(leaf_budget)
