"""Clipping decoder and the receiver's estimate update."""

from dataclasses import dataclass

import numpy as np

from ._validation import check_grid, check_same_shape
from .encoder import EncodedInnovation
from .exceptions import ContractViolation, DimensionError
from .grid import OccupancyGrid, as_values

SLACK = 1e-12


@dataclass(frozen=True, eq=False)
class ClippedUpdate:
    """Update ``V`` that keeps ``estimate + V`` inside [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        values, _ = check_grid(self.values, -1.0, 1.0, name="update")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def depth(self):
        return self.values.shape[0].bit_length() - 1


def _z_values(z):
    if isinstance(z, EncodedInnovation):
        return z.to_grid()
    return as_values(z)


def clip_decode(z, estimate_prev):
    """Project the received innovation onto ``[-estimate, 1 - estimate]`` cellwise.

    ``z`` is either an :class:`EncodedInnovation` or its full-resolution grid.
    """
    zv = _z_values(z)
    est = as_values(estimate_prev)
    if zv.shape != est.shape:
        raise DimensionError(f"innovation {zv.shape} vs estimate {est.shape}")
    return ClippedUpdate(np.minimum(np.maximum(-est, zv), 1.0 - est))


def apply_update(estimate_prev, update):
    est = as_values(estimate_prev)
    v = update.values if isinstance(update, ClippedUpdate) else as_values(update)
    check_same_shape(est, v)
    new = est + v
    if new.min() < -SLACK or new.max() > 1.0 + SLACK:
        raise ContractViolation(
            f"updated estimate leaves [0, 1]: range [{new.min()!r}, {new.max()!r}]"
        )
    # 1 - x + x can round one ulp past 1
    return OccupancyGrid(np.clip(new, 0.0, 1.0))


def decode(z, estimate_prev):
    """Receiver side in one call: clip, then update."""
    return apply_update(estimate_prev, clip_decode(z, estimate_prev))
