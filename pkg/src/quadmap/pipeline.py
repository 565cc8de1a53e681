"""Time-sequential compression loop.

At each step the sender forms the innovation between the observed map and
the receiver's last estimate, picks the best quadtree for the step's leaf
budget, and transmits the leaf means.  Both ends then apply the clipping
decoder, so the sender's replica of the estimate stays in lockstep with the
receiver.
"""

from dataclasses import dataclass
from fractions import Fraction
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_grid, check_leaf_budget
from .decoder import apply_update, clip_decode
from .encoder import encode, solve
from .exceptions import ConfigurationError, ContractViolation, DimensionError
from .grid import OccupancyGrid, frobenius_distance, innovation, uniform_grid
from .payload import payload_size_bits, to_float32_values

BOUND_TOL = 1e-9


def _as_fraction(x):
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class BandwidthSchedule:
    """Per-step leaf budgets."""

    budgets: tuple

    def __post_init__(self):
        budgets = tuple(check_leaf_budget(n) for n in self.budgets)
        object.__setattr__(self, "budgets", budgets)

    @classmethod
    def from_fractions(cls, fractions, depth):
        """Budgets ``max(1, floor(p * 4**depth))`` for fractions ``p`` of the cell count."""
        cells = 4**depth
        budgets = []
        for p in fractions:
            p = _as_fraction(p)
            if p < 0:
                raise ConfigurationError(f"negative bandwidth fraction {p}")
            budgets.append(max(1, math.floor(p * cells)))
        return cls(tuple(budgets))

    @classmethod
    def from_percentages(cls, percents, depth):
        return cls.from_fractions([_as_fraction(p) / 100 for p in percents], depth)

    @classmethod
    def from_bits(cls, bit_budgets, bits_per_cell):
        """Leaf budgets ``floor(b_k / b)`` from per-step bit budgets."""
        if bits_per_cell <= 0:
            raise ConfigurationError("bits per cell must be positive")
        return cls(tuple(max(1, int(b // bits_per_cell)) for b in bit_budgets))

    def __len__(self):
        return len(self.budgets)

    def __iter__(self):
        return iter(self.budgets)


@dataclass(frozen=True)
class StepRecord:
    step: int
    budget_leaves: int
    leaves_used: int
    innovation_distortion: float
    decode_distortion: float
    estimate_error: float
    payload_bits: int
    nominal_bits: int | None = None


@dataclass(frozen=True)
class SessionState:
    estimate: OccupancyGrid
    step: int = 0


def start_session(depth, initial_value=0.5):
    return SessionState(uniform_grid(depth, initial_value), 0)


def step(state, observed, leaf_budget, solver="dp", through_payload=False,
         bits_per_cell=None):
    """Advance one time step.

    Returns ``(encoding, record, new_state)``.  With ``through_payload`` the
    leaf values are rounded exactly as the wire format carries them, and
    both ends decode from those rounded values.
    """
    leaf_budget = check_leaf_budget(leaf_budget)
    if not isinstance(observed, OccupancyGrid):
        observed = OccupancyGrid(observed)
    estimate = state.estimate
    if observed.depth != estimate.depth:
        raise DimensionError(
            f"observed map depth {observed.depth} does not match estimate depth {estimate.depth}"
        )

    xi = innovation(observed, estimate)
    topology = solve(xi, leaf_budget, solver)
    enc = encode(xi, topology)
    if through_payload:
        enc = to_float32_values(enc)
    z = enc.to_grid()
    v = clip_decode(z, estimate)
    new_estimate = apply_update(estimate, v)

    record = StepRecord(
        step=state.step + 1,
        budget_leaves=leaf_budget,
        leaves_used=enc.n_leaves,
        innovation_distortion=frobenius_distance(xi, z),
        decode_distortion=frobenius_distance(z, v.values),
        estimate_error=frobenius_distance(observed, new_estimate),
        payload_bits=payload_size_bits(topology),
        nominal_bits=None if bits_per_cell is None else bits_per_cell * enc.n_leaves,
    )
    if record.leaves_used > leaf_budget:
        raise ContractViolation(f"{record.leaves_used} leaves exceed budget {leaf_budget}")
    bound = record.innovation_distortion + record.decode_distortion
    if record.estimate_error > bound + BOUND_TOL:
        raise ContractViolation(
            f"estimate error {record.estimate_error!r} exceeds encode+decode bound {bound!r}"
        )
    return enc, record, SessionState(new_estimate, state.step + 1)


def iter_steps(maps, schedule, initial_value=0.5, solver="dp", through_payload=False,
               bits_per_cell=None):
    """Yield ``(observed, encoding, record, state)`` one map at a time."""
    state = None
    for observed, budget in zip(maps, schedule, strict=True):
        if not isinstance(observed, OccupancyGrid):
            observed = OccupancyGrid(observed)
        if state is None:
            state = start_session(observed.depth, initial_value)
        enc, record, state = step(state, observed, budget, solver, through_payload,
                                  bits_per_cell)
        yield observed, enc, record, state


def run(maps, schedule, initial_value=0.5, solver="dp", through_payload=False,
        bits_per_cell=None):
    """Run the whole loop and return one :class:`StepRecord` per map."""
    if not isinstance(maps, (list, tuple)):
        maps = list(maps)
    if len(maps) != len(schedule):
        raise ConfigurationError(
            f"{len(maps)} maps but {len(schedule)} budgets in the schedule"
        )
    return [rec for _, _, rec, _ in iter_steps(maps, schedule, initial_value, solver,
                                               through_payload, bits_per_cell)]


class MapCompressor(BaseEstimator):
    """Stateful sender/receiver pair for a stream of occupancy grids.

    Call :meth:`partial_fit` once per observed map; the receiver estimate is
    kept in ``estimate_`` and the per-step metrics in ``records_``.

    Parameters
    ----------
    initial_estimate : float, default=0.5
        Value of every cell of the receiver's estimate before the first step.
    solver : {"dp", "bnb", "bruteforce"}, default="dp"
    through_payload : bool, default=False
        Round leaf values to the wire precision before decoding.
    """

    def __init__(self, initial_estimate=0.5, solver="dp", through_payload=False):
        self.initial_estimate = initial_estimate
        self.solver = solver
        self.through_payload = through_payload

    def partial_fit(self, X, y=None, leaf_budget=1):
        values, depth = check_grid(X, name="observed map")
        if not hasattr(self, "state_"):
            self.state_ = start_session(depth, self.initial_estimate)
            self.records_ = []
        enc, record, self.state_ = step(self.state_, values, leaf_budget, self.solver,
                                        self.through_payload)
        self.last_encoding_ = enc
        self.records_.append(record)
        return self

    def fit(self, X, y=None, schedule=None):
        """Compress the sequence ``X`` of maps from a fresh session."""
        maps = list(X)
        if schedule is None:
            raise ConfigurationError("fit requires a schedule of leaf budgets")
        if len(maps) != len(schedule):
            raise ConfigurationError(f"{len(maps)} maps but {len(schedule)} budgets")
        for attr in ("state_", "records_", "last_encoding_"):
            self.__dict__.pop(attr, None)
        self.records_ = []
        for observed, budget in zip(maps, schedule):
            self.partial_fit(observed, leaf_budget=budget)
        return self

    @property
    def estimate_(self):
        check_is_fitted(self, "state_")
        return np.array(self.state_.estimate.values)
