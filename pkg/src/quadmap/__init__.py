"""Bandwidth-limited compression of time-varying occupancy grids.

The sender encodes the difference between its current map and the
receiver's estimate with an optimally pruned quadtree; the receiver applies
a clipping decoder that keeps its estimate a valid occupancy grid.
"""

__version__ = "0.1.0"

from .decoder import ClippedUpdate, apply_update, clip_decode, decode
from .encoder import (
    EncodedInnovation,
    QuadtreeEncoder,
    delta_distortion,
    delta_distortion_quadratic,
    encode,
    encoder_distortion,
    reproduction_points,
    solve,
    solve_branch_and_bound,
    solve_bruteforce,
    solve_budgeted_tree,
)
from .exceptions import (
    BudgetError,
    CapacityError,
    ConfigurationError,
    ContractViolation,
    DimensionError,
    DomainError,
    FormatError,
    IngestionError,
    QuadmapError,
    ValidityError,
)
from .grid import InnovationMap, OccupancyGrid, frobenius_distance, innovation, uniform_grid
from .mapio import read_map, read_metrics, write_map, write_metrics
from .payload import deserialize_payload, serialize_payload
from .pipeline import (
    BandwidthSchedule,
    MapCompressor,
    SessionState,
    StepRecord,
    run,
    step,
)
from .quadtree import (
    Region,
    TreeTopology,
    cell_coords,
    full_tree,
    is_valid,
    leaf_count,
    leaves,
    root_tree,
)
