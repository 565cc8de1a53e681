"""Run configuration and its flat ``key = value`` file format.

Keys are the long CLI flag names without dashes prefix, e.g.::

    scenario = amoeba
    ell = 7
    schedule-leaves = 163
"""

from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import ConfigurationError

SCENARIOS = ("static", "amoeba", "files")
STATIC_SCHEDULE_PCT = (1, 5, 2, 20, 30, 5, 8, 15, 40, 15, 10)


def parse_number_list(text):
    """``"1,5,2.5"`` -> ``[1, 5, 2.5]`` (ints stay ints)."""
    out = []
    for tok in str(text).replace(" ", "").split(","):
        if not tok:
            continue
        try:
            out.append(int(tok))
        except ValueError:
            try:
                out.append(float(tok))
            except ValueError:
                raise ConfigurationError(f"not a number in list: {tok!r}") from None
    if not out:
        raise ConfigurationError("empty list")
    return out


@dataclass
class RunConfig:
    scenario: str = "static"
    ell: int = 5
    steps: int | None = None
    schedule_pct: list | None = None
    schedule_leaves: list | None = None
    seed: int = 0
    initial_estimate: float = 0.5
    solver: str = "dp"
    out: str = "out"
    smoothness: int = 2
    radius: int = 8
    maps: list = field(default_factory=list)
    bits_per_cell: int | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}; choose from {SCENARIOS}")
        if self.ell < 0:
            raise ConfigurationError(f"ell must be >= 0, got {self.ell}")
        if self.steps is not None and self.steps < 0:
            raise ConfigurationError(f"steps must be >= 0, got {self.steps}")
        if self.schedule_pct is not None and self.schedule_leaves is not None:
            raise ConfigurationError("give either schedule-pct or schedule-leaves, not both")
        for entry in (self.schedule_pct or []) + (self.schedule_leaves or []):
            if entry <= 0:
                raise ConfigurationError(f"schedule entries must be positive, got {entry}")
        if not 0.0 <= self.initial_estimate <= 1.0:
            raise ConfigurationError(f"initial estimate {self.initial_estimate} outside [0, 1]")


def read_config_file(path):
    """Parse a ``key = value`` file into a dict of raw strings (dashes -> underscores)."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out
