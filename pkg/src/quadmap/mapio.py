"""Map files (CSV, PGM P2/P5) and the metrics CSV."""

import csv
import io
import os
from pathlib import Path
import tempfile

import numpy as np

from .exceptions import IngestionError
from .grid import OccupancyGrid, as_values
from .pipeline import StepRecord

METRIC_FIELDS = (
    "step",
    "budget_leaves",
    "leaves_used",
    "innovation_distortion",
    "decode_distortion",
    "estimate_error",
    "payload_bits",
)


def atomic_write(path, data):
    """Write bytes or text to ``path`` via a temporary file and rename."""
    path = Path(path)
    if isinstance(data, str):
        data = data.encode()
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _validate_rows(rows):
    """Check a parsed list-of-lists for squareness, power-of-two side and range."""
    if not rows:
        raise IngestionError("map file contains no rows")
    side = len(rows[0])
    for r, row in enumerate(rows, start=1):
        if len(row) != side:
            raise IngestionError(f"ragged row: expected {side} values, found {len(row)}", row=r)
    if len(rows) != side:
        raise IngestionError(f"map is not square: {len(rows)} rows of {side} values")
    if side & (side - 1):
        raise IngestionError(f"side {side} is not a power of two")
    arr = np.array(rows, dtype=np.float64)
    bad = ~((arr >= 0.0) & (arr <= 1.0))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise IngestionError(f"occupancy {arr[i, j]!r} outside [0, 1]", row=i + 1, col=j + 1)
    return OccupancyGrid(arr)


def _read_csv(text):
    rows = []
    for r, line in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not line or all(not cell.strip() for cell in line):
            continue
        row = []
        for c, cell in enumerate(line, start=1):
            try:
                row.append(float(cell))
            except ValueError:
                raise IngestionError(f"not a number: {cell!r}", row=r, col=c) from None
        rows.append(row)
    return _validate_rows(rows)


def _pgm_tokens(data, count, pos):
    """Read ``count`` whitespace-separated header tokens, skipping comments."""
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos < n and data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise IngestionError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def _read_pgm(data):
    magic = data[:2]
    if magic not in (b"P2", b"P5"):
        raise IngestionError(f"unsupported PGM magic {magic!r}; expected P2 or P5")
    try:
        (w, h, maxval), pos = _pgm_tokens(data, 3, 2)
        width, height, maxval = int(w), int(h), int(maxval)
    except ValueError:
        raise IngestionError("malformed PGM header") from None
    if not 0 < maxval < 65536:
        raise IngestionError(f"PGM maxval {maxval} outside 1..65535")
    if width != height:
        raise IngestionError(f"map is not square: {width}x{height}")
    if width < 1 or width & (width - 1):
        raise IngestionError(f"side {width} is not a power of two")

    if magic == b"P5":
        pos += 1  # single whitespace byte before the raster
        dtype = ">u2" if maxval > 255 else "u1"
        need = width * height * np.dtype(dtype).itemsize
        raster = data[pos:pos + need]
        if len(raster) < need:
            raise IngestionError(f"PGM raster truncated: {len(raster)} of {need} bytes")
        gray = np.frombuffer(raster, dtype=dtype).astype(np.int64).reshape(height, width)
    else:
        body = data[pos:].split()
        if len(body) < width * height:
            raise IngestionError(f"PGM raster truncated: {len(body)} of {width * height} values",
                                 row=len(body) // width + 1)
        try:
            gray = np.array([int(t) for t in body[:width * height]],
                            dtype=np.int64).reshape(height, width)
        except ValueError:
            raise IngestionError("non-integer value in P2 raster") from None

    over = gray > maxval
    if over.any():
        i, j = np.argwhere(over)[0]
        raise IngestionError(f"gray value {gray[i, j]} exceeds maxval {maxval}",
                             row=i + 1, col=j + 1)
    return OccupancyGrid(gray / maxval)


def read_map(path, format=None):
    """Load an occupancy grid; ``format`` is ``"csv"`` or ``"pgm"`` (default: by suffix)."""
    path = Path(path)
    if format is None:
        format = "pgm" if path.suffix.lower() in (".pgm", ".pnm") else "csv"
    data = path.read_bytes()
    if format == "csv":
        return _read_csv(data.decode())
    if format == "pgm":
        return _read_pgm(data)
    raise ValueError(f"unknown map format {format!r}")


def format_map(grid):
    values = as_values(grid)
    return "".join(",".join(format(v, ".17g") for v in row) + "\n" for row in values)


def write_map(grid, path):
    """Dump a grid as CSV in the same format :func:`read_map` accepts."""
    atomic_write(path, format_map(grid))


def format_metrics(records):
    extra = any(r.nominal_bits is not None for r in records)
    fields = METRIC_FIELDS + (("nominal_bits",) if extra else ())
    lines = [",".join(fields)]
    for r in records:
        cells = []
        for name in fields:
            v = getattr(r, name)
            cells.append(format(v, ".17g") if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_metrics(records, path):
    atomic_write(path, format_metrics(records))


def read_metrics(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        out = []
        for row in reader:
            nominal = row.get("nominal_bits")
            out.append(StepRecord(
                step=int(row["step"]),
                budget_leaves=int(row["budget_leaves"]),
                leaves_used=int(row["leaves_used"]),
                innovation_distortion=float(row["innovation_distortion"]),
                decode_distortion=float(row["decode_distortion"]),
                estimate_error=float(row["estimate_error"]),
                payload_bits=int(row["payload_bits"]),
                nominal_bits=int(nominal) if nominal not in (None, "") else None,
            ))
    return out
