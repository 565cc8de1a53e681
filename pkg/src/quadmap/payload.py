"""Binary wire format for an encoded innovation.

Layout::

    b"MQTC"  version (u8, = 1)  depth (u8)
    topology bits, preorder, MSB first, zero-padded to a byte boundary
    leaf values, float32 little-endian, preorder

Every visited node above the finest level contributes one bit (1 = expanded,
0 = leaf); unit cells contribute none.
"""

import numpy as np

from .encoder import EncodedInnovation
from .exceptions import FormatError
from .quadtree import TreeTopology, children, n_interior

MAGIC = b"MQTC"
VERSION = 1
HEADER_SIZE = len(MAGIC) + 2
VALUE_SIZE = 4
MAX_DEPTH = 12


def _topology_bits(topology):
    depth = topology.depth
    n_int = n_interior(depth)
    bits = []
    stack = [0]
    while stack:
        node = stack.pop()
        if node >= n_int:
            continue
        flag = bool(topology.expanded[node])
        bits.append(flag)
        if flag:
            stack.extend(reversed(children(node)))
    return bits


def payload_size_bits(topology):
    """Serialized size in bits of any encoding with this topology."""
    nbits = len(_topology_bits(topology))
    n_leaves = 3 * topology.n_expanded + 1
    return 8 * (HEADER_SIZE + (nbits + 7) // 8 + VALUE_SIZE * n_leaves)


def serialize_payload(enc):
    topology = enc.topology
    if topology.depth > MAX_DEPTH:
        raise ValueError(f"depth {topology.depth} exceeds supported maximum {MAX_DEPTH}")
    bits = _topology_bits(topology)
    packed = np.packbits(np.array(bits, dtype=np.uint8)).tobytes() if bits else b""
    body = np.asarray(enc.values, dtype="<f4").tobytes()
    return MAGIC + bytes((VERSION, topology.depth)) + packed + body


def deserialize_payload(data):
    data = bytes(data)
    if len(data) < HEADER_SIZE:
        raise FormatError(f"payload truncated: {len(data)} bytes, header needs {HEADER_SIZE}",
                          len(data))
    if data[:4] != MAGIC:
        raise FormatError(f"bad magic {data[:4]!r}, expected {MAGIC!r}", 0)
    if data[4] != VERSION:
        raise FormatError(f"unsupported version {data[4]}, expected {VERSION}", 4)
    depth = data[5]
    if depth > MAX_DEPTH:
        raise FormatError(f"depth {depth} exceeds supported maximum {MAX_DEPTH}", 5)
    n_int = n_interior(depth)
    expanded = np.zeros(n_int, dtype=bool)

    pos = 0  # bit cursor into the topology section
    stack = [0]
    n_leaves = 0
    while stack:
        node = stack.pop()
        if node >= n_int:
            n_leaves += 1
            continue
        byte = HEADER_SIZE + pos // 8
        if byte >= len(data):
            raise FormatError("payload truncated inside topology bits", len(data))
        flag = (data[byte] >> (7 - pos % 8)) & 1
        pos += 1
        if flag:
            expanded[node] = True
            stack.extend(reversed(children(node)))
        else:
            n_leaves += 1

    values_at = HEADER_SIZE + (pos + 7) // 8
    if pos % 8:
        pad_mask = (1 << (8 - pos % 8)) - 1
        if data[values_at - 1] & pad_mask:
            raise FormatError("nonzero padding bits after topology", values_at - 1)
    end = values_at + VALUE_SIZE * n_leaves
    if len(data) < end:
        raise FormatError(
            f"payload truncated: {n_leaves} leaf values need {end} bytes, got {len(data)}",
            len(data),
        )
    if len(data) > end:
        raise FormatError(f"{len(data) - end} trailing bytes after leaf values", end)
    values = np.frombuffer(data, dtype="<f4", count=n_leaves, offset=values_at)
    if not np.all(np.isfinite(values)) or np.any(np.abs(values) > 1.0):
        bad = int(np.flatnonzero(~(np.abs(values) <= 1.0))[0])
        raise FormatError("leaf value outside [-1, 1]", values_at + VALUE_SIZE * bad)
    return EncodedInnovation(TreeTopology(depth, expanded), values.astype(np.float64))


def to_float32_values(enc):
    """The encoding as a receiver sees it after a round trip through the wire."""
    return EncodedInnovation(enc.topology, enc.values.astype("<f4").astype(np.float64))


__all__ = [
    "MAGIC",
    "VERSION",
    "deserialize_payload",
    "payload_size_bits",
    "serialize_payload",
    "to_float32_values",
]
