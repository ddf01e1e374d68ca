"""Middlebury ``.flo`` files.

Layout (little endian): float32 magic 202021.25, int32 width, int32 height,
then ``height * width`` interleaved (u, v) float32 pairs in row-major order.
"""

import struct

import numpy as np

from ..errors import FormatError
from .types import FlowField

FLO_MAGIC = 202021.25
UNKNOWN_FLOW_THRESHOLD = 1e9
_HEADER = struct.Struct("<fii")


def read_flo(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: too short for a .flo header")
    magic, width, height = _HEADER.unpack_from(raw)
    if magic != FLO_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}, expected {FLO_MAGIC}")
    if width <= 0 or height <= 0:
        raise FormatError(f"{path}: invalid size {width}x{height}")
    expected = _HEADER.size + 8 * width * height
    if len(raw) < expected:
        raise FormatError(f"{path}: truncated payload ({len(raw)} of {expected} bytes)")
    data = np.frombuffer(raw, dtype="<f4", count=2 * width * height, offset=_HEADER.size)
    data = data.reshape(height, width, 2).astype(np.float64)
    return FlowField(data[..., 0], data[..., 1])


def write_flo(path, flow):
    if not isinstance(flow, FlowField):
        flow = FlowField.from_array(flow)
    height, width = flow.shape
    payload = np.stack([flow.u, flow.v], axis=-1).astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(FLO_MAGIC, width, height))
        fh.write(payload.tobytes())


def known_mask(flow):
    """True where the flow is not the Middlebury 'unknown' sentinel (|value| >= 1e9)."""
    return (
        np.isfinite(flow.u)
        & np.isfinite(flow.v)
        & (np.abs(flow.u) < UNKNOWN_FLOW_THRESHOLD)
        & (np.abs(flow.v) < UNKNOWN_FLOW_THRESHOLD)
    )
