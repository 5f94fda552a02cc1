"""CCT1 tensor interchange format.

Byte layout, all integers little-endian:

    bytes 0-3   magic b"CCT1"
    byte  4     dtype code, u8; 1 = float32 little-endian
    byte  5     rank, u8
    next 4*rank dims, u32 each
    rest        row-major float32 payload, exactly prod(dims) values

Values are narrowed to float32 on save and widened back to float64 on load,
so a save/load round trip of float32-representable data (signed zeros
included) is bit-exact while float64 tails are deliberately dropped.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CCT1"
DTYPE_FLOAT32 = 1

_HEADER = struct.Struct("<4sBB")


class TensorFileError(Exception):
    """Base failure for tensor file I/O."""


class BadMagicError(TensorFileError):
    """The file does not start with the CCT1 magic."""


class UnsupportedDtypeError(TensorFileError):
    """The dtype code is not one this reader understands."""


class TruncatedPayloadError(TensorFileError):
    """The file ends before the header or payload is complete."""


def tensor_bytes(values) -> bytes:
    """Serialize an array to CCT1 bytes (float32 narrowed, row-major)."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim > 255:
        raise TensorFileError(f"rank {arr.ndim} exceeds the format maximum of 255")
    if arr.ndim > 0 and max(arr.shape, default=0) > 0xFFFFFFFF:
        raise TensorFileError("a dimension exceeds the u32 range")
    header = _HEADER.pack(MAGIC, DTYPE_FLOAT32, arr.ndim)
    dims = struct.pack(f"<{arr.ndim}I", *arr.shape)
    payload = np.ascontiguousarray(arr, dtype="<f4").tobytes()
    return header + dims + payload


def parse_tensor(data: bytes) -> np.ndarray:
    """Decode CCT1 bytes into a float64 array."""
    if len(data) < _HEADER.size:
        raise TruncatedPayloadError(
            f"file holds {len(data)} bytes, too short for a CCT1 header"
        )
    magic, dtype_code, rank = _HEADER.unpack_from(data, 0)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if dtype_code != DTYPE_FLOAT32:
        raise UnsupportedDtypeError(f"unsupported dtype code {dtype_code}")
    dims_end = _HEADER.size + 4 * rank
    if len(data) < dims_end:
        raise TruncatedPayloadError(
            f"header promises {rank} dims but the file ends mid-header"
        )
    dims = struct.unpack_from(f"<{rank}I", data, _HEADER.size)
    count = 1
    for d in dims:
        count *= d
    expected = dims_end + 4 * count
    if len(data) < expected:
        raise TruncatedPayloadError(
            f"payload needs {expected - dims_end} bytes, found {len(data) - dims_end}"
        )
    if len(data) > expected:
        raise TensorFileError(f"{len(data) - expected} trailing bytes after payload")
    flat = np.frombuffer(data, dtype="<f4", count=count, offset=dims_end)
    return flat.reshape(dims).astype(np.float64)


def save_tensor(path, values) -> None:
    """Write an array to ``path`` in CCT1 format."""
    Path(path).write_bytes(tensor_bytes(values))


def load_tensor(path) -> np.ndarray:
    """Read a CCT1 file into a float64 array."""
    p = Path(path)
    try:
        data = p.read_bytes()
    except FileNotFoundError:
        raise TensorFileError(f"tensor file not found: {p}") from None
    return parse_tensor(data)
