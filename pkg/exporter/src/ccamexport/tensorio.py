"""Self-contained reader and writer for the CCT1 binary tensor format.

Layout: the 4-byte magic "CCT1", one u8 dtype code (1 means 32-bit
little-endian float), one u8 rank, then rank u32 little-endian dims,
then the payload row-major. Values narrow to float32 on save and widen
back to float64 on load, so saving a loaded tensor is byte-stable.

This is the exporter's own implementation; it shares no code with the
consumer and talks to it purely through these bytes.
"""

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CCT1"
DTYPE_F32 = 1
_HEADER = struct.Struct("<BB")


class TensorFormatError(Exception):
    """The bytes on disk do not form a valid tensor file."""


def save_tensor(path, values) -> None:
    """Write an array as CCT1; any float input is narrowed to float32."""
    # astype keeps rank-0 inputs rank 0 and always yields a C-order copy.
    arr = np.asarray(values, dtype=np.float64).astype("<f4")
    blob = MAGIC + _HEADER.pack(DTYPE_F32, arr.ndim)
    if arr.ndim:
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
    Path(path).write_bytes(blob + arr.tobytes())


def load_tensor(path) -> np.ndarray:
    """Read a CCT1 file back as float64, preserving the stored dims."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError:
        raise TensorFormatError(f"no tensor file at {path}") from None
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise TensorFormatError(f"{path} does not start with the CCT1 magic")
    if len(blob) < 4 + _HEADER.size:
        raise TensorFormatError(f"{path} is truncated inside the header")
    dtype_code, rank = _HEADER.unpack_from(blob, 4)
    if dtype_code != DTYPE_F32:
        raise TensorFormatError(
            f"{path} uses unsupported dtype code {dtype_code}")
    offset = 4 + _HEADER.size
    if len(blob) < offset + 4 * rank:
        raise TensorFormatError(f"{path} is truncated inside the dims header")
    dims = struct.unpack_from(f"<{rank}I", blob, offset)
    offset += 4 * rank
    count = 1
    for dim in dims:
        count *= dim
    payload = blob[offset:]
    if len(payload) != 4 * count:
        raise TensorFormatError(
            f"{path} payload holds {len(payload)} bytes, expected {4 * count}")
    values = np.frombuffer(payload, dtype="<f4").reshape(dims)
    return values.astype(np.float64)
