"""The CMAT binary container for complex matrices.

Layout: ``b"CMAT"``, version byte ``1``, rows and cols as little-endian
``u64``, then ``rows * cols`` entries as interleaved little-endian doubles
``(re, im)`` in row-major order.
"""

import struct

import numpy as np

MAGIC = b"CMAT"
VERSION = 1
_HEADER = struct.Struct("<4sBQQ")
HEADER_SIZE = _HEADER.size


class CmatError(ValueError):
    """Malformed CMAT data."""


def encode(m):
    """Serialize a 2-D complex matrix to CMAT bytes."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise CmatError(f"CMAT holds 2-D matrices, got shape {arr.shape}")
    rows, cols = arr.shape
    return _HEADER.pack(MAGIC, VERSION, rows, cols) + arr.astype("<c16").tobytes()


def decode_from(buf, offset=0):
    """Parse one CMAT block at ``offset``; return ``(matrix, next_offset)``."""
    view = memoryview(buf)
    if len(view) - offset < HEADER_SIZE:
        raise CmatError("truncated CMAT header")
    magic, version, rows, cols = _HEADER.unpack_from(view, offset)
    if magic != MAGIC:
        raise CmatError(f"bad CMAT magic {magic!r}")
    if version != VERSION:
        raise CmatError(f"unsupported CMAT version {version}")
    start = offset + HEADER_SIZE
    nbytes = rows * cols * 16
    if len(view) - start < nbytes:
        raise CmatError(f"truncated CMAT payload: need {nbytes} bytes")
    data = np.frombuffer(view[start:start + nbytes], dtype="<c16")
    return data.astype(np.complex128).reshape(rows, cols), start + nbytes


def decode(buf):
    """Parse a buffer holding exactly one CMAT block."""
    m, end = decode_from(buf)
    if end != len(buf):
        raise CmatError(f"{len(buf) - end} trailing bytes after CMAT block")
    return m


def save(path, m):
    with open(path, "wb") as fh:
        fh.write(encode(m))


def load(path):
    with open(path, "rb") as fh:
        return decode(fh.read())
