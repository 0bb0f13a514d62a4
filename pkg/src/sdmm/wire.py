"""Length-prefixed binary frames exchanged between coordinator and workers.

Frame: ``u32 length | u8 type | u64 task_id | payload`` (little-endian), where
``length`` counts every byte after the length field.
"""

import struct

from . import cmat
from .codec import pack_share, unpack_share

TASK = 1
RESULT = 2
ERROR = 3

ERR_MALFORMED = 1
ERR_SHAPE = 2
ERR_INTERNAL = 3

MAX_FRAME = 1 << 31

_LEN = struct.Struct("<I")
_HEAD = struct.Struct("<BQ")
_ERR = struct.Struct("<HH")


class ProtocolError(ValueError):
    """A frame or payload could not be parsed."""


class RemoteError(RuntimeError):
    """A worker answered with an ERROR frame."""

    def __init__(self, code, message, task_id=None):
        super().__init__(f"worker error {code}: {message}")
        self.code = code
        self.message = message
        self.task_id = task_id


def pack_frame(ftype, task_id, payload=b""):
    body = _HEAD.pack(ftype, task_id) + payload
    return _LEN.pack(len(body)) + body


def _recv_exact(sock, n):
    chunks = []
    remaining = n
    while remaining:
        chunk = sock.recv(min(remaining, 1 << 20))
        if not chunk:
            return None
        chunks.append(chunk)
        remaining -= len(chunk)
    return b"".join(chunks)


def read_frame(sock):
    """Read one frame body; ``None`` on a clean end of stream.

    Returns the raw body so callers can answer malformed frames without
    dropping the connection.
    """
    head = _recv_exact(sock, _LEN.size)
    if head is None:
        return None
    (length,) = _LEN.unpack(head)
    if length > MAX_FRAME:
        raise ProtocolError(f"frame length {length} exceeds limit")
    body = _recv_exact(sock, length)
    if body is None:
        raise ProtocolError("connection closed mid-frame")
    return body


def parse_frame(body):
    """Split a frame body into ``(type, task_id, payload)``."""
    if len(body) < _HEAD.size:
        raise ProtocolError(f"frame body of {len(body)} bytes is shorter than its header")
    ftype, task_id = _HEAD.unpack_from(body, 0)
    return ftype, task_id, body[_HEAD.size:]


def task_frame(task_id, tag, server_id, point_index, a_share, b_share):
    return pack_frame(TASK, task_id, pack_share(tag, server_id, point_index, a_share, b_share))


def parse_task(payload):
    try:
        return unpack_share(payload)
    except (cmat.CmatError, ValueError) as exc:
        raise ProtocolError(str(exc)) from exc


def result_frame(task_id, product):
    return pack_frame(RESULT, task_id, cmat.encode(product))


def parse_result(payload):
    try:
        return cmat.decode(payload)
    except cmat.CmatError as exc:
        raise ProtocolError(str(exc)) from exc


def error_frame(task_id, code, message):
    raw = message.encode("utf-8")[:0xFFFF]
    return pack_frame(ERROR, task_id, _ERR.pack(code, len(raw)) + raw)


def parse_error(payload):
    if len(payload) < _ERR.size:
        raise ProtocolError("truncated ERROR payload")
    code, n = _ERR.unpack_from(payload, 0)
    raw = payload[_ERR.size:_ERR.size + n]
    if len(raw) != n:
        raise ProtocolError("truncated ERROR message")
    return code, raw.decode("utf-8", errors="replace")
