"""Honest-but-curious worker: multiplies its two shares and remembers them."""

import hashlib
import logging
import socketserver
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, wire

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TranscriptEntry:
    task_id: int
    scheme_tag: int
    server_id: int
    point_index: int
    a_shape: tuple
    b_shape: tuple
    digest: str
    timestamp: float
    a_share: np.ndarray = field(default=None, repr=False)
    b_share: np.ndarray = field(default=None, repr=False)


class TranscriptLog:
    """Append-only record of everything a worker received."""

    def __init__(self, keep_matrices=True):
        self.keep_matrices = keep_matrices
        self._entries = []
        self._lock = threading.Lock()

    def record(self, task_id, tag, server_id, point_index, a_share, b_share):
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(a_share).tobytes())
        h.update(np.ascontiguousarray(b_share).tobytes())
        entry = TranscriptEntry(
            task_id,
            tag,
            server_id,
            point_index,
            tuple(a_share.shape),
            tuple(b_share.shape),
            h.hexdigest(),
            time.time(),
            a_share.copy() if self.keep_matrices else None,
            b_share.copy() if self.keep_matrices else None,
        )
        with self._lock:
            self._entries.append(entry)
        return entry

    def __len__(self):
        return len(self._entries)

    def __iter__(self):
        with self._lock:
            return iter(list(self._entries))

    def entries(self):
        with self._lock:
            return tuple(self._entries)


class ShapeMismatch(ValueError):
    pass


def compute(a_share, b_share):
    if a_share.shape[1] != b_share.shape[0]:
        raise ShapeMismatch(f"cannot multiply {a_share.shape} by {b_share.shape}")
    return kernels.cmatmul(a_share, b_share)


def handle_body(body, transcript):
    """Answer one frame body with the reply frame bytes."""
    try:
        ftype, task_id, payload = wire.parse_frame(body)
    except wire.ProtocolError as exc:
        return wire.error_frame(0, wire.ERR_MALFORMED, str(exc))
    if ftype != wire.TASK:
        return wire.error_frame(task_id, wire.ERR_MALFORMED, f"unexpected frame type {ftype}")
    try:
        tag, server_id, point_index, a_share, b_share = wire.parse_task(payload)
    except wire.ProtocolError as exc:
        return wire.error_frame(task_id, wire.ERR_MALFORMED, str(exc))
    transcript.record(task_id, tag, server_id, point_index, a_share, b_share)
    try:
        product = compute(a_share, b_share)
    except ShapeMismatch as exc:
        return wire.error_frame(task_id, wire.ERR_SHAPE, str(exc))
    except Exception as exc:  # reported to the coordinator, not raised
        log.exception("task %d failed", task_id)
        return wire.error_frame(task_id, wire.ERR_INTERNAL, str(exc))
    return wire.result_frame(task_id, product)


class _Handler(socketserver.BaseRequestHandler):
    def handle(self):
        sock = self.request
        while True:
            try:
                body = wire.read_frame(sock)
            except wire.ProtocolError as exc:
                log.warning("dropping connection: %s", exc)
                return
            except OSError:
                return
            if body is None:
                return
            try:
                sock.sendall(handle_body(body, self.server.transcript))
            except OSError:
                return


class WorkerServer(socketserver.ThreadingTCPServer):
    """TCP worker; one thread per connection, one task at a time per connection."""

    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, keep_matrices=True):
        super().__init__(address, _Handler)
        self.transcript = TranscriptLog(keep_matrices)

    @property
    def endpoint(self):
        host, port = self.server_address[:2]
        return f"{host}:{port}"


def parse_endpoint(text):
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"endpoint must be host:port, got {text!r}")
    return host, int(port)


def worker_serve(endpoint, keep_matrices=False):
    """Serve TASK frames on ``endpoint`` (``host:port``) until interrupted."""
    with WorkerServer(parse_endpoint(endpoint), keep_matrices) as server:
        log.info("worker listening on %s", server.endpoint)
        server.serve_forever()


def start_worker(host="127.0.0.1", port=0, keep_matrices=True):
    """Start a worker on a background thread; returns the running server."""
    server = WorkerServer((host, port), keep_matrices)
    thread = threading.Thread(target=server.serve_forever, args=(0.05,), daemon=True)
    thread.start()
    return server
