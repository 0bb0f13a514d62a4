"""Coordinator side of a job: encode, dispatch, collect the fastest K, decode.

Two clusters are provided. :class:`InProcessCluster` simulates the workers
with seeded pseudo-random latencies, so the set of fastest responders is
reproducible. :class:`NetworkCluster` ships shares to TCP workers speaking
the :mod:`sdmm.wire` protocol.
"""

import itertools
import math
import queue
import socket
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import codec, wire
from .codec import NotEnoughResponses, Response, ResponseSet
from .linalg import condition_number, frobenius_distance, matmul, relative_frobenius_distance, vandermonde
from .worker import TranscriptLog, compute, parse_endpoint

DEFAULT_TIMEOUT = 30.0


@dataclass(frozen=True)
class WorkerConfig:
    """One worker slot; ``endpoint`` set means networked, otherwise in-process.

    Simulated latency is ``base_latency + jitter * Exp(1)``.
    """

    worker_id: int
    endpoint: str = None
    base_latency: float = 1.0
    jitter: float = 1.0

    @property
    def mode(self):
        return "network" if self.endpoint else "in-process"


@dataclass(frozen=True)
class StragglerModel:
    """Which servers never answer.

    ``selection="uniform"`` draws ``count`` servers per job from the job's
    generator; ``"fixed"`` uses ``fixed_set``.
    """

    count: int = 0
    selection: str = "uniform"
    fixed_set: tuple = ()
    multiplier: float = math.inf

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("straggler count must be non-negative")
        if self.selection not in ("uniform", "fixed"):
            raise ValueError(f"unknown straggler selection {self.selection!r}")
        if self.selection == "fixed" and len(self.fixed_set) != self.count:
            object.__setattr__(self, "count", len(self.fixed_set))

    def draw(self, n_servers, rng):
        if self.selection == "fixed":
            chosen = sorted(int(i) for i in self.fixed_set)
            if any(i < 1 or i > n_servers for i in chosen):
                raise ValueError(f"straggler set {chosen} outside servers 1..{n_servers}")
            return tuple(chosen)
        if self.count > n_servers:
            raise ValueError(f"{self.count} stragglers among {n_servers} servers")
        if self.count == 0:
            return ()
        return tuple(sorted(int(i) + 1 for i in rng.choice(n_servers, self.count, replace=False)))


@dataclass
class TrialRecord:
    seed: object
    params: dict
    sigma2: float
    straggler_set: tuple
    responding_set: tuple
    used_set: tuple
    abs_error: float
    rel_error: float
    condition: float
    cell_id: int = None
    trial: int = None
    timings: dict = field(default_factory=dict, compare=False)


def collect_fastest(arrivals, k, n_dispatched, timeout=None):
    """Take the first ``k`` successful responses from ``arrivals``.

    ``arrivals`` is a :class:`queue.Queue` fed with :class:`Response` objects
    in arrival order; any other item marks a failed task. Responses beyond
    the first ``k`` are left unread.
    """
    got = ResponseSet()
    seen = 0
    deadline = None if timeout is None else time.monotonic() + timeout
    while len(got) < k:
        if seen >= n_dispatched:
            raise NotEnoughResponses(len(got), k)
        if deadline is None:
            item = arrivals.get()
        else:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise NotEnoughResponses(len(got), k)
            try:
                item = arrivals.get(timeout=remaining)
            except queue.Empty:
                raise NotEnoughResponses(len(got), k) from None
        seen += 1
        if isinstance(item, Response):
            got.add(item)
    return got


class InProcessCluster:
    """Simulated workers with deterministic pseudo-random latencies."""

    def __init__(self, workers=None, keep_matrices=True):
        self._configs = {w.worker_id: w for w in (workers or ())}
        self.keep_matrices = keep_matrices
        self.transcripts = {}
        self._task_ids = itertools.count(1)

    def config(self, server_id):
        return self._configs.get(server_id) or WorkerConfig(server_id)

    def transcript(self, server_id):
        if server_id not in self.transcripts:
            self.transcripts[server_id] = TranscriptLog(self.keep_matrices)
        return self.transcripts[server_id]

    def dispatch(self, shares, stragglers, rng):
        n = len(shares)
        delays = rng.standard_exponential(n)
        timeline = []
        for sid in range(1, n + 1):
            a_i, b_i = shares.share(sid)
            self.transcript(sid).record(next(self._task_ids), shares.params.tag, sid, sid, a_i, b_i)
            if sid in stragglers:
                continue
            cfg = self.config(sid)
            arrival = cfg.base_latency + cfg.jitter * delays[sid - 1]
            timeline.append((arrival, sid))
        timeline.sort()
        arrivals = queue.Queue()
        for _, sid in timeline:
            a_i, b_i = shares.share(sid)
            arrivals.put(Response(sid, shares.points[sid - 1], compute(a_i, b_i)))
        return arrivals, len(timeline)

    def collect(self, arrivals, k, n_dispatched):
        return collect_fastest(arrivals, k, n_dispatched)


class NetworkCluster:
    """Workers reached over TCP; server ids are assigned round-robin to endpoints.

    Straggling servers are not contacted at all.
    """

    def __init__(self, endpoints, timeout=DEFAULT_TIMEOUT):
        if not endpoints:
            raise ValueError("need at least one worker endpoint")
        self.endpoints = [parse_endpoint(e) if isinstance(e, str) else tuple(e) for e in endpoints]
        self.timeout = timeout
        self._job_ids = itertools.count(1)

    def _run_task(self, endpoint, task_id, frame, sid, point, arrivals):
        try:
            with socket.create_connection(endpoint, timeout=self.timeout) as sock:
                sock.sendall(frame)
                body = wire.read_frame(sock)
            if body is None:
                raise wire.ProtocolError("worker closed the connection")
            ftype, tid, payload = wire.parse_frame(body)
            if tid != task_id:
                raise wire.ProtocolError(f"reply for task {tid}, expected {task_id}")
            if ftype == wire.ERROR:
                code, msg = wire.parse_error(payload)
                raise wire.RemoteError(code, msg, tid)
            if ftype != wire.RESULT:
                raise wire.ProtocolError(f"unexpected frame type {ftype}")
            arrivals.put(Response(sid, point, wire.parse_result(payload)))
        except Exception as exc:
            arrivals.put(exc)

    def dispatch(self, shares, stragglers, rng):
        job = next(self._job_ids)
        arrivals = queue.Queue()
        sids = [sid for sid in range(1, len(shares) + 1) if sid not in stragglers]
        self._pool = ThreadPoolExecutor(max_workers=max(1, len(sids)))
        for sid in sids:
            a_i, b_i = shares.share(sid)
            task_id = (job << 32) | sid
            frame = wire.task_frame(task_id, shares.params.tag, sid, sid, a_i, b_i)
            endpoint = self.endpoints[(sid - 1) % len(self.endpoints)]
            self._pool.submit(
                self._run_task, endpoint, task_id, frame, sid, shares.points[sid - 1], arrivals
            )
        return arrivals, len(sids)

    def collect(self, arrivals, k, n_dispatched):
        try:
            return collect_fastest(arrivals, k, n_dispatched, self.timeout)
        finally:
            self._pool.shutdown(wait=False)


def run_job(a, b, params, noise, stragglers=None, seed=0, cluster=None):
    """Run one secure multiplication end to end.

    The job generator is seeded with ``seed`` and consumed in a fixed order:
    masks for ``A``, masks for ``B``, the straggler draw, then simulated
    latencies.

    Returns
    -------
    product : ndarray
    record : TrialRecord
    """
    stragglers = stragglers or StragglerModel()
    cluster = cluster or InProcessCluster()
    rng = np.random.default_rng(seed)
    timings = {}

    t0 = time.perf_counter()
    shares = codec.encode(a, b, params, noise.sigma2, rng, noise=noise)
    straggler_set = stragglers.draw(params.n_servers, rng)
    t1 = time.perf_counter()
    timings["encode"] = t1 - t0

    arrivals, n_dispatched = cluster.dispatch(shares, set(straggler_set), rng)
    responses = cluster.collect(arrivals, params.threshold, n_dispatched)
    t2 = time.perf_counter()
    timings["compute"] = t2 - t1

    product = codec.decode(responses, params)
    t3 = time.perf_counter()
    timings["decode"] = t3 - t2

    used = [r.server_id for r in responses.fastest(params.threshold)]
    cond = condition_number(vandermonde(shares.points.for_servers(used), params.threshold))
    oracle = matmul(a, b)
    record = TrialRecord(
        seed=seed,
        params=params.describe(),
        sigma2=noise.sigma2,
        straggler_set=straggler_set,
        responding_set=tuple(responses.server_ids),
        used_set=tuple(used),
        abs_error=frobenius_distance(product, oracle),
        rel_error=relative_frobenius_distance(product, oracle),
        condition=cond,
        timings=timings,
    )
    return product, record
