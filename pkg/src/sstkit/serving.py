"""Replica pool and request dispatch.

A pool holds devices x replicas-per-device single-occupancy pipeline
replicas behind one global FIFO queue. A request goes straight to an idle
replica when one exists, otherwise it queues (bounded; overflow is an
explicit rejection, not unbounded buffering). Completions hand the replica
the next queued request before it can go idle, so no request ever waits
while a replica is free. All record/state transitions happen under one lock
and land in an occupancy log that tests replay to assert mutual exclusion,
FIFO order and work conservation.
"""

from __future__ import annotations

import itertools
import math
import queue
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

from .errors import StartupError, UnavailableError

_SENTINEL = object()


@dataclass
class RequestRecord:
    id: int
    enqueue_ts: float
    dispatch_ts: float | None = None
    complete_ts: float | None = None
    replica_id: str | None = None
    outcome: str | None = None  # ok | error | rejected

    @property
    def latency_ms(self) -> float | None:
        if self.complete_ts is None:
            return None
        return 1000.0 * (self.complete_ts - self.enqueue_ts)

    @property
    def queue_wait_ms(self) -> float | None:
        if self.dispatch_ts is None:
            return None
        return 1000.0 * (self.dispatch_ts - self.enqueue_ts)


class RequestHandle:
    """Dispatch result; completion is asynchronous, result() blocks for it."""

    def __init__(self, record: RequestRecord, payload: Any):
        self.record = record
        self.payload = payload
        self._done = threading.Event()
        self._result: Any = None
        self._error: BaseException | None = None

    def _finish(self, result: Any, error: BaseException | None) -> None:
        self._result = result
        self._error = error
        self._done.set()

    def done(self) -> bool:
        return self._done.is_set()

    def wait(self, timeout: float | None = None) -> bool:
        return self._done.wait(timeout)

    def result(self, timeout: float | None = None) -> Any:
        if not self._done.wait(timeout):
            raise TimeoutError(f"request {self.record.id} still in flight")
        if self.record.outcome == "rejected":
            raise UnavailableError("request rejected: queue full")
        if self._error is not None:
            raise self._error
        return self._result


class _Replica(threading.Thread):
    def __init__(self, replica_id: str, device: int, runner, pool: "ReplicaPool"):
        super().__init__(name=f"replica-{replica_id}", daemon=True)
        self.replica_id = replica_id
        self.device = device
        self.runner = runner
        self.pool = pool
        self.inbox: queue.SimpleQueue = queue.SimpleQueue()

    def run(self) -> None:
        while True:
            handle = self.inbox.get()
            if handle is _SENTINEL:
                return
            result = None
            error: BaseException | None = None
            try:
                result = self.runner.run(handle.payload)
            except BaseException as exc:  # replica must survive task crashes
                error = exc
            self.pool._task_done(self, handle, result, error)


@dataclass(frozen=True)
class LatencyStats:
    count: int
    median_ms: int
    p95_ms: int
    max_ms: int
    error_count: int
    rejected_count: int

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "max_ms": self.max_ms,
            "error_count": self.error_count,
            "rejected_count": self.rejected_count,
        }


def percentile_nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    """Nearest-rank percentile; keeps median <= p95 <= max by construction."""
    if not sorted_values:
        return 0.0
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


class ReplicaPool:
    """devices x replicas_per_device single-occupancy replicas, global FIFO."""

    def __init__(
        self,
        devices: int,
        replicas_per_device: int,
        runner_factory: Callable[[], Any],
        queue_capacity: int | None = None,
    ):
        if devices < 1 or replicas_per_device < 1:
            raise StartupError("need at least one device and one replica per device")
        self.devices = devices
        self.replicas_per_device = replicas_per_device
        total = devices * replicas_per_device
        self.queue_capacity = 4 * total if queue_capacity is None else queue_capacity

        self._lock = threading.Lock()
        self._queue: list[RequestHandle] = []
        self._idle: list[_Replica] = []
        self._replicas: list[_Replica] = []
        self._records: list[RequestRecord] = []
        self._seq = itertools.count()
        self._busy = 0
        self._shutdown = False
        self.submitted = 0
        self.rejected = 0
        self.occupancy_log: list[tuple] = []

        for device in range(devices):
            for r in range(replicas_per_device):
                try:
                    runner = runner_factory()
                except Exception as exc:
                    raise StartupError(
                        f"replica construction failed on device {device}: {exc}"
                    ) from exc
                replica = _Replica(f"d{device}r{r}", device, runner, self)
                self._replicas.append(replica)
        self._idle = list(self._replicas)
        for replica in self._replicas:
            replica.start()

    # -- introspection -------------------------------------------------------

    @property
    def total_replicas(self) -> int:
        return len(self._replicas)

    @property
    def busy_count(self) -> int:
        with self._lock:
            return self._busy

    @property
    def queue_depth(self) -> int:
        with self._lock:
            return len(self._queue)

    def device_map(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for replica in self._replicas:
            counts[replica.device] = counts.get(replica.device, 0) + 1
        return counts

    # -- dispatch ------------------------------------------------------------

    def dispatch(self, payload: Any) -> RequestHandle:
        now = time.monotonic()
        with self._lock:
            if self._shutdown:
                raise UnavailableError("pool has been shut down")
            record = RequestRecord(id=next(self._seq), enqueue_ts=now)
            handle = RequestHandle(record, payload)
            self.submitted += 1
            if self._idle:
                replica = self._idle.pop(0)
                self._busy += 1
                record.dispatch_ts = now
                record.replica_id = replica.replica_id
                self.occupancy_log.append(("dispatch", record.id, replica.replica_id, now))
                replica.inbox.put(handle)
            elif len(self._queue) < self.queue_capacity:
                self._queue.append(handle)
                self.occupancy_log.append(
                    ("enqueue", record.id, now, len(self._queue), len(self._idle))
                )
            else:
                record.outcome = "rejected"
                record.complete_ts = now
                self.rejected += 1
                self._records.append(record)
                self.occupancy_log.append(("reject", record.id, now))
                handle._finish(None, None)
        return handle

    def run_sync(self, payload: Any, timeout: float | None = None) -> Any:
        return self.dispatch(payload).result(timeout)

    def _task_done(self, replica: _Replica, handle: RequestHandle, result, error) -> None:
        now = time.monotonic()
        with self._lock:
            record = handle.record
            record.complete_ts = now
            record.outcome = "ok" if error is None else "error"
            self._records.append(record)
            self.occupancy_log.append(
                ("complete", record.id, replica.replica_id, now, record.outcome)
            )
            if self._queue:
                nxt = self._queue.pop(0)
                nxt.record.dispatch_ts = now
                nxt.record.replica_id = replica.replica_id
                self.occupancy_log.append(
                    ("dispatch", nxt.record.id, replica.replica_id, now)
                )
                replica.inbox.put(nxt)
            else:
                self._busy -= 1
                self._idle.append(replica)
        handle._finish(result, error)

    # -- lifecycle & stats ----------------------------------------------------

    def shutdown(self, wait: bool = True) -> None:
        with self._lock:
            if self._shutdown:
                return
            self._shutdown = True
            pending = list(self._queue)
            self._queue.clear()
            for handle in pending:
                handle.record.outcome = "rejected"
                handle.record.complete_ts = time.monotonic()
                self.rejected += 1
                self._records.append(handle.record)
        for handle in pending:
            handle._finish(None, None)
        for replica in self._replicas:
            replica.inbox.put(_SENTINEL)
        if wait:
            for replica in self._replicas:
                replica.join(timeout=30)

    def records(self) -> list[RequestRecord]:
        with self._lock:
            return list(self._records)

    def counts(self) -> dict[str, int]:
        with self._lock:
            ok = sum(1 for r in self._records if r.outcome == "ok")
            err = sum(1 for r in self._records if r.outcome == "error")
            return {
                "submitted": self.submitted,
                "ok": ok,
                "error": err,
                "rejected": self.rejected,
            }

    def stats(self) -> LatencyStats:
        with self._lock:
            latencies = sorted(
                r.latency_ms for r in self._records if r.outcome == "ok"
            )
            errors = sum(1 for r in self._records if r.outcome == "error")
            rejected = sum(1 for r in self._records if r.outcome == "rejected")
        return LatencyStats(
            count=len(latencies) + errors,
            median_ms=round(percentile_nearest_rank(latencies, 50)),
            p95_ms=round(percentile_nearest_rank(latencies, 95)),
            max_ms=round(latencies[-1]) if latencies else 0,
            error_count=errors,
            rejected_count=rejected,
        )


def build_pool(
    devices: int,
    replicas_per_device: int,
    runner_factory: Callable[[], Any],
    queue_capacity: int | None = None,
) -> ReplicaPool:
    """Construct and start a pool of devices x replicas_per_device replicas."""
    return ReplicaPool(devices, replicas_per_device, runner_factory, queue_capacity)


# ---------------------------------------------------------------------------
# Runners
# ---------------------------------------------------------------------------


class FixedDelayRunner:
    """Synthetic replica work: deterministic per-stage sleeps (milliseconds).

    Stages run sequentially, so consolidate=True may sleep the stage sum in
    one call (identical service time, less per-sleep overshoot) while still
    reporting the per-stage breakdown.
    """

    def __init__(self, stage_ms: Mapping[str, float] | float, consolidate: bool = False):
        if isinstance(stage_ms, (int, float)):
            stage_ms = {"work": float(stage_ms)}
        self.stage_ms = dict(stage_ms)
        self.consolidate = consolidate

    def run(self, payload: Any) -> dict:
        if self.consolidate:
            time.sleep(sum(self.stage_ms.values()) / 1000.0)
        else:
            for stage, ms in self.stage_ms.items():
                time.sleep(ms / 1000.0)
        return {"timings_ms": dict(self.stage_ms), "payload": payload}
