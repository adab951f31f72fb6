"""Closed-loop load generator and discrete-event queueing simulator.

A fixed population of virtual users each loops request -> await response ->
think, for a set duration (Locust-style closed loop; there is no open-loop
arrival process). Samples whose request started inside the warm-up window
(the first 10% of the duration) are excluded, which also drops the initial
queue-fill transient. The companion event-driven simulator predicts the
steady-state median for deterministic service times, ceil(users/replicas) *
service_time, and serves as the independent oracle for measured runs.

Targets can be an HTTP endpoint (URL string), an in-process replica pool,
or any callable performing one request.
"""

from __future__ import annotations

import heapq
import json
import math
import random
import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence
from urllib.parse import urlsplit

from .errors import ConfigError, SstkitError
from .serving import ReplicaPool, percentile_nearest_rank


class ConnectivityError(SstkitError):
    """Target did not answer the pre-flight probe."""


@dataclass
class LoadProfile:
    users: int
    duration_s: float
    target: Any  # URL string, ReplicaPool, or callable
    think_time_ms: float = 0.0
    payload: Any = None
    seed: int = 0
    warmup_fraction: float = 0.10
    think_jitter_fraction: float = 0.10

    def __post_init__(self):
        if self.users < 1:
            raise ConfigError("users must be >= 1")
        if self.duration_s <= 0:
            raise ConfigError("duration must be > 0")
        if self.think_time_ms < 0:
            raise ConfigError("think time must be >= 0")


@dataclass(frozen=True)
class LoadReportRow:
    users: int
    median_ms: int
    p95_ms: int
    throughput_rps: float
    errors: int
    completed: int
    seed: int

    def to_dict(self) -> dict:
        return {
            "users": self.users,
            "median_ms": self.median_ms,
            "p95_ms": self.p95_ms,
            "throughput_rps": self.throughput_rps,
            "errors": self.errors,
            "completed": self.completed,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class LatencyReport:
    rows: tuple[LoadReportRow, ...]
    seed: int

    def to_dict(self) -> dict:
        return {"seed": self.seed, "rows": [r.to_dict() for r in self.rows]}


# ---------------------------------------------------------------------------
# Targets
# ---------------------------------------------------------------------------


def _http_request_fn(url: str, payload: Any) -> Callable[[], None]:
    import requests

    session_local = threading.local()
    body = payload if payload is not None else {}

    def call() -> None:
        sess = getattr(session_local, "s", None)
        if sess is None:
            sess = requests.Session()
            session_local.s = sess
        resp = sess.post(url, json=body, timeout=120)
        resp.raise_for_status()

    return call


def _probe_http(url: str) -> None:
    import requests

    parts = urlsplit(url)
    health = f"{parts.scheme}://{parts.netloc}/api/v1/health"
    try:
        requests.get(health, timeout=5).raise_for_status()
    except requests.RequestException as exc:
        raise ConnectivityError(f"target {url} unreachable: {exc}") from exc


def _make_request_fn(profile: LoadProfile) -> Callable[[], None]:
    target = profile.target
    if isinstance(target, str):
        _probe_http(target)
        return _http_request_fn(target, profile.payload)
    if isinstance(target, ReplicaPool):
        payload = profile.payload if profile.payload is not None else {"kind": "synthetic"}

        def call() -> None:
            target.run_sync(payload)

        return call
    if callable(target):
        return target
    raise ConfigError(f"unsupported target type {type(target).__name__}")


# ---------------------------------------------------------------------------
# Closed-loop run
# ---------------------------------------------------------------------------


def run_load(profile: LoadProfile) -> LoadReportRow:
    """Spawn the user population and measure latencies for one load level.

    All virtual users block on a start gate so the measurement window opens
    with the full closed-loop population in place; thread spawn time never
    leaks into the samples.
    """
    request_fn = _make_request_fn(profile)
    gate = threading.Event()
    clock = {"deadline": 0.0, "warmup_end": 0.0}

    samples: list[float] = []
    errors = 0
    lock = threading.Lock()

    def user_loop(user_index: int) -> None:
        nonlocal errors
        rng = random.Random((profile.seed << 20) ^ user_index)
        think_s = profile.think_time_ms / 1000.0
        gate.wait()
        while True:
            t0 = time.monotonic()
            if t0 >= clock["deadline"]:
                return
            failed = False
            try:
                request_fn()
            except Exception:
                failed = True
            t1 = time.monotonic()
            if t0 >= clock["warmup_end"]:
                with lock:
                    if failed:
                        errors += 1
                    else:
                        samples.append(1000.0 * (t1 - t0))
            if think_s > 0:
                jitter = 1.0 + profile.think_jitter_fraction * (2 * rng.random() - 1)
                time.sleep(think_s * jitter)

    threads = [
        threading.Thread(target=user_loop, args=(i,), name=f"vuser-{i}", daemon=True)
        for i in range(profile.users)
    ]
    for t in threads:
        t.start()
    start = time.monotonic()
    clock["deadline"] = start + profile.duration_s
    clock["warmup_end"] = start + profile.warmup_fraction * profile.duration_s
    gate.set()
    for t in threads:
        t.join()

    samples.sort()
    measured_window = profile.duration_s * (1.0 - profile.warmup_fraction)
    return LoadReportRow(
        users=profile.users,
        median_ms=round(percentile_nearest_rank(samples, 50)),
        p95_ms=round(percentile_nearest_rank(samples, 95)),
        throughput_rps=len(samples) / measured_window if measured_window > 0 else 0.0,
        errors=errors,
        completed=len(samples),
        seed=profile.seed,
    )


def sweep(
    profile: LoadProfile,
    user_levels: Sequence[int],
    duration_for_level: Callable[[int], float] | None = None,
) -> LatencyReport:
    """One run_load row per ascending user level."""
    if sorted(user_levels) != list(user_levels):
        raise ConfigError("user levels must be sorted ascending")
    rows = []
    for users in user_levels:
        duration = duration_for_level(users) if duration_for_level else profile.duration_s
        level_profile = LoadProfile(
            users=users,
            duration_s=duration,
            target=profile.target,
            think_time_ms=profile.think_time_ms,
            payload=profile.payload,
            seed=profile.seed,
            warmup_fraction=profile.warmup_fraction,
        )
        try:
            rows.append(run_load(level_profile))
        except SstkitError:
            # A failed level is reported, not fatal for the remaining levels.
            rows.append(
                LoadReportRow(users, 0, 0, 0.0, errors=-1, completed=0, seed=profile.seed)
            )
    return LatencyReport(tuple(rows), profile.seed)


@dataclass(frozen=True)
class ComparisonReport:
    """Deployed vs baseline medians per user level (three-column table)."""

    levels: tuple[int, ...]
    deployed: LatencyReport
    baseline: LatencyReport

    def to_dict(self) -> dict:
        return {
            "levels": list(self.levels),
            "deployed": self.deployed.to_dict(),
            "baseline": self.baseline.to_dict(),
        }

    def to_markdown(self) -> str:
        lines = [
            "| Concurrent users | Deployed median (ms) | Baseline median (ms) |",
            "| ---: | ---: | ---: |",
        ]
        for level, dep, base in zip(self.levels, self.deployed.rows, self.baseline.rows):
            lines.append(f"| {level} | {dep.median_ms:,} | {base.median_ms:,} |")
        return "\n".join(lines) + "\n"


def sweep_compare(
    deployed_target: Any,
    baseline_target: Any,
    user_levels: Sequence[int],
    duration_s: float,
    think_time_ms: float = 0.0,
    payload: Any = None,
    seed: int = 0,
    duration_for_level: Callable[[int], float] | None = None,
) -> ComparisonReport:
    reports = []
    for target in (deployed_target, baseline_target):
        profile = LoadProfile(
            users=max(user_levels),
            duration_s=duration_s,
            target=target,
            think_time_ms=think_time_ms,
            payload=payload,
            seed=seed,
        )
        reports.append(sweep(profile, user_levels, duration_for_level))
    return ComparisonReport(tuple(user_levels), reports[0], reports[1])


# ---------------------------------------------------------------------------
# Discrete-event closed-loop simulator (the independent oracle)
# ---------------------------------------------------------------------------


def simulate_queue(
    replicas: int, service_time_ms: float, users: int, duration_s: float,
    warmup_fraction: float = 0.10,
) -> float:
    """Predicted median latency (ms) for a closed loop with zero think time.

    Event-driven simulation with deterministic service times. The median
    converges to ceil(users/replicas) * service_time_ms whenever users is a
    multiple of replicas or the fractional occupancy users/replicas exceeds
    the next half-integer; at low fractional occupancy the deterministic
    loop splits into two latency classes and the nearest-rank median sits
    one service quantum lower. The simulation returns the true median.
    """
    if replicas < 1 or users < 1:
        raise ConfigError("need at least one replica and one user")
    if service_time_ms <= 0 or duration_s <= 0:
        raise ConfigError("service time and duration must be > 0")

    service_s = service_time_ms / 1000.0
    warmup_end = warmup_fraction * duration_s
    idle = replicas
    waiting: list[tuple[float, int]] = []  # FIFO (submit_time, user) queue
    events: list[tuple[float, int, int]] = []  # (time, seq, user), completion events
    seq = 0
    latencies: list[float] = []
    in_service: dict[int, float] = {}

    def submit(now: float, user: int) -> None:
        nonlocal idle, seq
        if now >= duration_s:
            return
        if idle > 0:
            idle -= 1
            in_service[user] = now
            heapq.heappush(events, (now + service_s, seq, user))
        else:
            waiting.append((now, user))
        seq += 1

    for user in range(users):
        submit(0.0, user)

    while events:
        now, _, user = heapq.heappop(events)
        submitted_at = in_service.pop(user)
        if submitted_at >= warmup_end:
            latencies.append(1000.0 * (now - submitted_at))
        if waiting:
            next_submit, next_user = waiting.pop(0)
            in_service[next_user] = next_submit
            heapq.heappush(events, (now + service_s, seq, next_user))
            seq += 1
        else:
            idle += 1
        submit(now, user)

    if not latencies:
        return math.ceil(users / replicas) * service_time_ms
    latencies.sort()
    return percentile_nearest_rank(latencies, 50)


def predicted_median_ms(replicas: int, service_time_ms: float, users: int) -> float:
    """Closed form of the steady-state law the simulator converges to.

    Valid when users/replicas is an integer or its fractional part is above
    one half (see simulate_queue); use the simulator elsewhere.
    """
    return math.ceil(users / replicas) * service_time_ms
