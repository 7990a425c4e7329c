"""Inference-timing and open-loop load-generation harness.

Timing uses the monotonic nanosecond clock and reports milliseconds.  The
load generator is open-loop: requests follow a fixed global schedule at
the offered rate (round-robin across workers), and each latency is
measured from the request's *scheduled* time, so queueing delay under
saturation is visible instead of being silently omitted.  A no-op endpoint
(/healthz) can be driven with the same machinery to report harness+server
overhead separately from model inference.
"""

from __future__ import annotations

import http.client
import socket
import statistics
import threading
import time
import urllib.parse
from dataclasses import dataclass

from .encoding import decode_labels, encode_query
from .forest import ForestModel, predict
from .labels import JURISDICTIONS

EMPTY_RUN = "EMPTY_RUN"


class BenchError(ValueError):
    pass


@dataclass(frozen=True)
class TimingStats:
    count: int
    mean_ms: float
    std_ms: float
    median_ms: float
    p95_ms: float
    p99_ms: float

    @classmethod
    def from_samples_ms(cls, samples: list[float]) -> "TimingStats":
        if not samples:
            return cls(0, 0.0, 0.0, 0.0, 0.0, 0.0)
        ordered = sorted(samples)

        def pct(q: float) -> float:
            idx = min(len(ordered) - 1, max(0, round(q * (len(ordered) - 1))))
            return ordered[idx]

        return cls(
            count=len(samples),
            mean_ms=statistics.fmean(samples),
            std_ms=statistics.pstdev(samples) if len(samples) > 1 else 0.0,
            median_ms=pct(0.50),
            p95_ms=pct(0.95),
            p99_ms=pct(0.99),
        )

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean_ms": round(self.mean_ms, 4),
            "std_ms": round(self.std_ms, 4),
            "median_ms": round(self.median_ms, 4),
            "p95_ms": round(self.p95_ms, 4),
            "p99_ms": round(self.p99_ms, 4),
        }


@dataclass(frozen=True)
class InferenceBenchReport:
    repetitions: int
    warmup: int
    per_pair: dict[tuple[str, str], TimingStats]
    combined: TimingStats

    def to_dict(self) -> dict:
        return {
            "repetitions": self.repetitions,
            "warmup": self.warmup,
            "pairs": {f"{s}->{t}": stats.to_dict() for (s, t), stats in self.per_pair.items()},
            "combined": self.combined.to_dict(),
        }


DEFAULT_PAIRS = tuple((j, j) for j in JURISDICTIONS)


def measure_inference(
    model: ForestModel,
    repetitions: int = 500,
    pairs: tuple[tuple[str, str], ...] = DEFAULT_PAIRS,
    warmup: int = 50,
    category: str = "personal_data",
    sensitivity: int = 2,
) -> InferenceBenchReport:
    """Time predict+decode per jurisdiction pair, excluding warm-up runs."""
    if repetitions < 1:
        raise BenchError(f"{EMPTY_RUN}: repetitions must be >= 1")
    if model is None:
        raise BenchError("model is required")

    per_pair: dict[tuple[str, str], TimingStats] = {}
    all_samples: list[float] = []
    version = model.version()
    for source, target in pairs:
        fv = encode_query(category, sensitivity, source, target)
        for _ in range(warmup):
            bits, _ = predict(model, fv)
            decode_labels(bits, source, target, category, version=version)
        samples = []
        for _ in range(repetitions):
            t0 = time.perf_counter_ns()
            bits, _ = predict(model, fv)
            decode_labels(bits, source, target, category, version=version)
            samples.append((time.perf_counter_ns() - t0) / 1e6)
        per_pair[(source, target)] = TimingStats.from_samples_ms(samples)
        all_samples.extend(samples)
    return InferenceBenchReport(
        repetitions=repetitions, warmup=warmup, per_pair=per_pair, combined=TimingStats.from_samples_ms(all_samples)
    )


DEFAULT_QUERY_PATH = "/policies/compliance?source=GDPR&target=CCPA&category=personal_data&sensitivity=2"


@dataclass(frozen=True)
class LoadReport:
    workers: int
    offered_rate: float
    duration_s: float
    attempted: int
    completed: int
    errors: int
    achieved_rps: float
    latency: TimingStats
    failed: bool

    def to_dict(self) -> dict:
        return {
            "workers": self.workers,
            "offered_rate": self.offered_rate,
            "duration_s": self.duration_s,
            "attempted": self.attempted,
            "completed": self.completed,
            "errors": self.errors,
            "achieved_rps": round(self.achieved_rps, 2),
            "latency": self.latency.to_dict(),
            "failed": self.failed,
        }


class _HttpWorker:
    def __init__(self, url: str, path: str):
        parsed = urllib.parse.urlsplit(url)
        self._host = parsed.hostname
        self._port = parsed.port or 80
        self._path = path
        self._conn: http.client.HTTPConnection | None = None

    def __call__(self) -> bool:
        for _ in range(2):  # one reconnect attempt per request
            try:
                if self._conn is None:
                    self._conn = http.client.HTTPConnection(self._host, self._port, timeout=10)
                    self._conn.connect()
                    self._conn.sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                self._conn.request("GET", self._path)
                response = self._conn.getresponse()
                response.read()
                return 200 <= response.status < 300
            except OSError:
                if self._conn is not None:
                    self._conn.close()
                self._conn = None
        return False

    def close(self) -> None:
        if self._conn is not None:
            self._conn.close()


def run_load(
    target,
    workers: int,
    rate: float,
    duration_s: float,
    path: str = DEFAULT_QUERY_PATH,
    error_threshold: float = 0.01,
) -> LoadReport:
    """Open-loop load against a URL or an in-process ComplianceApp.

    Each of the `workers` generator threads owns every workers-th slot of
    the global schedule; a request that finishes after its scheduled time
    still counts its queueing delay.
    """
    if workers < 1 or rate <= 0 or duration_s <= 0:
        raise BenchError("workers, rate and duration must be positive")

    if isinstance(target, str):
        make_request = lambda: _HttpWorker(target, path)  # noqa: E731
    else:
        app = target
        query = dict(urllib.parse.parse_qsl(urllib.parse.urlsplit(path).query))

        def make_request():
            def call() -> bool:
                app.compliance_query(
                    query.get("source", "GDPR"),
                    query.get("target", "CCPA"),
                    query.get("category", "personal_data"),
                    int(query.get("sensitivity", "2")),
                )
                return True

            call.close = lambda: None
            return call

    total = int(rate * duration_s)
    interval = 1.0 / rate
    start = time.perf_counter() + 0.05
    latencies_ms: list[list[float]] = [[] for _ in range(workers)]
    errors = [0] * workers

    def worker(worker_id: int):
        request = make_request()
        samples = latencies_ms[worker_id]
        for k in range(worker_id, total, workers):
            scheduled = start + k * interval
            now = time.perf_counter()
            if now < scheduled:
                time.sleep(scheduled - now)
            ok = request()
            done = time.perf_counter()
            if ok:
                samples.append((done - scheduled) * 1000.0)
            else:
                errors[worker_id] += 1
        if hasattr(request, "close"):
            request.close()

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(workers)]
    t0 = time.perf_counter()
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    elapsed = max(time.perf_counter() - t0, 1e-9)

    flat = [x for bucket in latencies_ms for x in bucket]
    error_count = sum(errors)
    completed = len(flat)
    return LoadReport(
        workers=workers,
        offered_rate=rate,
        duration_s=duration_s,
        attempted=total,
        completed=completed,
        errors=error_count,
        achieved_rps=completed / elapsed,
        latency=TimingStats.from_samples_ms(flat),
        failed=error_count > error_threshold * max(total, 1),
    )


def probe_capacity(url: str, connections: int = 2, seconds: float = 2.0, path: str = DEFAULT_QUERY_PATH) -> float:
    """Closed-loop throughput probe: hammer with N connections, count completions."""
    stop = time.perf_counter() + seconds
    counts = [0] * connections

    def worker(i: int):
        client = _HttpWorker(url, path)
        while time.perf_counter() < stop:
            if client():
                counts[i] += 1
        client.close()

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(connections)]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join()
    return sum(counts) / seconds
