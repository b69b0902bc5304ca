"""Run-level accounting: delays, collisions, throughput, fairness, cycles."""
from dataclasses import asdict, dataclass, field
import math
from typing import NamedTuple

from .errors import AllZero, OutOfOrder


def jain_index(values):
    xs = [float(v) for v in values]
    if any(v < 0 for v in xs):
        raise ValueError("values must be nonnegative")
    total = sum(xs)
    if not xs or total <= 0:
        raise AllZero("at least one value must be positive")
    return total * total / (len(xs) * sum(v * v for v in xs))


def nearest_rank(sorted_values, pct):
    n = len(sorted_values)
    rank = max(1, math.ceil(pct / 100.0 * n))
    return sorted_values[rank - 1]


DELAY_KEYS = ("count", "mean_ns", "median_ns", "p95_ns", "p99_ns", "max_ns")
CYCLE_KEYS = ("count", "min_ns", "mean_ns", "max_ns")


def delay_stats(delays):
    if not delays:
        return None
    s = sorted(delays)
    return {
        "count": len(s),
        "mean_ns": sum(s) / len(s),
        "median_ns": nearest_rank(s, 50),
        "p95_ns": nearest_rank(s, 95),
        "p99_ns": nearest_rank(s, 99),
        "max_ns": s[-1],
    }


class MetricEvent(NamedTuple):
    time_ns: int
    kind: str  # generated | attempt | delivered | dropped | cycle | flagged
    meter: int = -1
    frame: object = None
    value: object = None


@dataclass
class MetricsReport:
    duration_ns: int
    generated: int
    delivered: int
    dropped: int
    queued: int
    attempts: int
    collided_attempts: int
    lost_attempts: int
    collision_ratio: float
    delay: dict
    per_meter_delivered: dict
    throughput_bps: float
    per_meter_throughput_bps: dict
    jain_index: float | None
    cycles: dict | None
    airtime_utilization: float
    silent_flagged: list = field(default_factory=list)
    silent_detection_latency_ns: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["per_meter_delivered"] = {str(k): v for k, v in sorted(self.per_meter_delivered.items())}
        d["per_meter_throughput_bps"] = {str(k): v for k, v in
                                         sorted(self.per_meter_throughput_bps.items())}
        return d

    def flat(self):
        """Scalar summary fields keyed by dotted path (per-meter maps omitted)."""
        out = {}

        def walk(prefix, obj):
            if isinstance(obj, dict):
                for k in obj:
                    walk(f"{prefix}.{k}" if prefix else str(k), obj[k])
            elif isinstance(obj, list):
                out[prefix] = len(obj)
            else:
                out[prefix] = obj
        d = self.to_dict()
        for key in ("per_meter_delivered", "per_meter_throughput_bps"):
            d.pop(key)
        # absent sections keep their columns so sweep rows line up
        for cls, stats in d["delay"].items():
            if stats is None:
                d["delay"][cls] = dict.fromkeys(DELAY_KEYS)
        if d["cycles"] is None:
            d["cycles"] = dict.fromkeys(CYCLE_KEYS)
        walk("", d)
        return out


class Metrics:
    def __init__(self):
        self.last_time = 0
        self.generated = 0
        self.delivered = 0
        self.dropped = 0
        self.attempts = 0
        self.collided = 0
        self.lost = 0
        self.delays = {"high": [], "low": []}
        self.meter_generated = {}
        self.meter_delivered = {}
        self.meter_bytes = {}
        self.cycle_lengths = []
        self.flagged = []
        self.flag_latency = []
        self.fail_times = {}

    def record(self, ev):
        if ev.time_ns < self.last_time:
            raise OutOfOrder(f"event at {ev.time_ns} after {self.last_time}")
        self.last_time = ev.time_ns
        kind = ev.kind
        if kind == "generated":
            self.generated += 1
            self.meter_generated[ev.meter] = self.meter_generated.get(ev.meter, 0) + 1
        elif kind == "attempt":
            self.attempts += 1
            if ev.value == "collided":
                self.collided += 1
            elif ev.value == "lost":
                self.lost += 1
        elif kind == "delivered":
            frame = ev.frame
            self.delivered += 1
            self.delays[frame.priority_class].append(ev.time_ns - frame.enqueue_ns)
            self.meter_delivered[ev.meter] = self.meter_delivered.get(ev.meter, 0) + 1
            self.meter_bytes[ev.meter] = self.meter_bytes.get(ev.meter, 0) + frame.size_bytes
        elif kind == "dropped":
            self.dropped += 1
        elif kind == "cycle":
            self.cycle_lengths.append(ev.value)
        elif kind == "failed":
            self.fail_times[ev.meter] = ev.time_ns
        elif kind == "flagged":
            self.flagged.append(ev.meter)
            if ev.meter in self.fail_times:
                self.flag_latency.append(ev.time_ns - self.fail_times[ev.meter])
        else:
            raise ValueError(f"unknown metric event {kind!r}")

    def finalize(self, duration_ns, queued=0, busy_ns=0, extra=None):
        per_meter = {m: self.meter_delivered.get(m, 0) for m in sorted(self.meter_generated)}
        dur_s = duration_ns / 1e9 if duration_ns else 0.0
        thr = {m: (self.meter_bytes.get(m, 0) * 8 / dur_s if dur_s else 0.0) for m in per_meter}
        jain = None
        if per_meter and any(per_meter.values()):
            jain = jain_index(per_meter.values())
        cycles = None
        if self.cycle_lengths:
            c = self.cycle_lengths
            cycles = {"count": len(c), "min_ns": min(c), "mean_ns": sum(c) / len(c),
                      "max_ns": max(c)}
        return MetricsReport(
            duration_ns=duration_ns,
            generated=self.generated,
            delivered=self.delivered,
            dropped=self.dropped,
            queued=queued,
            attempts=self.attempts,
            collided_attempts=self.collided,
            lost_attempts=self.lost,
            collision_ratio=self.collided / self.attempts if self.attempts else 0.0,
            delay={cls: delay_stats(v) for cls, v in self.delays.items()},
            per_meter_delivered=per_meter,
            throughput_bps=sum(thr.values()),
            per_meter_throughput_bps=thr,
            jain_index=jain,
            cycles=cycles,
            airtime_utilization=busy_ns / duration_ns if duration_ns else 0.0,
            silent_flagged=list(self.flagged),
            silent_detection_latency_ns=list(self.flag_latency),
            extra=dict(extra or {}),
        )
