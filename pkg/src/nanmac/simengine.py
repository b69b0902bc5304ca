"""Deterministic discrete-event kernel, seeded random streams, disk topology."""
from dataclasses import dataclass, field
import heapq
import math
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import DomainError, PastEvent

NS_PER_S = 1_000_000_000


class SimEvent(NamedTuple):
    time_ns: int
    seq: int
    kind: str
    target: int
    action: Callable[..., Any] | None = None
    payload: Any = None


class EventQueue:
    """Min-heap of events ordered by (time_ns, seq)."""

    def __init__(self):
        self._heap = []
        self._seq = 0

    def push(self, time_ns, kind, target, action=None, payload=None):
        ev = SimEvent(time_ns, self._seq, kind, target, action, payload)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def pop(self):
        return heapq.heappop(self._heap)

    def peek_time(self):
        return self._heap[0][0] if self._heap else None

    def __len__(self):
        return len(self._heap)


class Simulator:
    """Single-threaded event loop over integer-nanosecond time.

    ``trace`` collects (time, seq, kind, target) of dispatched events when
    enabled; two runs of the same scenario and seed produce equal traces.
    """

    def __init__(self, record_trace=False):
        self.now = 0
        self.queue = EventQueue()
        self.trace = [] if record_trace else None
        self.dispatched = 0

    def schedule(self, time_ns, kind, target, action=None, payload=None):
        if time_ns < self.now:
            raise PastEvent(f"event at {time_ns} ns is before clock {self.now} ns")
        return self.queue.push(int(time_ns), kind, target, action, payload)

    def schedule_in(self, delay_ns, kind, target, action=None, payload=None):
        return self.schedule(self.now + delay_ns, kind, target, action, payload)

    def run_until(self, t_end_ns):
        if t_end_ns < self.now:
            raise PastEvent(f"t_end {t_end_ns} is before clock {self.now}")
        heap = self.queue._heap
        pop = heapq.heappop
        trace = self.trace
        while heap and heap[0][0] <= t_end_ns:
            ev = pop(heap)
            self.now = ev[0]
            self.dispatched += 1
            if trace is not None:
                trace.append((ev[0], ev[1], ev[2], ev[3]))
            if ev[4] is not None:
                if ev[5] is None:
                    ev[4]()
                else:
                    ev[4](ev[5])
        self.now = t_end_ns


# purpose ids for derived random streams
STREAM_TOPOLOGY = 0
STREAM_BACKOFF = 1
STREAM_TRAFFIC = 2
STREAM_GATE = 3
STREAM_COLLECTOR = 4
STREAM_PHASE = 5


class RandomStreams:
    """Independent generators derived from (master_seed, purpose, index)."""

    def __init__(self, master_seed):
        self.master_seed = int(master_seed) & 0xFFFFFFFFFFFFFFFF

    def stream(self, purpose, index=0):
        ss = np.random.SeedSequence(self.master_seed, spawn_key=(int(purpose), int(index)))
        return np.random.Generator(np.random.PCG64(ss))

    def topology(self):
        return self.stream(STREAM_TOPOLOGY)

    def meter(self, purpose, meter_id):
        return self.stream(purpose, meter_id)


@dataclass
class CellTopology:
    cell_radius_m: float
    positions: list = field(default_factory=list)  # (r_m, theta_rad) per meter

    @property
    def meter_count(self):
        return len(self.positions)

    def cartesian(self):
        if not self.positions:
            return np.zeros((0, 2))
        arr = np.asarray(self.positions, dtype=float)
        return np.column_stack([arr[:, 0] * np.cos(arr[:, 1]), arr[:, 0] * np.sin(arr[:, 1])])


def meter_count_for_density(cell_radius_m, density_per_m2):
    return int(round(density_per_m2 * math.pi * cell_radius_m ** 2))


def sample_topology(cell_radius_m, stream, density_per_m2=None, count=None):
    """Uniform meters on the disk: r = R sqrt(u), theta = 2 pi v."""
    if not cell_radius_m >= 1:
        raise DomainError("cell radius must be at least 1 m")
    if (density_per_m2 is None) == (count is None):
        raise DomainError("give exactly one of density_per_m2 or count")
    if density_per_m2 is not None:
        if not density_per_m2 > 0:
            raise DomainError("density must be positive")
        count = meter_count_for_density(cell_radius_m, density_per_m2)
    if count < 0:
        raise DomainError("count must be nonnegative")
    u = stream.random(count)
    v = stream.random(count)
    r = cell_radius_m * np.sqrt(u)
    theta = 2.0 * math.pi * v
    return CellTopology(cell_radius_m, [(float(a), float(b)) for a, b in zip(r, theta)])
