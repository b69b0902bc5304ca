"""Assemble a cell from a scenario and run it to completion."""
from dataclasses import dataclass
import math

import numpy as np

from .. import zadoffchu
from ..channel import Channel, ChannelConfig
from ..errors import ConfigError, InvariantViolation
from ..metrics import MetricEvent, Metrics
from ..simengine import (STREAM_BACKOFF, STREAM_GATE, STREAM_TRAFFIC, RandomStreams, Simulator)
from ..traffic import HIGH, LOW, ArrivalProcess
from .dcf import DcfEngine
from .frames import (CollectorState, DELIVERED, DROPPED, Frame, MeterState, QUEUED)
from .polling import PcfController, PpmacController
from .qdcf import QdcfController

SOURCES_PER_METER = 16


@dataclass
class SimResult:
    report: object
    frames: list
    cycles: list
    phases: list
    trace: list | None
    network: object


def group_count(sc):
    if sc.protocol == "ppmac":
        return sc.ppmac.group_count
    if sc.protocol == "qdcf":
        return sc.qdcf.group_count
    return 1


def zc_length_for(sc, total):
    n = sc.zc_length if sc.zc_length is not None else sc.ppmac.zc_length
    if n is None:
        return zadoffchu.next_prime(math.ceil(total / group_count(sc)) + 1)
    if not zadoffchu.is_prime(n) or n < 3:
        raise ConfigError(f"zc_length {n} must be an odd prime")
    return n


class Network:
    def __init__(self, sc):
        self.sc = sc
        self.sim = Simulator(record_trace=sc.record_trace)
        self.streams = RandomStreams(sc.seed)
        topo = sc.topology(self.streams)
        polar = list(topo.positions) + [j.position for j in sc.joins]
        self.n_initial = topo.meter_count
        total = len(polar)
        cart = [(0.0, 0.0)] + [(r * math.cos(t), r * math.sin(t)) for r, t in polar]
        cfg = ChannelConfig(sc.radio, sc.sensing_mode, sc.phy_rate_bps, sc.phy_header_ns)
        self.channel = Channel(self.sim, cfg, np.asarray(cart))
        self.meters = [None] + [MeterState(i + 1, polar[i]) for i in range(total)]
        self.collector = CollectorState()
        self.metrics = Metrics()
        self.frames = []
        self.cycles = []
        self.rejected = []
        self._fid = 0
        self._backoff = {}
        self._gate = {}

        g = group_count(sc)
        self.zc_length = zc_length_for(sc, total)
        roots = zadoffchu.valid_roots(self.zc_length)
        self.collector.groups = [[] for _ in range(g)]
        self.collector.free_roots = [list(roots) for _ in range(g)]

        proto = sc.protocol
        self.engine = None
        self.controller = None
        if proto in ("dcf", "edca", "qdcf"):
            self.engine = DcfEngine(self, edca=proto == "edca")
            if proto == "qdcf" and not sc.qdcf.gating_disabled:
                self.controller = QdcfController(self, self.engine)
        else:
            if sc.joins:
                self.engine = DcfEngine(self, data_contention=False)
            cls = PcfController if proto == "pcf" else PpmacController
            self.controller = cls(self, self.engine)

        for i in range(1, self.n_initial + 1):
            if self.register(i) is None:
                raise ConfigError(f"no free ZC root for meter {i}")
            self.meters[i].associated = True

    # -- per-meter random streams -------------------------------------------
    def backoff_rng(self, mid):
        rng = self._backoff.get(mid)
        if rng is None:
            rng = self._backoff[mid] = self.streams.stream(STREAM_BACKOFF, mid)
        return rng

    def gate_rng(self, mid):
        rng = self._gate.get(mid)
        if rng is None:
            rng = self._gate[mid] = self.streams.stream(STREAM_GATE, mid)
        return rng

    # -- registry ------------------------------------------------------------
    def register(self, mid):
        """Add a meter to the registry; returns (group, root) or None when full."""
        col = self.collector
        entry = col.registry.get(mid)
        if entry is not None:
            return entry
        g_count = len(col.groups)
        first = len(col.joined_order) % g_count
        for k in range(g_count):
            g = (first + k) % g_count
            if col.free_roots[g]:
                root = col.free_roots[g].pop(0)
                entry = (g, root)
                col.registry[mid] = entry
                col.groups[g].append(mid)
                col.joined_order.append(mid)
                m = self.meters[mid]
                m.group_id, m.zc_root = entry
                return entry
        return None

    def association_done(self, m, accepted):
        m.joining = False
        m.join_frame = None
        if accepted:
            m.associated = True
            self._start_traffic(m)
        else:
            self.rejected.append(m.id)

    def _join(self, m):
        m.joining = True
        m.join_frame = self._frame(m, "join-req", self.sc.sizes.join_req, HIGH, None)
        if m.failed:
            return
        self.engine.kick(m)

    # -- traffic -------------------------------------------------------------
    def _frame(self, m, kind, size, cls, source):
        f = Frame(self._fid, m.id, 0, kind, size, cls, self.sim.now, source)
        self._fid += 1
        return f

    def _start_traffic(self, m):
        t0 = self.sim.now
        for k, spec in enumerate(self.sc.traffic_for(m.id)):
            if spec.kind == "saturated":
                m.saturated.append(spec)
                self._generate(m, spec)
                continue
            proc = ArrivalProcess(spec, self.streams.stream(STREAM_TRAFFIC,
                                                            m.id * SOURCES_PER_METER + k))
            t = t0 + proc.first(0)
            if t <= self.sc.duration_ns:
                self.sim.schedule(t, "arrival", m.id, self._arrival, (m, proc, t0))
        self._notify(m)

    def _arrival(self, payload):
        m, proc, t0 = payload
        self._generate(m, proc.spec)
        t = t0 + proc.next_arrival(self.sim.now - t0)
        if t <= self.sc.duration_ns:
            self.sim.schedule(max(t, self.sim.now), "arrival", m.id, self._arrival, payload)
        self._notify(m)

    def _generate(self, m, spec):
        f = self._frame(m, "data", spec.payload_bytes, spec.priority_class, spec)
        self.frames.append(f)
        m.queues[spec.priority_class].append(f)
        self.metrics.record(MetricEvent(self.sim.now, "generated", m.id, f))

    def _notify(self, m):
        if self.engine is not None and self.engine.data_contention:
            self.engine.kick(m)

    def take_hol(self, m):
        q = m.queues[HIGH] or m.queues[LOW]
        if not q:
            return None
        f = q.popleft()
        if f.source in m.saturated:
            self._generate(m, f.source)
        return f

    def check_data_sender(self, m):
        if not self.sc.check_invariants:
            return
        if not m.associated:
            raise InvariantViolation(f"data frame from unassociated meter {m.id}")

    # -- outcome sinks ---------------------------------------------------------
    def record_attempt(self, m, frame, label):
        self.metrics.record(MetricEvent(self.sim.now, "attempt", m.id, frame, label))

    def frame_delivered(self, m, frame):
        frame.outcome = DELIVERED
        frame.done_ns = self.sim.now
        m.completed_frame_count += 1
        self.metrics.record(MetricEvent(self.sim.now, "delivered", m.id, frame))

    def frame_dropped(self, m, frame):
        frame.outcome = DROPPED
        frame.done_ns = self.sim.now
        self.metrics.record(MetricEvent(self.sim.now, "dropped", m.id, frame))

    def record_cycle(self, c):
        self.cycles.append(c)
        self.metrics.record(MetricEvent(self.sim.now, "cycle", -1, None, c.length_ns))

    def record_flag(self, mid):
        self.metrics.record(MetricEvent(self.sim.now, "flagged", mid))

    # -- faults ---------------------------------------------------------------
    def _fail(self, m):
        m.failed = True
        self.metrics.record(MetricEvent(self.sim.now, "failed", m.id))
        if self.engine is not None:
            self.engine.on_fail(m)

    def _recover(self, m):
        m.failed = False
        if self.engine is not None:
            self.engine.on_recover(m)

    # -- run -------------------------------------------------------------------
    def run(self):
        sc = self.sc
        sim = self.sim
        for i in range(1, self.n_initial + 1):
            sim.schedule(0, "arrival", i, self._start_traffic, self.meters[i])
        for j in sc.joins:
            sim.schedule(j.join_at_ns, "join", j.meter, self._join, self.meters[j.meter])
        for f in sc.faults:
            m = self.meters[f.meter]
            sim.schedule(f.fail_at_ns, "fail", f.meter, self._fail, m)
            if f.recover_at_ns is not None:
                sim.schedule(f.recover_at_ns, "recover", f.meter, self._recover, m)
        if self.controller is not None:
            self.controller.start()
        sim.run_until(sc.duration_ns)
        return self._finish()

    def _finish(self):
        queued = sum(m.queued_count() for m in self.meters[1:])
        met = self.metrics
        tally = {QUEUED: 0, DELIVERED: 0, DROPPED: 0}
        for f in self.frames:
            tally[f.outcome] += 1
        if (met.generated != met.delivered + met.dropped + queued
                or tally[QUEUED] != queued or tally[DELIVERED] != met.delivered
                or tally[DROPPED] != met.dropped):
            raise InvariantViolation(
                f"frame conservation broken: generated={met.generated} "
                f"delivered={met.delivered} dropped={met.dropped} queued={queued}")
        extra = {
            "protocol": self.sc.protocol,
            "meters": len(self.meters) - 1,
            "associated": sum(1 for m in self.meters[1:] if m.associated),
            "rejected_joins": len(self.rejected),
            "zc_length": self.zc_length,
            "events": self.sim.dispatched,
        }
        report = met.finalize(self.sc.duration_ns, queued, self.channel.busy_time_ns(), extra)
        phases = self.controller.phases if isinstance(self.controller, QdcfController) else []
        return SimResult(report, self.frames, self.cycles, phases, self.sim.trace, self)


def simulate(sc):
    return Network(sc).run()
