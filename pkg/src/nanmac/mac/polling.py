"""Collector-driven polling: PCF and probe-and-pull (PP-MAC).

Both share the poll / response / ACK exchange and the silent-meter miss
counters; they differ only in which meters a cycle polls.
"""
from dataclasses import dataclass, field

import numpy as np

from .. import zadoffchu
from ..channel import COLLECTOR, DELIVERED, COLLIDED
from ..errors import InvariantViolation
from ..simengine import STREAM_COLLECTOR


@dataclass
class CycleRecord:
    index: int
    start_ns: int
    length_ns: int = 0
    group: int = -1
    polls: int = 0
    data_responses: int = 0
    null_responses: int = 0
    misses: int = 0
    probed: list = field(default_factory=list)
    responders: list = field(default_factory=list)
    detected: list = field(default_factory=list)
    polled: list = field(default_factory=list)


class PollingController:
    def __init__(self, net, engine=None):
        self.net = net
        self.sim = net.sim
        self.ch = net.channel
        self.p = net.sc.pcf
        self.dcf = net.sc.dcf
        self.sizes = net.sc.sizes
        self.engine = engine
        self.sifs = self.dcf.sifs_ns
        self.slot = self.dcf.slot_ns
        self.collector = net.collector
        self.cycle = None
        self.cycle_index = 0
        self._pending = []
        self._last_start = None
        self.check_invariants = net.sc.check_invariants

    @property
    def poll_timeout(self):
        if self.p.poll_timeout_ns is not None:
            return self.p.poll_timeout_ns
        return self.sifs + self.slot

    def _air(self, size, node):
        return self.ch.airtime_ns(size, node, COLLECTOR) if node else \
            self.ch.airtime_ns(size, COLLECTOR, None)

    # -- cycle scheduling -------------------------------------------------
    def start(self):
        if self.engine is not None:
            self.engine.set_open(False)
        self.sim.schedule(0, "beacon", COLLECTOR, self._begin_cycle)

    def _begin_cycle(self):
        if self.engine is not None:
            self.engine.set_open(False)
            self.engine.when_quiet(self._begin_now)
        else:
            self._begin_now()

    def _begin_now(self):
        now = self.sim.now
        if self.p.beacon_interval_ns and self._last_start is not None:
            earliest = self._last_start + self.p.beacon_interval_ns
            if earliest > now:
                self.sim.schedule(earliest, "beacon", COLLECTOR, self._begin_now)
                return
        self._last_start = now
        self.cycle = CycleRecord(self.cycle_index, now)
        self.cycle_index += 1
        self.open_cycle()

    def open_cycle(self):
        raise NotImplementedError

    def _finish_cycle(self):
        c = self.cycle
        c.length_ns = self.sim.now - c.start_ns
        self.net.record_cycle(c)
        self.cycle = None
        self._after_cycle()

    def _after_cycle(self):
        cp = self.p.contention_period_ns
        if cp > 0 and self.engine is not None:
            self.engine.set_open(True)
            self.sim.schedule_in(cp, "beacon", COLLECTOR, self._begin_cycle)
        else:
            self._begin_cycle()

    # -- poll exchange ------------------------------------------------------
    def _poll_list(self, candidates, order):
        flagged = self.collector.flagged
        ids = [i for i in candidates if i not in flagged]
        if order == "lcfs":
            meters = self.net.meters
            ids.sort(key=lambda i: (meters[i].completed_frame_count, i))
        return ids

    def _next_poll(self):
        if not self._pending:
            self._finish_cycle()
            return
        mid, live = self._pending.pop(0)
        if self.check_invariants and not live:
            self._check_poll(mid)
        self.sim.schedule_in(self.sifs, "poll", mid, self._send_poll, (mid, live))

    def _check_poll(self, mid):
        if mid in self.collector.flagged:
            raise InvariantViolation(f"flagged meter {mid} polled for data")
        if self.p.poll_order == "lcfs":
            meters = self.net.meters
            mine = meters[mid].completed_frame_count
            rest = [meters[i].completed_frame_count for i, live in self._pending if not live]
            if rest and min(rest) < mine:
                raise InvariantViolation(f"LCFS order broken at meter {mid}")

    def _send_poll(self, payload):
        mid, live = payload
        self.cycle.polls += 1
        self.ch.start(COLLECTOR, mid, "poll", self._air(self.sizes.beacon, mid),
                      on_end=self._poll_end, payload=(mid, live))

    def _poll_end(self, tr):
        mid, live = tr.payload
        m = self.net.meters[mid]
        timeout = self.poll_timeout
        if (tr.outcome == DELIVERED and not m.failed and m.associated
                and timeout > self.sifs):
            self.sim.schedule_in(self.sifs, "tx-start", mid, self._respond,
                                 (m, live, self.sim.now + timeout))
        else:
            self.sim.schedule_in(timeout, "timer", COLLECTOR, self._timeout, mid)

    def _respond(self, payload):
        m, live, deadline = payload
        if m.failed:
            self.sim.schedule(deadline, "timer", COLLECTOR, self._timeout, m.id)
            return
        frame = None
        if not live:
            if m.current is None:
                m.current = self.net.take_hol(m)
            frame = m.current
        if frame is None:
            self.ch.start(m.id, COLLECTOR, "null", self._air(self.sizes.control, m.id),
                          on_end=self._null_end, payload=m)
        else:
            self.net.check_data_sender(m)
            self.ch.start(m.id, COLLECTOR, "data", self._air(frame.size_bytes, m.id), frame,
                          on_end=self._data_end, payload=m)

    def _timeout(self, mid):
        self.cycle.misses += 1
        self._miss(mid)
        self._next_poll()

    def _null_end(self, tr):
        m = tr.payload
        if tr.outcome == DELIVERED:
            self.cycle.null_responses += 1
            self._heard(m.id)
        else:
            self.cycle.misses += 1
            self._miss(m.id)
        self._next_poll()

    def _data_end(self, tr):
        m = tr.payload
        if tr.outcome == DELIVERED:
            self.cycle.data_responses += 1
            self._heard(m.id)
            self.sim.schedule_in(self.sifs, "tx-start", COLLECTOR, self._send_ack, m)
            return
        self.cycle.misses += 1
        self._miss(m.id)
        self._meter_failure(m, tr.outcome)
        self._next_poll()

    def _send_ack(self, m):
        self.ch.start(COLLECTOR, m.id, "ack", self._air(self.sizes.control, m.id),
                      on_end=self._ack_end, payload=m)

    def _ack_end(self, tr):
        m = tr.payload
        if not m.failed and m.current is not None:
            if tr.outcome == DELIVERED:
                frame = m.current
                m.current = None
                self.net.record_attempt(m, frame, "ok")
                self.net.frame_delivered(m, frame)
            else:
                self._meter_failure(m, tr.outcome)
        self._next_poll()

    def _meter_failure(self, m, outcome):
        frame = m.current
        if frame is None or m.failed:
            return
        self.net.record_attempt(m, frame, "collided" if outcome == COLLIDED else "lost")
        frame.retries += 1
        if frame.retries >= self.dcf.retry_limit:
            m.current = None
            self.net.frame_dropped(m, frame)

    # -- silent-meter detection --------------------------------------------
    def _heard(self, mid):
        col = self.collector
        col.misses[mid] = 0
        if mid in col.flagged:
            col.flagged.discard(mid)

    def _miss(self, mid):
        col = self.collector
        n = col.misses.get(mid, 0) + 1
        col.misses[mid] = n
        if n >= self.p.k_misses and mid not in col.flagged:
            col.flagged.add(mid)
            self.net.record_flag(mid)

    def _liveness(self):
        if not self.collector.flagged or self.p.liveness_every <= 0:
            return []
        if self.cycle.index % self.p.liveness_every:
            return []
        return [(i, True) for i in sorted(self.collector.flagged)]


class PcfController(PollingController):
    def open_cycle(self):
        self.ch.start(COLLECTOR, None, "beacon", self._air(self.sizes.beacon, None),
                      on_end=self._beacon_end)

    def _beacon_end(self, tr):
        meters = self.net.meters
        ids = [i for i in sorted(self.collector.registry) if meters[i].associated]
        ids = self._poll_list(ids, self.p.poll_order)
        self.cycle.polled = ids
        self._pending = [(i, False) for i in ids] + self._liveness()
        if not self._pending:
            self._finish_cycle()
            return
        self._next_poll()


class PpmacController(PollingController):
    def __init__(self, net, engine=None):
        super().__init__(net, engine)
        self.pp = net.sc.ppmac
        self.group_cursor = 0
        self.zc_length = net.zc_length
        self._sequences = {}
        self.slot_ns = self.zc_length * self.pp.chip_ns
        self.rng = net.streams.stream(STREAM_COLLECTOR)

    def _sequence(self, root):
        seq = self._sequences.get(root)
        if seq is None:
            seq = self._sequences[root] = zadoffchu.generate(root, self.zc_length)
        return seq

    def open_cycle(self):
        g = self.group_cursor
        self.cycle.group = g
        self.ch.start(COLLECTOR, None, "probe", self._air(self.sizes.beacon, None),
                      on_end=self._probe_end)

    def _probe_end(self, tr):
        g = self.cycle.group
        members = self.collector.groups[g]
        meters = self.net.meters
        members = [i for i in members if meters[i].associated]
        responders = [i for i in members if not meters[i].failed and meters[i].has_data()]
        self.cycle.probed = members
        self.cycle.responders = responders
        for i in responders:
            self.ch.start(i, COLLECTOR, "probe-ack", self.slot_ns)
        self.sim.schedule_in(self.slot_ns, "probe", COLLECTOR, self._slot_end)

    def _slot_end(self):
        g = self.cycle.group
        registry = self.collector.registry
        members = self.collector.groups[g]
        # the collector correlates against the roots it handed to this group
        codebook = [self._sequence(registry[i][1]) for i in members]
        pos = {mid: k for k, mid in enumerate(members)}
        idx = [pos[i] for i in self.cycle.responders]
        rx = np.zeros(self.zc_length, dtype=complex)
        if idx:
            rx = zadoffchu.superpose(codebook, idx)
        found = set()
        if codebook:
            rng = self.rng if self.pp.noise_sigma > 0 else None
            found = zadoffchu.detect_responders(
                rx, codebook, self.pp.noise_sigma, self.pp.detection_threshold, rng,
                statistic=self.pp.detection_statistic)
        detected = sorted(members[k] for k in found)
        self.cycle.detected = detected
        polled = [i for i in detected if i not in self.collector.flagged]
        self.cycle.polled = polled
        if self.check_invariants:
            group = set(self.collector.groups[g])
            if not set(polled) <= set(detected) <= group:
                raise InvariantViolation("PP-MAC polled set escapes the probed group")
        self._pending = [(i, False) for i in polled] + self._liveness_group(g)
        self._next_poll()

    def _liveness_group(self, g):
        live = self._liveness()
        members = set(self.collector.groups[g])
        return [(i, t) for i, t in live if i in members]

    def _after_cycle(self):
        self.group_cursor = (self.group_cursor + 1) % len(self.collector.groups)
        if self.group_cursor == 0:
            super()._after_cycle()
        else:
            self._begin_cycle()
