"""Contention gating on top of DCF: broadcast (Q, T), optionally group by group.

Each phase (or, in group-by-group mode, each group window) opens with a
parameter broadcast from the collector.  A meter with data draws
u ~ U(0, 1) once per phase from its own stream; it contends if u <= Q and
otherwise stays silent until T after the broadcast.
"""
from dataclasses import dataclass

from ..channel import COLLECTOR


@dataclass
class PhaseRecord:
    index: int
    start_ns: int
    broadcast_ns: int = -1
    group: int = -1
    winners: int = 0
    losers: int = 0


class QdcfController:
    def __init__(self, net, engine):
        self.net = net
        self.sim = net.sim
        self.ch = net.channel
        self.engine = engine
        self.p = net.sc.qdcf
        self.size = net.sc.sizes.beacon
        self.slot = net.sc.dcf.slot_ns
        self.gbg = self.p.group_mode == "group-by-group"
        self.groups = self.p.group_count
        self.window_ns = self.p.phase_ns // self.groups if self.gbg else self.p.phase_ns
        self.window = -1
        self.pending = True
        self.group = 0
        self.t_b = 0
        self.phases = []
        engine.gate_hook = self._hook

    def start(self):
        self.sim.schedule(0, "broadcast-params", COLLECTOR, self._window_start)

    def _window_start(self):
        self.window += 1
        self.pending = True
        self.group = self.window % self.groups if self.gbg else -1
        self.phases.append(PhaseRecord(self.window, self.sim.now, group=self.group))
        meters = self.net.meters
        for i in self._contending():
            m = meters[i]
            if m.current is not None and m.current.kind == "data":
                self.engine.set_gate(m, False)
        self.sim.schedule_in(self.window_ns, "broadcast-params", COLLECTOR, self._window_start)
        self._try_broadcast(self.window)

    def _contending(self):
        return [int(i) for i in self.engine.contending.nonzero()[0]]

    def _try_broadcast(self, window):
        if window != self.window:
            return
        if self.ch.phys_busy(COLLECTOR):
            self.sim.schedule_in(self.slot, "broadcast-params", COLLECTOR,
                                 self._try_broadcast, window)
            return
        air = self.ch.airtime_ns(self.size, COLLECTOR, None)
        self.ch.start(COLLECTOR, None, "broadcast-params", air, on_end=self._broadcast_end,
                      payload=window)

    def _broadcast_end(self, tr):
        if tr.payload != self.window:
            return
        self.pending = False
        self.t_b = self.sim.now
        self.phases[-1].broadcast_ns = self.t_b
        meters = self.net.meters
        for i in self._contending():
            m = meters[i]
            if m.current is not None and m.current.kind == "data":
                self.engine.set_gate(m, self._decide(m))

    def _decide(self, m):
        if self.gbg and m.group_id != self.group:
            return False
        if m.gate_phase != self.window:
            q, t = self.p.group_params(m.group_id)
            m.gate_phase = self.window
            u = self.net.gate_rng(m.id).random()
            rec = self.phases[-1]
            if u <= q:
                m.gate_release = self.t_b
                rec.winners += 1
            else:
                m.gate_release = self.t_b + t
                rec.losers += 1
                if t > 0:
                    self.sim.schedule(m.gate_release, "timer", m.id, self._release,
                                      (m, self.window))
        return self.sim.now >= m.gate_release

    def _release(self, payload):
        m, window = payload
        if window == self.window and not self.pending:
            if m.current is not None and m.current.kind == "data":
                self.engine.set_gate(m, True)

    def _hook(self, m):
        if self.pending:
            return False
        return self._decide(m)
