"""CSMA/CA contention engine (DCF and EDCA) shared by every protocol.

Backoff is event driven: a contending meter schedules one timer for the
slot where its counter would reach zero; a busy notification cancels it
and credits the fully elapsed idle slots.  Timers that expire at the very
instant the medium turns busy still fire, which is how two meters that
picked the same slot collide.
"""
import numpy as np

from ..channel import COLLECTOR, DELIVERED, COLLIDED
from ..traffic import HIGH
from .frames import CONTEND, IDLE, TX, WAIT


def edca_classify(params, frame, edca=True):
    """(AIFS ns, cw_min, cw_max) for the frame's access class."""
    if not edca:
        return params.difs, params.cw_min, params.cw_max
    if frame.priority_class == HIGH:
        return params.aifs_high, params.cw_min_high, params.cw_max
    return params.aifs_low, params.cw_min, params.cw_max


class DcfEngine:
    def __init__(self, net, edca=False, data_contention=True):
        self.net = net
        self.sim = net.sim
        self.ch = net.channel
        self.p = net.sc.dcf
        self.edca = edca
        self.data_contention = data_contention
        self.meters = net.meters
        n = self.ch.n_nodes
        self.idle_since = np.zeros(n, dtype=np.int64)
        self.contending = np.zeros(n, dtype=bool)
        self.open = True
        self.gate_hook = None
        self.inflight = 0
        self._quiet_cb = None
        self.ch.listener = self
        sizes = net.sc.sizes
        self.slot = self.p.slot_ns
        self.sifs = self.p.sifs_ns
        self._sizes = sizes

    # -- helpers -----------------------------------------------------------
    def _air(self, size, m):
        return self.ch.airtime_ns(size, m.id, COLLECTOR)

    def _ack_timeout(self, m, resp_size):
        if self.p.ack_timeout_ns is not None:
            return self.p.ack_timeout_ns
        return self.sifs + self._air(resp_size, m) + self.slot

    def _resp_size(self, frame):
        return self._sizes.join_resp if frame.kind == "join-req" else self._sizes.control

    def _draw(self, m):
        return int(self.net.backoff_rng(m.id).integers(0, m.cw + 1))

    def _idle(self, m):
        return not self.ch.phys_busy(m.id) and m.nav_until <= self.sim.now

    # -- entry points ------------------------------------------------------
    def kick(self, m):
        """Start contention if the meter is idle and has something to send."""
        if m.mode != IDLE or m.failed:
            return
        if m.current is None:
            if m.joining:
                m.current = m.join_frame
            elif self.data_contention and m.associated:
                m.current = self.net.take_hol(m)
            if m.current is None:
                return
            _, m.cw, _ = edca_classify(self.p, m.current, self.edca)
        m.counter = self._draw(m)
        self._enter_contention(m)

    def _enter_contention(self, m):
        m.mode = CONTEND
        m.cd_start = None
        self.contending[m.id] = True
        if self.gate_hook is not None and m.current.kind == "data":
            m.gate_ok = self.gate_hook(m)
        else:
            m.gate_ok = True
        self._resume(m)

    def _resume(self, m):
        if (m.mode != CONTEND or m.cd_start is not None or m.failed or not self.open
                or not m.gate_ok or not self._idle(m)):
            return
        aifs, _, _ = edca_classify(self.p, m.current, self.edca)
        ref = max(int(self.idle_since[m.id]), m.nav_until)
        start = max(self.sim.now, ref + aifs)
        m.cd_start = start
        m.expiry = start + m.counter * self.slot
        m.token += 1
        self.sim.schedule(m.expiry, "timer", m.id, self._fire, (m, m.token))

    def _freeze(self, m, t):
        if m.cd_start is None:
            return
        if m.expiry <= t:
            return  # decided in this slot already
        elapsed = t - m.cd_start
        if elapsed > 0:
            m.counter -= min(m.counter, elapsed // self.slot)
        m.cd_start = None
        m.token += 1

    def set_gate(self, m, ok):
        m.gate_ok = ok
        if m.mode != CONTEND:
            return
        if ok:
            self._resume(m)
        else:
            self._freeze(m, self.sim.now)
            if m.cd_start is not None:
                # timer due now; push it back so a closed gate is honoured
                m.counter = 0
                m.cd_start = None
                m.token += 1

    def set_open(self, flag):
        self.open = flag
        now = self.sim.now
        for i in np.flatnonzero(self.contending):
            m = self.meters[i]
            if flag:
                self._resume(m)
            else:
                self._freeze(m, now)
                if m.cd_start is not None:
                    m.counter = 0
                    m.cd_start = None
                    m.token += 1

    def when_quiet(self, cb):
        if self.inflight == 0:
            cb()
        else:
            self._quiet_cb = cb

    def _check_quiet(self):
        if self.inflight == 0 and self._quiet_cb is not None:
            cb, self._quiet_cb = self._quiet_cb, None
            cb()

    # -- channel listener --------------------------------------------------
    def on_busy(self, nodes, t):
        sel = nodes[self.contending[nodes]]
        meters = self.meters
        for i in sel:
            self._freeze(meters[i], t)

    def on_idle(self, nodes, t):
        self.idle_since[nodes] = t
        sel = nodes[self.contending[nodes]]
        meters = self.meters
        for i in sel:
            m = meters[i]
            if m.nav_until <= t:
                self._resume(m)

    def set_nav(self, node, until):
        m = self.meters[node]
        if until <= m.nav_until:
            return
        m.nav_until = until
        if m.mode == CONTEND:
            self._freeze(m, self.sim.now)
        self.sim.schedule(until, "timer", node, self._nav_end, (m, until))

    def _nav_end(self, payload):
        m, until = payload
        if m.nav_until == until and m.mode == CONTEND:
            self._resume(m)

    # -- transmission sequence ---------------------------------------------
    def _fire(self, payload):
        m, tok = payload
        if tok != m.token or m.mode != CONTEND or m.failed:
            return
        m.cd_start = None
        if not self.open or not m.gate_ok:
            m.counter = 0
            return
        m.mode = TX
        self.contending[m.id] = False
        self.inflight += 1
        frame = m.current
        if (self.p.rts_cts_enabled and frame.kind == "data"
                and frame.size_bytes >= self.p.rts_threshold_bytes):
            self._send_rts(m)
        else:
            self._send_frame(m)

    def _exchange_tail(self, m):
        """Airtime after the data frame starts: DATA + SIFS + ACK."""
        return self._air(m.current.size_bytes, m) + self.sifs + self._air(self._sizes.control, m)

    def _send_rts(self, m):
        self.ch.start(m.id, COLLECTOR, "rts", self._air(self._sizes.rts, m),
                      on_end=self._rts_end, track_overlap=True, payload=m)

    def _rts_end(self, tr):
        m = tr.payload
        cts = self._air(self._sizes.control, m)
        nav = self.sim.now + self.sifs + cts + self.sifs + self._exchange_tail(m)
        for node in self.ch.decoders(tr):
            if node != COLLECTOR and node != m.id:
                self.set_nav(int(node), nav)
        if self._aborted(m):
            return
        m.mode = WAIT
        if tr.outcome == DELIVERED:
            self.sim.schedule_in(self.sifs, "tx-start", COLLECTOR, self._send_cts, m)
        else:
            self._schedule_failure(m, self.sifs + cts + self.slot, tr.outcome)

    def _send_cts(self, m):
        self.ch.start(COLLECTOR, m.id, "cts", self._air(self._sizes.control, m),
                      on_end=self._cts_end, track_overlap=True, payload=m)

    def _cts_end(self, tr):
        m = tr.payload
        nav = self.sim.now + self.sifs + self._exchange_tail(m)
        for node in self.ch.decoders(tr):
            if node != COLLECTOR and node != m.id:
                self.set_nav(int(node), nav)
        if self._aborted(m):
            return
        if tr.outcome == DELIVERED:
            self.sim.schedule_in(self.sifs, "tx-start", m.id, self._send_frame_after_cts, m)
        else:
            self._schedule_failure(m, self.slot, tr.outcome)

    def _send_frame_after_cts(self, m):
        if self._aborted(m):
            return
        m.mode = TX
        self._send_frame(m)

    def _send_frame(self, m):
        frame = m.current
        if frame.kind == "data":
            self.net.check_data_sender(m)
        self.ch.start(m.id, COLLECTOR, frame.kind, self._air(frame.size_bytes, m), frame,
                      on_end=self._frame_end, payload=m)

    def _frame_end(self, tr):
        m = tr.payload
        frame = tr.frame
        if tr.outcome == DELIVERED:
            if frame.kind == "join-req":
                accepted = self.net.register(m.id) is not None
                self.sim.schedule_in(self.sifs, "tx-start", COLLECTOR, self._send_join_resp,
                                     (m, accepted))
            else:
                self.sim.schedule_in(self.sifs, "tx-start", COLLECTOR, self._send_ack, m)
        if self._aborted(m):
            return
        m.mode = WAIT
        if tr.outcome != DELIVERED:
            self._schedule_failure(m, self._ack_timeout(m, self._resp_size(frame)), tr.outcome)

    def _send_ack(self, m):
        self.ch.start(COLLECTOR, m.id, "ack", self._air(self._sizes.control, m),
                      on_end=self._resp_end, payload=(m, True))

    def _send_join_resp(self, payload):
        m, accepted = payload
        self.ch.start(COLLECTOR, m.id, "join-resp", self._air(self._sizes.join_resp, m),
                      on_end=self._resp_end, payload=(m, accepted))

    def _resp_end(self, tr):
        m, accepted = tr.payload
        if m.mode != WAIT or self._aborted(m):
            return
        if tr.outcome == DELIVERED:
            self._success(m, accepted)
        else:
            # the sender only learns of the loss when its response timer runs out
            frame = m.current
            data_end = tr.start_ns - self.sifs
            when = data_end + self._ack_timeout(m, self._resp_size(frame))
            self._schedule_failure(m, max(0, when - self.sim.now), tr.outcome)

    def _schedule_failure(self, m, delay, outcome):
        label = "collided" if outcome == COLLIDED else "lost"
        self.sim.schedule_in(delay, "timer", m.id, self._failure, (m, m.token, label))

    def _aborted(self, m):
        if m.failed and m.mode in (TX, WAIT):
            self.inflight -= 1
            m.mode = IDLE
            m.token += 1
            self._check_quiet()
            return True
        return m.failed

    # -- outcomes ------------------------------------------------------------
    def _success(self, m, accepted):
        self.inflight -= 1
        frame = m.current
        m.current = None
        m.mode = IDLE
        if frame.kind == "data":
            self.net.record_attempt(m, frame, "ok")
            self.net.frame_delivered(m, frame)
        else:
            self.net.association_done(m, accepted)
        self._check_quiet()
        self.kick(m)

    def _failure(self, payload):
        m, tok, label = payload
        if tok != m.token or m.mode != WAIT or self._aborted(m):
            return
        self.inflight -= 1
        frame = m.current
        if frame.kind == "data":
            self.net.record_attempt(m, frame, label)
        frame.retries += 1
        if frame.retries >= self.p.retry_limit:
            m.current = None
            m.mode = IDLE
            if frame.kind == "data":
                self.net.frame_dropped(m, frame)
            else:
                frame.retries = 0
                m.current = frame  # keep trying to join with a fresh window
                _, m.cw, _ = edca_classify(self.p, frame, self.edca)
                m.counter = self._draw(m)
                self._check_quiet()
                self._enter_contention(m)
                return
            self._check_quiet()
            self.kick(m)
            return
        _, _, cw_max = edca_classify(self.p, frame, self.edca)
        m.cw = min(2 * (m.cw + 1) - 1, cw_max)
        m.counter = self._draw(m)
        self._check_quiet()
        self._enter_contention(m)

    # -- faults --------------------------------------------------------------
    def on_fail(self, m):
        if m.mode == CONTEND:
            m.cd_start = None
            m.token += 1

    def on_recover(self, m):
        if m.mode == CONTEND:
            self._resume(m)
        elif m.mode == IDLE:
            if m.current is not None:
                m.counter = self._draw(m)
                self._enter_contention(m)
            else:
                self.kick(m)
