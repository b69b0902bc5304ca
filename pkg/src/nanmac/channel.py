"""Shared medium: carrier sensing, concurrent transmissions, SINR reception.

Node 0 is the collector at the origin; meters are nodes 1..M.
"""
from dataclasses import dataclass
import math

import numpy as np

from .errors import UnknownNode
from .radiolink import (RadioParams, achievable_rate_bps, carrier_sense_range_m, db_to_linear,
                        noise_power_w)

PAIRWISE = "pairwise-range"
AGGREGATE = "aggregate-power"

DELIVERED = "delivered"
COLLIDED = "collided"
BELOW_SENSITIVITY = "below-sensitivity"

COLLECTOR = 0


@dataclass(frozen=True)
class ChannelConfig:
    radio: RadioParams = RadioParams()
    sensing_mode: str = PAIRWISE
    phy_rate_bps: float | None = 100_000.0  # None: per-distance achievable rate
    phy_header_ns: int = 0

    def __post_init__(self):
        if self.sensing_mode not in (PAIRWISE, AGGREGATE):
            raise ValueError(f"unknown sensing mode {self.sensing_mode!r}")
        if self.phy_rate_bps is not None and not self.phy_rate_bps > 0:
            raise ValueError("phy rate must be positive")


class ActiveTransmission:
    __slots__ = ("id", "tx_node", "rx_node", "kind", "start_ns", "end_ns", "frame",
                 "signal_w", "interference_w", "max_interference_w", "half_duplex",
                 "overlappers", "on_end", "outcome", "payload")

    def __init__(self, tid, tx, rx, kind, start, end, frame, on_end, track):
        self.id = tid
        self.tx_node = tx
        self.rx_node = rx
        self.kind = kind
        self.start_ns = start
        self.end_ns = end
        self.frame = frame
        self.on_end = on_end
        self.signal_w = 0.0
        self.interference_w = 0.0
        self.max_interference_w = 0.0
        self.half_duplex = False
        self.overlappers = [] if track else None
        self.outcome = None
        self.payload = None


class Channel:
    def __init__(self, sim, config, positions):
        """``positions``: (M+1, 2) cartesian metres, row 0 the collector."""
        self.sim = sim
        self.config = config
        self.radio = config.radio
        self.pos = np.asarray(positions, dtype=float)
        self.n_nodes = len(self.pos)
        r = self.radio
        self.noise_w = noise_power_w(r)
        self.sinr_th = r.sinr_threshold_linear
        self.cs_range = carrier_sense_range_m(r)
        self.cs_threshold_w = db_to_linear(r.carrier_sense_threshold_dbw)
        self.eirp_dbw = r.eirp_dbw
        self._ic = r.pathloss_intercept_db
        self._sl = r.pathloss_slope_db_per_decade
        d0 = np.hypot(self.pos[:, 0], self.pos[:, 1])
        self.dist_to_collector = d0
        self.p_collector = self._power_of_distance(d0)
        self.active = []
        self._next_id = 0
        self.listener = None
        self.busy_ns = 0
        self._busy_since = 0
        self._nbrs = {}
        self._pvec = {}
        self._cache_vectors = self.n_nodes <= 2500
        self.busy_count = np.zeros(self.n_nodes, dtype=np.int64)
        self.sensed_w = np.zeros(self.n_nodes)
        self._rate_cache = {}

    # -- propagation -------------------------------------------------------
    def _power_of_distance(self, d):
        d = np.maximum(d, 1.0)
        return 10.0 ** ((self.eirp_dbw - self._ic - self._sl * np.log10(d)) / 10.0)

    def distance(self, a, b):
        pa, pb = self.pos[a], self.pos[b]
        return math.hypot(pa[0] - pb[0], pa[1] - pb[1])

    def power(self, a, b):
        """Received power in watts at node ``b`` from a transmitter at ``a``."""
        if a == COLLECTOR:
            return self.p_collector[b]
        if b == COLLECTOR:
            return self.p_collector[a]
        d = max(self.distance(a, b), 1.0)
        return 10.0 ** ((self.eirp_dbw - self._ic - self._sl * math.log10(d)) / 10.0)

    def power_from(self, a):
        """Received power at every node from a transmitter at ``a``."""
        v = self._pvec.get(a)
        if v is None:
            if a == COLLECTOR:
                v = self.p_collector
            else:
                d = np.hypot(self.pos[:, 0] - self.pos[a, 0], self.pos[:, 1] - self.pos[a, 1])
                v = self._power_of_distance(d)
            if self._cache_vectors:
                self._pvec[a] = v
        return v

    def sense_neighbors(self, a):
        nb = self._nbrs.get(a)
        if nb is None:
            d = np.hypot(self.pos[:, 0] - self.pos[a, 0], self.pos[:, 1] - self.pos[a, 1])
            mask = d <= self.cs_range
            mask[a] = False
            nb = np.flatnonzero(mask)
            if self._cache_vectors:
                self._nbrs[a] = nb
        return nb

    def airtime_ns(self, size_bytes, a, b=None):
        rate = self.config.phy_rate_bps
        if rate is None:
            rate = self._link_rate(a, b)
        return self.config.phy_header_ns + int(math.ceil(size_bytes * 8 * 1e9 / rate))

    def _link_rate(self, a, b):
        meter = a if a != COLLECTOR else b
        key = meter if meter is not None else -1
        rate = self._rate_cache.get(key)
        if rate is None:
            if meter is None:
                d = float(self.dist_to_collector.max()) if self.n_nodes > 1 else 1.0
            else:
                d = float(self.dist_to_collector[meter])
            rate = max(achievable_rate_bps(self.radio, max(d, 1.0)), 1.0)
            self._rate_cache[key] = rate
        return rate

    # -- sensing -----------------------------------------------------------
    def _check(self, node):
        if not 0 <= node < self.n_nodes:
            raise UnknownNode(node)

    def carrier_busy(self, node, t=None):
        """Physical carrier sense at ``node`` from the currently active set."""
        self._check(node)
        if self.config.sensing_mode == PAIRWISE:
            for tr in self.active:
                if tr.tx_node != node and self.distance(tr.tx_node, node) <= self.cs_range:
                    return True
            return False
        total = sum(self.power(tr.tx_node, node) for tr in self.active if tr.tx_node != node)
        return total >= self.cs_threshold_w

    def _sense_start(self, tx):
        if self.config.sensing_mode == PAIRWISE:
            nb = self.sense_neighbors(tx)
            self.busy_count[nb] += 1
            return nb[self.busy_count[nb] == 1], None
        before = self.sensed_w >= self.cs_threshold_w
        after = self._recompute_sensed()
        return np.flatnonzero(after & ~before), None

    def _sense_end(self, tx):
        if self.config.sensing_mode == PAIRWISE:
            nb = self.sense_neighbors(tx)
            self.busy_count[nb] -= 1
            return nb[self.busy_count[nb] == 0]
        before = self.sensed_w >= self.cs_threshold_w
        after = self._recompute_sensed()
        return np.flatnonzero(before & ~after)

    def _recompute_sensed(self):
        # rebuilt from the active set so repeated add/remove cannot drift
        s = np.zeros(self.n_nodes)
        for tr in self.active:
            v = self.power_from(tr.tx_node).copy()
            v[tr.tx_node] = 0.0
            s += v
        self.sensed_w = s
        return s >= self.cs_threshold_w

    def phys_busy(self, node):
        if self.config.sensing_mode == PAIRWISE:
            if self.listener is None:
                return self.carrier_busy(node)
            return self.busy_count[node] > 0
        return self.carrier_busy(node)

    # -- transmissions -----------------------------------------------------
    def start(self, tx, rx, kind, duration_ns, frame=None, on_end=None, track_overlap=False,
              payload=None):
        now = self.sim.now
        tr = ActiveTransmission(self._next_id, tx, rx, kind, now, now + duration_ns, frame,
                                on_end, track_overlap)
        tr.payload = payload
        self._next_id += 1
        if rx is not None:
            tr.signal_w = self.power(tx, rx)
        for other in self.active:
            if other.rx_node is not None:
                if other.rx_node == tx:
                    other.half_duplex = True
                other.interference_w += self.power(tx, other.rx_node)
                if other.interference_w > other.max_interference_w:
                    other.max_interference_w = other.interference_w
            if rx is not None:
                if other.tx_node == rx:
                    tr.half_duplex = True
                tr.interference_w += self.power(other.tx_node, rx)
            if other.overlappers is not None:
                other.overlappers.append(tr)
            if track_overlap:
                tr.overlappers.append(other)
        tr.max_interference_w = tr.interference_w
        if not self.active:
            self._busy_since = now
        self.active.append(tr)
        if self.listener is not None:
            newly_busy, _ = self._sense_start(tx)
            if len(newly_busy):
                self.listener.on_busy(newly_busy, now)
        self.sim.schedule(tr.end_ns, "tx-end", tx, self._end, tr)
        return tr

    def _end(self, tr):
        now = self.sim.now
        self.active.remove(tr)
        for other in self.active:
            if other.rx_node is not None:
                other.interference_w -= self.power(tr.tx_node, other.rx_node)
        if not self.active:
            self.busy_ns += now - self._busy_since
        tr.outcome = self.reception_outcome(tr)
        if self.listener is not None:
            newly_idle = self._sense_end(tr.tx_node)
            if len(newly_idle):
                self.listener.on_idle(newly_idle, now)
        if tr.on_end is not None:
            tr.on_end(tr)

    def reception_outcome(self, tr):
        if tr.rx_node is None:
            return DELIVERED
        noise = self.noise_w
        if tr.signal_w < self.sinr_th * noise:
            return BELOW_SENSITIVITY
        if tr.half_duplex:
            return COLLIDED
        if tr.signal_w >= self.sinr_th * (noise + tr.max_interference_w):
            return DELIVERED
        return COLLIDED

    def decoders(self, tr):
        """Nodes that decode ``tr`` given everything that overlapped it."""
        sig = self.power_from(tr.tx_node)
        interf = np.zeros(self.n_nodes)
        excluded = [tr.tx_node]
        for o in tr.overlappers or ():
            interf += self.power_from(o.tx_node)
            excluded.append(o.tx_node)
        ok = sig >= self.sinr_th * (self.noise_w + interf)
        ok[excluded] = False
        return np.flatnonzero(ok)

    def busy_time_ns(self):
        extra = self.sim.now - self._busy_since if self.active else 0
        return self.busy_ns + extra
