"""Frames, per-node state and protocol parameter sets."""
from dataclasses import dataclass, field
from collections import deque

from ..errors import ConfigError
from ..traffic import HIGH, LOW

US = 1_000
MS = 1_000_000

FRAME_KINDS = ("data", "ack", "rts", "cts", "beacon", "poll", "null", "probe", "probe-ack",
               "join-req", "join-resp", "broadcast-params")

# outcome labels used in frames.csv
QUEUED = "queued"
DELIVERED = "delivered"
DROPPED = "dropped"


class Frame:
    __slots__ = ("id", "src", "dst", "kind", "size_bytes", "priority_class", "enqueue_ns",
                 "outcome", "done_ns", "retries", "source")

    def __init__(self, fid, src, dst, kind, size_bytes, priority_class, enqueue_ns,
                 source=None):
        if size_bytes <= 0:
            raise ValueError("frame size must be positive")
        self.id = fid
        self.src = src
        self.dst = dst
        self.kind = kind
        self.size_bytes = size_bytes
        self.priority_class = priority_class
        self.enqueue_ns = enqueue_ns
        self.outcome = QUEUED
        self.done_ns = None
        self.retries = 0
        self.source = source

    @property
    def delay_ns(self):
        return None if self.done_ns is None or self.outcome != DELIVERED \
            else self.done_ns - self.enqueue_ns


@dataclass(frozen=True)
class FrameSizes:
    control: int = 14      # ack, cts, null
    rts: int = 20
    beacon: int = 20       # beacon, poll, probe, broadcast params
    join_req: int = 32
    join_resp: int = 24


@dataclass(frozen=True)
class DcfParams:
    slot_ns: int = 52 * US
    sifs_ns: int = 160 * US
    difs_ns: int | None = None          # default SIFS + 2 slots
    aifs_high_ns: int | None = None     # default DIFS
    aifs_low_ns: int | None = None      # default DIFS + 2 slots
    cw_min: int = 15
    cw_min_high: int = 7
    cw_max: int = 1023
    retry_limit: int = 7
    rts_cts_enabled: bool = False
    rts_threshold_bytes: int = 0
    ack_timeout_ns: int | None = None   # default SIFS + ACK airtime + slot

    @property
    def difs(self):
        return self.difs_ns if self.difs_ns is not None else self.sifs_ns + 2 * self.slot_ns

    @property
    def aifs_high(self):
        return self.aifs_high_ns if self.aifs_high_ns is not None else self.difs

    @property
    def aifs_low(self):
        return self.aifs_low_ns if self.aifs_low_ns is not None else self.difs + 2 * self.slot_ns

    def validate(self):
        if not 0 <= self.cw_min <= self.cw_max or not 0 <= self.cw_min_high <= self.cw_max:
            raise ConfigError("need 0 <= cw_min <= cw_max")
        if self.difs < self.sifs_ns:
            raise ConfigError("DIFS must be at least SIFS")
        if self.retry_limit < 1:
            raise ConfigError("retry_limit must be >= 1")
        if self.slot_ns <= 0 or self.sifs_ns < 0:
            raise ConfigError("slot must be positive and SIFS nonnegative")
        return self


GROUP_MODES = ("shared-params", "per-group-params", "group-by-group")


@dataclass(frozen=True)
class QdcfParams:
    contention_factor_q: float = 1.0
    prohibit_time_ns: int = 0
    group_count: int = 1
    group_mode: str = "shared-params"
    phase_ns: int = 500 * MS
    per_group: tuple = ()  # ((q, t_ns), ...) for per-group-params mode

    def validate(self):
        qs = [self.contention_factor_q] + [q for q, _ in self.per_group]
        ts = [self.prohibit_time_ns] + [t for _, t in self.per_group]
        if any(not 0 < q <= 1 for q in qs):
            raise ConfigError("contention factor must lie in (0, 1]")
        if any(t < 0 for t in ts):
            raise ConfigError("prohibition time must be nonnegative")
        if self.group_count < 1:
            raise ConfigError("group_count must be >= 1")
        if self.group_mode not in GROUP_MODES:
            raise ConfigError(f"unknown group mode {self.group_mode!r}")
        if self.group_mode == "per-group-params" and len(self.per_group) != self.group_count:
            raise ConfigError("per-group-params needs one (q, t) pair per group")
        if self.phase_ns <= 0:
            raise ConfigError("phase length must be positive")
        return self

    def group_params(self, g):
        if self.group_mode == "per-group-params":
            return self.per_group[g]
        return self.contention_factor_q, self.prohibit_time_ns

    @property
    def gating_disabled(self):
        if self.group_mode == "group-by-group":
            return False
        return all(q == 1.0 and t == 0 for q, t in
                   [self.group_params(g) for g in range(self.group_count)])


POLL_ORDERS = ("round-robin", "lcfs")


@dataclass(frozen=True)
class PcfParams:
    poll_order: str = "round-robin"
    beacon_interval_ns: int = 0       # minimum beacon-to-beacon spacing
    poll_timeout_ns: int | None = None  # default SIFS + slot after the poll ends
    contention_period_ns: int = 0
    liveness_every: int = 1           # cycles between polls of flagged meters
    k_misses: int = 3

    def validate(self):
        if self.poll_order not in POLL_ORDERS:
            raise ConfigError(f"unknown poll order {self.poll_order!r}")
        if self.poll_timeout_ns is not None and self.poll_timeout_ns <= 0:
            raise ConfigError("poll timeout must be positive")
        if self.k_misses < 1:
            raise ConfigError("k_misses must be >= 1")
        if self.contention_period_ns < 0 or self.beacon_interval_ns < 0:
            raise ConfigError("negative interval")
        return self


@dataclass(frozen=True)
class PpmacParams:
    group_count: int = 1
    zc_length: int | None = None      # default: smallest prime >= largest group + 1
    chip_ns: int = 10 * US
    detection_threshold: float = 0.5
    noise_sigma: float = 0.0
    detection_statistic: str = "aligned"

    def validate(self):
        if self.group_count < 1:
            raise ConfigError("group_count must be >= 1")
        if not 0 < self.detection_threshold < 1:
            raise ConfigError("detection threshold must lie in (0, 1)")
        if self.noise_sigma < 0 or self.chip_ns <= 0:
            raise ConfigError("noise sigma must be >= 0 and chip time positive")
        if self.detection_statistic not in ("aligned", "peak"):
            raise ConfigError("detection statistic must be 'aligned' or 'peak'")
        return self


# meter MAC modes
IDLE, CONTEND, TX, WAIT, GONE = range(5)


@dataclass(eq=False)
class MeterState:
    id: int
    position: tuple
    queues: dict = field(default_factory=lambda: {HIGH: deque(), LOW: deque()})
    current: Frame | None = None
    mode: int = IDLE
    counter: int = 0
    cw: int = 0
    cd_start: int | None = None
    expiry: int | None = None
    token: int = 0
    nav_until: int = 0
    completed_frame_count: int = 0
    group_id: int = 0
    associated: bool = False
    failed: bool = False
    zc_root: int | None = None
    saturated: list = field(default_factory=list)  # saturated TrafficSpecs
    gate_ok: bool = True
    gate_phase: int = -1
    gate_release: int = 0
    joining: bool = False
    join_frame: Frame | None = None

    def has_data(self):
        return self.current is not None or bool(self.queues[HIGH]) or bool(self.queues[LOW])

    def queued_count(self):
        cur = self.current is not None and self.current.kind == "data"
        return len(self.queues[HIGH]) + len(self.queues[LOW]) + cur


@dataclass(eq=False)
class CollectorState:
    registry: dict = field(default_factory=dict)   # meter id -> (group, root)
    groups: list = field(default_factory=list)     # per group: list of meter ids
    free_roots: list = field(default_factory=list)  # per group: available roots
    misses: dict = field(default_factory=dict)
    flagged: set = field(default_factory=set)
    schedule: list = field(default_factory=list)
    joined_order: list = field(default_factory=list)
