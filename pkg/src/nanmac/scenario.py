"""Scenario files: JSON validated against a bundled schema, then typed."""
from dataclasses import dataclass, field, replace
import copy
from decimal import Decimal
from importlib import resources
import json
import re

import jsonschema

from .channel import AGGREGATE, PAIRWISE
from .errors import ConfigError, DomainError, UnknownPreset
from .mac.frames import DcfParams, FrameSizes, PcfParams, PpmacParams, QdcfParams
from .radiolink import RadioParams
from .simengine import CellTopology, RandomStreams, meter_count_for_density, sample_topology
from .traffic import PRESETS, TrafficSpec

PROTOCOLS = ("dcf", "edca", "pcf", "qdcf", "ppmac")

_UNITS = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": 1_000_000_000,
          "min": 60_000_000_000, "h": 3_600_000_000_000}
_DURATION = re.compile(r"^\s*([0-9]+(?:\.[0-9]+)?)\s*(ns|us|ms|s|min|h)\s*$")


def parse_duration(value):
    """'3600s', '15min', '500ms', '1h' or an integer count of nanoseconds."""
    if isinstance(value, bool):
        raise ConfigError(f"bad duration {value!r}")
    if isinstance(value, int):
        if value < 0:
            raise ConfigError("duration must be nonnegative")
        return value
    if isinstance(value, str):
        m = _DURATION.match(value)
        if m:
            return int(Decimal(m.group(1)) * _UNITS[m.group(2)])
    raise ConfigError(f"bad duration {value!r}")


def load_schema():
    text = resources.files("nanmac").joinpath("scenario.schema.json").read_text()
    return json.loads(text)


_VALIDATOR = None


def validate_raw(raw):
    global _VALIDATOR
    if _VALIDATOR is None:
        _VALIDATOR = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(_VALIDATOR.iter_errors(raw), key=lambda e: list(e.path))
    if errors:
        e = errors[0]
        where = "/".join(str(p) for p in e.path) or "<root>"
        raise ConfigError(f"scenario invalid at {where}: {e.message}")


@dataclass(frozen=True)
class TrafficBlock:
    meters: object  # "all" or tuple of ids
    spec: TrafficSpec

    def applies_to(self, meter_id):
        return self.meters == "all" or meter_id in self.meters


@dataclass(frozen=True)
class FaultScript:
    meter: int
    fail_at_ns: int
    recover_at_ns: int | None = None


@dataclass(frozen=True)
class JoinScript:
    meter: int
    join_at_ns: int
    position: tuple  # polar (r_m, theta_rad)


@dataclass(frozen=True)
class Scenario:
    protocol: str = "dcf"
    seed: int = 0
    duration_ns: int = 1_000_000_000
    radio: RadioParams = RadioParams()
    sensing_mode: str = PAIRWISE
    phy_rate_bps: float | None = 100_000.0
    phy_header_ns: int = 0
    cell_radius_m: float = 1200.0
    density_per_m2: float | None = None
    meter_count: int | None = None
    positions: tuple | None = None  # polar (r, theta) per meter
    sizes: FrameSizes = FrameSizes()
    dcf: DcfParams = DcfParams()
    qdcf: QdcfParams = QdcfParams()
    pcf: PcfParams = PcfParams()
    ppmac: PpmacParams = PpmacParams()
    traffic: tuple = ()
    faults: tuple = ()
    joins: tuple = ()
    zc_length: int | None = None
    record_trace: bool = False
    check_invariants: bool = True
    raw: dict = field(default=None, compare=False, repr=False)

    def validate(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"unknown protocol {self.protocol!r}")
        if self.sensing_mode not in (PAIRWISE, AGGREGATE):
            raise ConfigError(f"unknown sensing mode {self.sensing_mode!r}")
        for p in (self.dcf, self.qdcf, self.pcf, self.ppmac):
            p.validate()
        for b in self.traffic:
            b.spec.validate()
        given = [self.density_per_m2 is not None, self.meter_count is not None,
                 self.positions is not None]
        if sum(given) > 1:
            raise ConfigError("topology takes one of density_per_m2, meter_count or positions")
        total = self.initial_meter_count() + len(self.joins)
        for f in self.faults:
            if not 1 <= f.meter <= total:
                raise ConfigError(f"fault names unknown meter {f.meter}")
            if f.recover_at_ns is not None and f.recover_at_ns <= f.fail_at_ns:
                raise ConfigError("recover_at must follow fail_at")
        if self.joins and self.protocol in ("pcf", "ppmac") and self.pcf.contention_period_ns <= 0:
            raise ConfigError("joins under a polling protocol need pcf.contention_period_ns > 0")
        if self.positions is not None:
            for r, _ in self.positions:
                if not 0 <= r <= self.cell_radius_m:
                    raise ConfigError(f"meter radius {r} outside the cell")
        return self

    def initial_meter_count(self):
        if self.positions is not None:
            return len(self.positions)
        if self.meter_count is not None:
            return self.meter_count
        if self.density_per_m2 is not None:
            return meter_count_for_density(self.cell_radius_m, self.density_per_m2)
        return 0

    def topology(self, streams=None):
        """Initial meter positions; random layouts use the topology stream."""
        if self.positions is not None:
            return CellTopology(self.cell_radius_m, [tuple(p) for p in self.positions])
        streams = streams or RandomStreams(self.seed)
        try:
            if self.meter_count is not None:
                return sample_topology(self.cell_radius_m, streams.topology(),
                                       count=self.meter_count)
            if self.density_per_m2 is not None:
                return sample_topology(self.cell_radius_m, streams.topology(),
                                       density_per_m2=self.density_per_m2)
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        return CellTopology(self.cell_radius_m, [])

    def traffic_for(self, meter_id):
        return [b.spec for b in self.traffic if b.applies_to(meter_id)]


_DURATION_KEYS = {"duration", "phy_header_ns", "slot_ns", "sifs_ns", "difs_ns", "aifs_high_ns",
                  "aifs_low_ns", "ack_timeout_ns", "prohibit_time_ns", "phase_ns",
                  "beacon_interval_ns", "poll_timeout_ns", "contention_period_ns", "chip_ns"}


def _durations(d):
    return {k: (parse_duration(v) if k in _DURATION_KEYS else v) for k, v in d.items()}


def _make(cls, d, what):
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{what}: {exc}") from None


def _traffic_block(i, d):
    d = dict(d)
    meters = d.pop("meters", "all")
    if meters != "all":
        meters = tuple(meters)
    name = d.pop("preset", None)
    conv = {}
    for key, target in (("period", "period_ns"), ("start_offset", "start_offset_ns"),
                        ("jitter", "jitter_ns")):
        if key in d:
            conv[target] = parse_duration(d.pop(key))
    conv.update(d)
    if name is not None:
        if name not in PRESETS:
            raise ConfigError(f"traffic[{i}]: {UnknownPreset(name)}")
        spec = replace(PRESETS[name], **conv)
    else:
        conv.setdefault("name", f"traffic{i}")
        for req in ("kind", "payload_bytes"):
            if req not in conv:
                raise ConfigError(f"traffic[{i}] needs a preset or '{req}'")
        spec = _make(TrafficSpec, conv, f"traffic[{i}]")
    return TrafficBlock(meters, spec.validate())


def from_dict(raw):
    validate_raw(raw)
    raw = copy.deepcopy(raw)
    kw = {"protocol": raw["protocol"], "raw": raw}
    if "seed" in raw:
        kw["seed"] = raw["seed"]
    if "duration" in raw:
        kw["duration_ns"] = parse_duration(raw["duration"])
    for key in ("record_trace", "check_invariants", "zc_length"):
        if key in raw:
            kw[key] = raw[key]
    if "radio" in raw:
        kw["radio"] = _make(RadioParams, raw["radio"], "radio")
    ch = raw.get("channel", {})
    if "sensing_mode" in ch:
        kw["sensing_mode"] = ch["sensing_mode"]
    if "phy_rate_bps" in ch:
        rate = ch["phy_rate_bps"]
        kw["phy_rate_bps"] = None if rate == "per-distance" else float(rate)
    if "phy_header_ns" in ch:
        kw["phy_header_ns"] = parse_duration(ch["phy_header_ns"])
    topo = raw.get("topology", {})
    if "cell_radius_m" in topo:
        kw["cell_radius_m"] = float(topo["cell_radius_m"])
    for key in ("density_per_m2", "meter_count"):
        if key in topo:
            kw[key] = topo[key]
    if "positions" in topo:
        kw["positions"] = tuple(tuple(p) for p in topo["positions"])
    if "frame_sizes" in raw:
        kw["sizes"] = _make(FrameSizes, raw["frame_sizes"], "frame_sizes")
    for key, cls in (("dcf", DcfParams), ("pcf", PcfParams), ("ppmac", PpmacParams)):
        if key in raw:
            kw[key] = _make(cls, _durations(raw[key]), key)
    if "qdcf" in raw:
        q = _durations(raw["qdcf"])
        if "per_group" in q:
            q["per_group"] = tuple((float(a), parse_duration(b)) for a, b in q["per_group"])
        kw["qdcf"] = _make(QdcfParams, q, "qdcf")
    kw["traffic"] = tuple(_traffic_block(i, b) for i, b in enumerate(raw.get("traffic", [])))
    kw["faults"] = tuple(
        FaultScript(f["meter"], parse_duration(f["fail_at"]),
                    parse_duration(f["recover_at"]) if "recover_at" in f else None)
        for f in raw.get("faults", []))
    sc = Scenario(**kw)
    first = sc.initial_meter_count() + 1
    joins = []
    for k, j in enumerate(raw.get("joins", [])):
        mid = j.get("meter", first + k)
        if mid != first + k:
            raise ConfigError(f"joiner ids run sequentially from {first}; got {mid}")
        joins.append(JoinScript(mid, parse_duration(j["join_at"]), tuple(j["position"])))
    return replace(sc, joins=tuple(joins)).validate()


def load(path):
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scenario: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"scenario is not valid JSON: {exc}") from None
    return from_dict(raw)


def set_path(raw, path, value):
    """Copy of ``raw`` with the dotted ``path`` set; the path must be a scalar schema field."""
    node = load_schema()
    keys = path.split(".")
    for key in keys:
        props = node.get("properties")
        if not props or key not in props:
            raise ConfigError(f"unknown parameter path {path!r}")
        node = props[key]
    if node.get("type") in ("object", "array"):
        raise ConfigError(f"parameter path {path!r} is not a scalar")
    out = copy.deepcopy(raw)
    cur = out
    for key in keys[:-1]:
        cur = cur.setdefault(key, {})
    cur[keys[-1]] = value
    return out
