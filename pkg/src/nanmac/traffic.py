"""Frame-arrival generators for periodic, event-triggered and saturated sources.

Preset magnitudes (periods, rates, payload sizes) are illustrative
defaults; every field can be overridden from the scenario file.
"""
from dataclasses import dataclass, replace
import math

from .errors import ConfigError, UnknownPreset
from .simengine import NS_PER_S

HIGH = "high"
LOW = "low"
KINDS = ("periodic", "poisson", "saturated")


@dataclass(frozen=True)
class TrafficSpec:
    name: str
    kind: str
    payload_bytes: int
    priority_class: str = LOW
    period_ns: int = 0
    start_offset_ns: int | None = None  # None: random phase per meter
    jitter_ns: int = 0
    rate_per_s: float = 0.0

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"traffic {self.name}: unknown kind {self.kind!r}")
        if self.payload_bytes <= 0:
            raise ConfigError(f"traffic {self.name}: payload must be positive")
        if self.priority_class not in (HIGH, LOW):
            raise ConfigError(f"traffic {self.name}: unknown class {self.priority_class!r}")
        if self.kind == "periodic":
            if self.period_ns <= 0:
                raise ConfigError(f"traffic {self.name}: period must be positive")
            if self.jitter_ns < 0 or 2 * self.jitter_ns >= self.period_ns:
                raise ConfigError(f"traffic {self.name}: jitter must be below period/2")
            if self.start_offset_ns is not None and self.start_offset_ns < 0:
                raise ConfigError(f"traffic {self.name}: negative start offset")
        elif self.kind == "poisson" and not self.rate_per_s > 0:
            raise ConfigError(f"traffic {self.name}: rate must be positive")
        return self


_MIN = 60 * NS_PER_S

PRESETS = {
    "billing": TrafficSpec("billing", "periodic", 200, LOW, period_ns=15 * _MIN),
    "demand-response": TrafficSpec("demand-response", "periodic", 100, LOW, period_ns=5 * _MIN),
    "pricing": TrafficSpec("pricing", "periodic", 50, LOW, period_ns=60 * _MIN),
    "outage-alert": TrafficSpec("outage-alert", "poisson", 100, HIGH, rate_per_s=1e-4),
    "ev-charging": TrafficSpec("ev-charging", "poisson", 100, LOW, rate_per_s=1e-4),
}


def preset(name, **overrides):
    try:
        spec = PRESETS[name]
    except KeyError:
        raise UnknownPreset(name) from None
    return replace(spec, **overrides).validate() if overrides else spec


class ArrivalProcess:
    """Stateful arrival sequence for one (meter, source) pair."""

    def __init__(self, spec, stream):
        self.spec = spec
        self.stream = stream
        self.n = 0
        if spec.kind == "periodic":
            if spec.start_offset_ns is None:
                self.offset = int(stream.integers(0, spec.period_ns))
            else:
                self.offset = spec.start_offset_ns

    def first(self, t_now=0):
        return self.next_arrival(t_now)

    def next_arrival(self, t_now):
        spec = self.spec
        if spec.kind == "periodic":
            t = self.offset + self.n * spec.period_ns
            self.n += 1
            if spec.jitter_ns:
                t += int(self.stream.integers(-spec.jitter_ns, spec.jitter_ns + 1))
            return max(t, 0)
        if spec.kind == "poisson":
            gap = self.stream.exponential(1.0 / spec.rate_per_s)
            return t_now + max(1, int(math.ceil(gap * NS_PER_S)))
        raise ConfigError("saturated sources have no arrival times")


def next_arrival(spec, stream, t_now, n=0):
    """Stateless form: the n-th periodic arrival, or the next Poisson arrival."""
    if spec.kind == "periodic":
        offset = spec.start_offset_ns or 0
        t = offset + n * spec.period_ns
        if spec.jitter_ns:
            t += int(stream.integers(-spec.jitter_ns, spec.jitter_ns + 1))
        return t
    if spec.kind == "poisson":
        return t_now + max(1, int(math.ceil(stream.exponential(1.0 / spec.rate_per_s) * NS_PER_S)))
    raise ConfigError("saturated sources have no arrival times")
