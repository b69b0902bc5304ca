"""Expected number of hidden meters versus cell radius."""
from dataclasses import dataclass, field
import math

import numpy as np

from . import kernels
from .errors import DomainError
from .quadrature import adaptive_simpson
from .radiolink import (DEFAULT_RADIO, RadioParams, carrier_sense_range_m,
                        db_to_linear, decode_limit_m, noise_power_w)

PER_KM2 = 1e-6


@dataclass(frozen=True)
class HiddenNodeQuery:
    cell_radius_m: float = 1200.0
    meter_density_per_m2: float = 1000 * PER_KM2
    radio: RadioParams = field(default_factory=RadioParams)

    def __post_init__(self):
        if not self.cell_radius_m >= 1:
            raise DomainError("cell radius must be at least 1 m")
        if not self.meter_density_per_m2 > 0:
            raise DomainError("meter density must be positive")


def hidden_area_m2(r_m, x_m, i_m):
    """Area within ``i_m`` of the collector but beyond ``x_m`` of a meter at ``r_m``."""
    if not r_m > 0 or not x_m > 0:
        raise DomainError("r and X must be positive")
    if i_m < 0:
        raise DomainError("interference range must be nonnegative")
    try:
        return kernels.hidden_area(float(r_m), float(x_m), float(i_m))
    except ValueError as exc:
        raise DomainError(str(exc)) from None


def radial_pdf(r_m, cell_radius_m):
    if r_m < 0 or r_m > cell_radius_m:
        raise DomainError(f"radius {r_m} outside [0, {cell_radius_m}]")
    return 2.0 * r_m / cell_radius_m ** 2


def _clamp_onset(radio, cell_radius):
    """Meter radius beyond which the interference range is clamped to the cell."""
    noise = noise_power_w(radio)
    interferer = db_to_linear(radio.eirp_dbw - radio.pathloss_intercept_db
                              - radio.pathloss_slope_db_per_decade * math.log10(cell_radius))
    signal = radio.sinr_threshold_linear * (noise + interferer)
    loss = radio.eirp_dbw - 10.0 * math.log10(signal)
    return 10.0 ** ((loss - radio.pathloss_intercept_db) / radio.pathloss_slope_db_per_decade)


def _integrand(radio, cell_radius, x):
    args = (float(cell_radius), float(x), radio.eirp_dbw, radio.pathloss_intercept_db,
            radio.pathloss_slope_db_per_decade, noise_power_w(radio),
            radio.sinr_threshold_linear)
    fn = kernels.hidden_integrand

    def f(r):
        return fn(r, *args)
    return f


def _area_onset(radio, cell_radius, x, upper):
    """Smallest r with r + I(r) > X, by bisection (both terms increase with r)."""
    def excess(r):
        y = kernels.interference_root(max(r, 1.0), radio.eirp_dbw, radio.pathloss_intercept_db,
                                      radio.pathloss_slope_db_per_decade,
                                      noise_power_w(radio), radio.sinr_threshold_linear)
        i = cell_radius if y < 0 else min(y, cell_radius)
        return r + i - x
    lo, hi = 0.0, upper
    if excess(hi) <= 0:
        return None
    if excess(lo) > 0:
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if excess(mid) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo < 1e-9 * max(1.0, hi):
            break
    return hi


def mean_hidden_nodes(query):
    radio = query.radio
    R = query.cell_radius_m
    x = carrier_sense_range_m(radio)
    f = _integrand(radio, R, x)
    upper = min(R, decode_limit_m(radio))
    if upper <= 0:
        return 0.0
    breaks = {0.0, upper}
    onset = _area_onset(radio, R, x, upper)
    if onset is None:
        return 0.0
    breaks.add(onset)
    clamp = _clamp_onset(radio, R)
    if 0.0 < clamp < upper:
        breaks.add(clamp)
    pts = sorted(b for b in breaks if onset <= b <= upper)
    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        if b > a:
            total += adaptive_simpson(f, a, b, rel_tol=1e-6, abs_tol=1e-12)
    return query.meter_density_per_m2 * total


def sweep_hidden_vs_radius(radio, density_per_m2, r_min, r_max, steps):
    """Rows of (R, X, N_hidden) on an inclusive linear grid of cell radii."""
    if not (1 <= r_min < r_max):
        raise DomainError("need 1 <= r_min < r_max")
    if steps < 2:
        raise DomainError("need at least two grid points")
    x = carrier_sense_range_m(radio)
    rows = []
    for R in np.linspace(r_min, r_max, int(steps)):
        R = float(R)
        n = mean_hidden_nodes(HiddenNodeQuery(R, density_per_m2, radio))
        rows.append((R, x, n))
    return rows


__all__ = ["HiddenNodeQuery", "hidden_area_m2", "radial_pdf", "mean_hidden_nodes",
           "sweep_hidden_vs_radius", "DEFAULT_RADIO"]
