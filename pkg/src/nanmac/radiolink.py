"""Closed-form radio link budget for the collector cell.

All powers are in dBW (30 dBm == 0 dBW); distances in metres.
"""
from dataclasses import dataclass
import math

import numpy as np

from . import kernels
from .errors import DecodeInfeasible, DomainError

GH_NODES = 96
_GH_X, _GH_W = np.polynomial.hermite.hermgauss(GH_NODES)


def dbm_to_dbw(dbm):
    return dbm - 30.0


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(value):
    return 10.0 * math.log10(value)


@dataclass(frozen=True)
class RadioParams:
    bandwidth_hz: float = 2e6
    tx_power_dbw: float = 0.0
    antenna_gain_db: float = 3.0
    temperature_k: float = 290.0
    boltzmann_j_per_k: float = 1.38e-23
    sinr_threshold_db: float = 14.0
    carrier_sense_threshold_dbw: float = -129.0
    pathloss_intercept_db: float = 8.0
    pathloss_slope_db_per_decade: float = 37.6

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise DomainError("bandwidth_hz must be positive")
        if self.temperature_k < 0:
            raise DomainError("temperature_k must be nonnegative")
        if not self.boltzmann_j_per_k > 0:
            raise DomainError("boltzmann_j_per_k must be positive")
        if not self.pathloss_slope_db_per_decade > 0:
            raise DomainError("pathloss_slope_db_per_decade must be positive")

    @property
    def eirp_dbw(self):
        return self.tx_power_dbw + self.antenna_gain_db

    @property
    def sinr_threshold_linear(self):
        return db_to_linear(self.sinr_threshold_db)


DEFAULT_RADIO = RadioParams()


def _check_distance(r_m):
    if not r_m >= 1.0:
        raise DomainError(f"distance {r_m!r} m is below the 1 m model domain")


def path_loss_db(r_m, params=DEFAULT_RADIO):
    _check_distance(r_m)
    return params.pathloss_intercept_db + params.pathloss_slope_db_per_decade * math.log10(r_m)


def rx_power_dbw(params, r_m):
    return params.eirp_dbw - path_loss_db(r_m, params)


def noise_power_w(params):
    return params.boltzmann_j_per_k * params.temperature_k * params.bandwidth_hz


def snr_linear(params, r_m):
    noise = noise_power_w(params)
    signal = db_to_linear(rx_power_dbw(params, r_m))
    if noise == 0.0:
        return math.inf
    return signal / noise


def bpsk_capacity_bits_per_use(snr_linear):
    """Mutual information of binary antipodal input over real AWGN."""
    if snr_linear < 0 or math.isnan(snr_linear):
        raise DomainError("snr must be nonnegative")
    if snr_linear == 0.0:
        return 0.0
    if math.isinf(snr_linear):
        return 1.0
    c = kernels.bpsk_capacity(float(snr_linear), _GH_X, _GH_W)
    return min(1.0, max(0.0, c))


def achievable_rate_bps(params, r_m):
    return params.bandwidth_hz * bpsk_capacity_bits_per_use(snr_linear(params, r_m))


def carrier_sense_range_m(params):
    """Distance X at which received power falls to the carrier-sense threshold."""
    margin = params.eirp_dbw - params.pathloss_intercept_db - params.carrier_sense_threshold_dbw
    if margin < 0:
        raise DomainError("carrier-sense threshold exceeds the received power at 1 m")
    return 10.0 ** (margin / params.pathloss_slope_db_per_decade)


def interference_root_m(params, r_m):
    """Unclamped distance at which one interferer exactly meets the SINR threshold."""
    _check_distance(r_m)
    y = kernels.interference_root(
        float(r_m), params.eirp_dbw, params.pathloss_intercept_db,
        params.pathloss_slope_db_per_decade, noise_power_w(params),
        params.sinr_threshold_linear)
    if y < 0:
        raise DecodeInfeasible(f"meter at {r_m} m cannot be decoded even without interference")
    return y


def interference_range_m(params, r_m, cell_radius_m):
    if cell_radius_m < r_m:
        raise DomainError("cell radius must be at least the meter distance")
    return min(cell_radius_m, interference_root_m(params, r_m))


def decode_limit_m(params):
    """Largest distance whose interference-free SNR meets the SINR threshold."""
    noise = noise_power_w(params)
    if noise == 0.0:
        return math.inf
    loss = params.eirp_dbw - linear_to_db(noise) - params.sinr_threshold_db
    return 10.0 ** ((loss - params.pathloss_intercept_db) / params.pathloss_slope_db_per_decade)
