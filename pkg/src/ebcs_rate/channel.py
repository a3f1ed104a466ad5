"""Deterministic link budget for the broadcast downlink and overheard uplink.

Powers are carried in dBm and SNR comparisons happen in dB. The reception
model is a Shannon threshold: a rate is decodable iff the SNR reaches
``2**(rate/W) - 1``. There is no fading, shadowing or collision loss.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

MIN_DISTANCE_M = 0.1
THERMAL_NOISE_DBM_PER_HZ = -174.0

DEFAULT_RATES_MBPS = (8.6, 51.6, 103.2, 143.4)
# thermal floor over 20 MHz with a 0 dB noise figure, rounded to the dB
DEFAULT_NOISE_DBM = -101.0


class ChannelError(ValueError):
    """Raised for inputs outside the domain of the propagation model."""


def thermal_noise_dbm(bandwidth_hz: float, noise_figure_db: float = 0.0) -> float:
    return THERMAL_NOISE_DBM_PER_HZ + 10.0 * math.log10(bandwidth_hz) + noise_figure_db


@dataclass(frozen=True)
class RadioParams:
    carrier_frequency_ghz: float = 5.0
    bandwidth_hz: float = 20e6
    breakpoint_distance_m: float = 10.0
    tx_power_ebcs_dbm: float = 10.0
    tx_power_sta_dbm: float = 10.0
    noise_power_dbm: float = DEFAULT_NOISE_DBM

    def __post_init__(self):
        for name in ("carrier_frequency_ghz", "bandwidth_hz", "breakpoint_distance_m"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ChannelError(f"{name} must be positive, got {value!r}")
        for name in ("tx_power_ebcs_dbm", "tx_power_sta_dbm", "noise_power_dbm"):
            if not math.isfinite(getattr(self, name)):
                raise ChannelError(f"{name} must be finite")


@dataclass(frozen=True)
class RateTable:
    """Ordered broadcast data rates (Mbit/s) with their SNR thresholds."""

    rates: tuple[float, ...] = DEFAULT_RATES_MBPS
    bandwidth_hz: float = 20e6

    def __post_init__(self):
        rates = tuple(float(r) for r in self.rates)
        if not rates:
            raise ChannelError("rate table must hold at least one rate")
        if any(r <= 0 for r in rates):
            raise ChannelError("rates must be positive")
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise ChannelError(f"rates must be strictly increasing: {rates}")
        object.__setattr__(self, "rates", rates)
        req = tuple(required_snr_db(r, self.bandwidth_hz) for r in rates)
        object.__setattr__(self, "_required_snr_db", req)

    @classmethod
    def for_radio(cls, params: RadioParams, rates: Sequence[float] = DEFAULT_RATES_MBPS) -> "RateTable":
        return cls(tuple(rates), params.bandwidth_hz)

    @property
    def max_rate(self) -> float:
        return self.rates[-1]

    @property
    def min_rate(self) -> float:
        return self.rates[0]

    @property
    def required_snr_db(self) -> tuple[float, ...]:
        return self._required_snr_db

    def __len__(self) -> int:
        return len(self.rates)

    def index(self, rate: float) -> int:
        """Position of ``rate`` in the table; tolerant to float round-off."""
        for k, r in enumerate(self.rates):
            if math.isclose(r, rate, rel_tol=1e-9, abs_tol=1e-12):
                return k
        raise ChannelError(f"rate {rate!r} is not in the rate table {self.rates}")


def _clamp(distance):
    d = np.asarray(distance, dtype=float)
    if np.any(~np.isfinite(d)) or np.any(d <= 0):
        raise ChannelError("distance must be positive and finite")
    return np.maximum(d, MIN_DISTANCE_M)


def path_loss(distance, params: RadioParams = RadioParams()):
    """Indoor breakpoint path loss in dB (TGax model D form).

    Free-space slope up to the breakpoint distance, then 35 dB/decade.
    Accepts a scalar or an array of distances in meters.
    """
    d = _clamp(distance)
    d_bp = params.breakpoint_distance_m
    near = np.minimum(d, d_bp)
    far = np.maximum(d, d_bp) / d_bp
    loss = (
        40.05
        + 20.0 * math.log10(params.carrier_frequency_ghz / 2.4)
        + 20.0 * np.log10(near)
        + 35.0 * np.log10(far)
    )
    return float(loss) if loss.ndim == 0 else loss


def rss_at_observer(distance, params: RadioParams = RadioParams()):
    """RSS (dBm) of an uplink frame from a STA at ``distance`` heard by the eBCS AP."""
    return params.tx_power_sta_dbm - path_loss(distance, params)


def broadcast_snr_db(distance, params: RadioParams = RadioParams()):
    return params.tx_power_ebcs_dbm - path_loss(distance, params) - params.noise_power_dbm


def estimate_snr_from_rss(rss, params: RadioParams = RadioParams()):
    """Broadcast SNR (dB) inferred from an overheard RSS.

    The uplink loss ``P_STA - rss`` is assumed reciprocal and reapplied to
    the eBCS transmit power, so unequal AP/STA powers stay correct.
    """
    loss = params.tx_power_sta_dbm - np.asarray(rss, dtype=float)
    snr = params.tx_power_ebcs_dbm - loss - params.noise_power_dbm
    return float(snr) if snr.ndim == 0 else snr


def required_snr(rate_mbps: float, bandwidth_hz: float = 20e6) -> float:
    """Linear SNR needed to carry ``rate_mbps`` error-free over ``bandwidth_hz``."""
    if not rate_mbps > 0:
        raise ChannelError(f"rate must be positive, got {rate_mbps!r}")
    # expm1 keeps precision for rates far below the bandwidth
    return math.expm1(rate_mbps * 1e6 / bandwidth_hz * math.log(2.0))


def required_snr_db(rate_mbps: float, bandwidth_hz: float = 20e6) -> float:
    return 10.0 * math.log10(required_snr(rate_mbps, bandwidth_hz))


def broadcast_reception_ok(distance, rate_mbps: float, params: RadioParams = RadioParams()):
    """True where a STA at ``distance`` decodes a broadcast sent at ``rate_mbps``."""
    ok = np.asarray(broadcast_snr_db(distance, params)) >= required_snr_db(rate_mbps, params.bandwidth_hz)
    return bool(ok) if ok.ndim == 0 else ok


def coverage_radius(rate_mbps: float, params: RadioParams = RadioParams()) -> float:
    """Largest distance at which ``rate_mbps`` is still decodable (closed form)."""
    budget = params.tx_power_ebcs_dbm - params.noise_power_dbm - required_snr_db(rate_mbps, params.bandwidth_hz)
    d_bp = params.breakpoint_distance_m
    pl_bp = path_loss(d_bp, params)
    if budget <= pl_bp:
        base = 40.05 + 20.0 * math.log10(params.carrier_frequency_ghz / 2.4)
        return 10.0 ** ((budget - base) / 20.0)
    return d_bp * 10.0 ** ((budget - pl_bp) / 35.0)
