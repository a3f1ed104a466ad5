import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ebcs_rate.channel import (
    ChannelError,
    RadioParams,
    RateTable,
    broadcast_reception_ok,
    broadcast_snr_db,
    coverage_radius,
    estimate_snr_from_rss,
    path_loss,
    required_snr,
    required_snr_db,
    rss_at_observer,
)

RADIO = RadioParams()
RATES = RateTable()

# Frozen from a standalone math-module evaluation of 2**(a/W) - 1.
REQ_SNR_DB = (-4.5938, 6.9718, 15.4099, 21.5536)
# Frozen from bisection on the link budget with P_n = -101 dBm (see _bisect_radius).
RADII = {8.6: 253.9904, 51.6: 118.6788, 103.2: 68.1212, 143.4: 45.4726}


def _bisect_radius(rate, params=RADIO):
    lo, hi = 0.1, 1000.0
    need = 10 * math.log10(2 ** (rate * 1e6 / params.bandwidth_hz) - 1)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if broadcast_snr_db(mid, params) >= need:
            lo = mid
        else:
            hi = mid
    return lo


def test_defaults_match_reference_settings():
    assert RADIO.carrier_frequency_ghz == 5.0
    assert RADIO.bandwidth_hz == 20e6
    assert RADIO.breakpoint_distance_m == 10.0
    # 10 mW
    assert RADIO.tx_power_ebcs_dbm == RADIO.tx_power_sta_dbm == 10.0
    assert RADIO.noise_power_dbm == -101.0
    assert RATES.rates == (8.6, 51.6, 103.2, 143.4)
    assert RATES.max_rate == 143.4


@pytest.mark.parametrize("kwargs", [{"bandwidth_hz": 0}, {"breakpoint_distance_m": -1}, {"carrier_frequency_ghz": 0}])
def test_radio_params_reject_non_positive(kwargs):
    with pytest.raises(ChannelError):
        RadioParams(**kwargs)


@pytest.mark.parametrize("rates", [(), (8.6, 8.6), (51.6, 8.6), (-1.0, 2.0)])
def test_rate_table_rejects_bad_tables(rates):
    with pytest.raises(ChannelError):
        RateTable(rates)


def test_path_loss_at_breakpoint():
    assert path_loss(10.0) == pytest.approx(66.43, abs=0.01)


def test_path_loss_continuous_at_breakpoint():
    assert abs(path_loss(10.0 - 1e-9) - path_loss(10.0 + 1e-9)) < 1e-6


def test_path_loss_beyond_breakpoint():
    assert path_loss(45.5) == pytest.approx(89.43, abs=0.05)
    assert path_loss(45.5) == pytest.approx(path_loss(10.0) + 35 * math.log10(4.55), abs=1e-9)


@pytest.mark.parametrize("d", [0.0, -3.0, float("nan")])
def test_path_loss_domain(d):
    with pytest.raises(ChannelError):
        path_loss(d)


def test_path_loss_clamps_tiny_distances():
    assert path_loss(1e-6) == path_loss(0.1)


@given(st.floats(0.01, 1000), st.floats(0.01, 1000))
def test_path_loss_non_decreasing(a, b):
    lo, hi = sorted((a, b))
    assert path_loss(lo) <= path_loss(hi) + 1e-12


def test_rss_examples():
    assert rss_at_observer(10.0) == pytest.approx(-56.43, abs=0.01)
    assert rss_at_observer(10.0) - rss_at_observer(20.0) == pytest.approx(35 * math.log10(2), abs=1e-9)
    assert rss_at_observer(33.3) == rss_at_observer(33.3)


def test_snr_estimate_examples():
    assert estimate_snr_from_rss(-56.43) == pytest.approx(44.57, abs=1e-9)
    assert estimate_snr_from_rss(-70.0) == -70.0 - RADIO.noise_power_dbm
    louder = RadioParams(tx_power_ebcs_dbm=13.0)
    assert estimate_snr_from_rss(-70.0, louder) - estimate_snr_from_rss(-70.0) == pytest.approx(3.0, abs=1e-12)


def test_snr_estimate_uses_both_powers():
    p = RadioParams(tx_power_ebcs_dbm=20.0, tx_power_sta_dbm=15.0)
    # loss = 15 - (-60) = 75 dB; snr = 20 - 75 + 101
    assert estimate_snr_from_rss(-60.0, p) == pytest.approx(46.0)


@given(st.floats(0.2, 500))
def test_estimate_is_consistent_with_true_snr(d):
    assert estimate_snr_from_rss(rss_at_observer(d)) == pytest.approx(broadcast_snr_db(d), abs=1e-9)


def test_required_snr_values():
    assert required_snr(8.6) == pytest.approx(0.3472, abs=1e-4)
    # 2**7.17 - 1 = 143.0075
    assert required_snr(143.4) == pytest.approx(143.0075, abs=1e-3)
    assert required_snr_db(8.6) == pytest.approx(-4.59, abs=0.01)
    assert required_snr_db(143.4) == pytest.approx(21.55, abs=0.01)
    assert RATES.required_snr_db == pytest.approx(REQ_SNR_DB, abs=1e-4)
    assert all(a < b for a, b in zip(RATES.required_snr_db, RATES.required_snr_db[1:]))


def test_required_snr_limit_and_domain():
    assert required_snr(1e-9) == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ChannelError):
        required_snr(0.0)


def test_reception_examples():
    assert broadcast_reception_ok(40.0, 143.4)
    assert not broadcast_reception_ok(50.0, 143.4)
    assert np.all(broadcast_reception_ok(np.linspace(0.1, 10, 50), 8.6))


@pytest.mark.parametrize("rate", RATES.rates)
def test_coverage_radius_closed_form_vs_bisection(rate):
    closed = coverage_radius(rate)
    assert closed == pytest.approx(_bisect_radius(rate), abs=0.1)
    assert closed == pytest.approx(RADII[rate], abs=1e-3)
    assert broadcast_reception_ok(closed * (1 - 1e-9), rate)
    assert not broadcast_reception_ok(closed * (1 + 1e-6), rate)


def test_coverage_radius_inside_breakpoint():
    loud = RadioParams(noise_power_dbm=-60.0)
    assert coverage_radius(143.4, loud) < loud.breakpoint_distance_m
    assert coverage_radius(143.4, loud) == pytest.approx(_bisect_radius(143.4, loud), abs=1e-6)


@given(st.floats(0.2, 400), st.floats(0.2, 400), st.sampled_from(RATES.rates))
def test_reception_monotone_in_distance(a, b, rate):
    near, far = sorted((a, b))
    if broadcast_reception_ok(far, rate):
        assert broadcast_reception_ok(near, rate)


@given(st.floats(0.2, 400))
def test_reception_monotone_in_rate(d):
    ok = [broadcast_reception_ok(d, r) for r in RATES.rates]
    assert ok == sorted(ok, reverse=True)
