import math

import numpy as np
import pytest

from services.beam import (
    AngularSpread,
    ArrayConfig,
    array_link_gain,
    effective_gain,
    gaussian_pattern,
    nominal_beamwidths,
)
from services.exceptions import DomainError, ModelValidityError

WIDE_SPREAD = AngularSpread.from_degrees(14.0, 0.6)


def array(n: int, element_gain_dbi: float = 8.0, power_dbm: float | None = None) -> ArrayConfig:
    return ArrayConfig(n_h=n, n_v=n, element_gain_dbi=element_gain_dbi, per_element_power_dbm=power_dbm)


@pytest.mark.parametrize("n", [1, 2, 4, 8, 16])
def test_no_spread_gives_full_array_gain(n):
    cfg = array(n)
    assert effective_gain(cfg, AngularSpread()) == cfg.max_gain_dbi
    assert cfg.max_gain_dbi == pytest.approx(10 * math.log10(n * n) + 8.0)


def test_large_array_saturates_under_spread():
    cfg = array(16)
    degradation = cfg.max_gain_dbi - effective_gain(cfg, WIDE_SPREAD)
    assert degradation == pytest.approx(9.0, abs=0.7)


def test_small_array_barely_degrades():
    cfg = array(4)
    degradation = cfg.max_gain_dbi - effective_gain(cfg, WIDE_SPREAD)
    assert degradation == pytest.approx(3.0, abs=0.5)


def test_gain_decreases_with_spread():
    cfg = array(8)
    gains = [effective_gain(cfg, AngularSpread.from_degrees(asd, 0.6)) for asd in range(0, 21, 2)]
    assert np.all(np.diff(gains) < 0)


def test_nominal_beamwidths_follow_peak_gain():
    cfg = ArrayConfig(n_h=8, n_v=2, element_gain_dbi=8.0)
    B_h, B_v = nominal_beamwidths(cfg)
    assert B_h * B_v == pytest.approx(2.0 / cfg.max_gain_linear)
    assert B_h < B_v
    assert gaussian_pattern(0.0, 0.0, B_h, B_v) == pytest.approx(cfg.max_gain_linear)


def test_pattern_falls_off_the_boresight():
    assert gaussian_pattern(0.1, 0.0, 0.05, 0.05) < gaussian_pattern(0.0, 0.0, 0.05, 0.05)
    with pytest.raises(DomainError):
        gaussian_pattern(0.0, 0.0, 0.0, 0.1)


def test_wide_beams_are_outside_the_model():
    # a single -3 dBi element would need beams wider than 90 degrees
    with pytest.raises(ModelValidityError):
        effective_gain(array(1, element_gain_dbi=-3.0), AngularSpread())
    with pytest.raises(ModelValidityError):
        effective_gain(array(2), AngularSpread.from_degrees(95.0, 0.0))


def test_total_power_and_link_gain():
    tx = array(8, power_dbm=20.0)
    rx = ArrayConfig(n_h=1, n_v=2, element_gain_dbi=5.0)
    assert tx.total_power_w == pytest.approx(6.4)
    gain, power = array_link_gain(tx, rx, AngularSpread())
    assert gain == pytest.approx(tx.max_gain_dbi + rx.max_gain_dbi)
    assert power == pytest.approx(6.4)
    spread_gain, _ = array_link_gain(tx, rx, AngularSpread.from_degrees(15.6, 1.6))
    assert spread_gain < gain


def test_array_without_power_has_no_budget():
    with pytest.raises(DomainError):
        array(4).total_power_w
