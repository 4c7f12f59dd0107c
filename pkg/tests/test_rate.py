import math

import numpy as np
import pytest

from services.channel import link_budget
from services.exceptions import DomainError
from services.rate import (
    Infeasible,
    RateModel,
    achievable_rate,
    ideal_rate,
    optimal_pilot_rate,
    optimal_pilot_ratio,
    penalized_rate,
    pilot_efficiency,
    rate_ceiling,
    rate_curve,
    required_bandwidth,
)

IDEAL = RateModel.ideal()
PILOT = RateModel.from_coherence(7.6e6, 5e-3)


@pytest.fixture(scope="module")
def access_budget():
    return link_budget("uma-nlos", 100, 28, tx_power_w=1.0, joint_gain_dbi=25)


@pytest.fixture(scope="module")
def backhaul_budget():
    return link_budget("uma-nlos", 800, 28, tx_power_w=0.25, joint_gain_dbi=50)


def test_access_link_reaches_1_18_gbps_in_219_mhz(access_budget):
    assert ideal_rate(access_budget, 219e6) == pytest.approx(1.18e9, abs=0.02e9)
    assert required_bandwidth(1.18e9, access_budget, IDEAL) == pytest.approx(219e6, rel=0.01)


def test_coherence_length_from_time_and_bandwidth():
    assert PILOT.coherence_length == pytest.approx(38000)


def test_pilot_model_needs_long_coherence():
    with pytest.raises(ValueError):
        RateModel.pilot_penalized(1.0)


def test_zero_bandwidth_carries_nothing(access_budget):
    assert achievable_rate(access_budget, 0.0, IDEAL) == 0.0
    assert achievable_rate(access_budget, 0.0, PILOT) == 0.0


def test_ideal_rate_is_concave_in_bandwidth(backhaul_budget):
    W = np.linspace(1e7, 5e9, 200)
    rates = np.array([ideal_rate(backhaul_budget, w) for w in W])
    assert np.all(np.diff(rates) > 0)
    assert np.all(np.diff(rates, 2) <= 1e-6 * rates.max())
    assert rates[-1] < rate_ceiling(backhaul_budget, IDEAL)


def test_ceiling_is_power_limited_asymptote(backhaul_budget):
    assert rate_ceiling(backhaul_budget, IDEAL) == pytest.approx(backhaul_budget.snr_bandwidth_hz / math.log(2))


@pytest.mark.parametrize("snr", [0.1, 1.0, 10.0, 1000.0])
def test_pilot_efficiency_is_concave_in_ratio(snr):
    alpha = np.linspace(1e-4, 1 - 1e-4, 400)
    efficiency = pilot_efficiency(snr, alpha, 38000)
    assert np.all(np.diff(efficiency, 2) <= 1e-12)
    best_alpha, best = optimal_pilot_ratio(snr, 38000)
    assert 0 < best_alpha < 1
    assert best >= efficiency.max() - 1e-9


def test_pilot_efficiency_vanishes_without_pilots():
    assert pilot_efficiency(10.0, 1e-12, 38000) < 1e-3


@pytest.mark.parametrize("seed", range(5))
def test_penalized_never_beats_ideal(seed, access_budget):
    rng = np.random.default_rng(seed)
    W = rng.uniform(1e6, 5e9)
    alpha = rng.uniform(0.001, 0.999)
    assert penalized_rate(access_budget, W, alpha, PILOT) <= ideal_rate(access_budget, W)
    assert optimal_pilot_rate(access_budget, W, PILOT)[0] <= ideal_rate(access_budget, W)


def test_long_coherence_recovers_ideal(access_budget):
    model = RateModel.pilot_penalized(1e12)
    assert optimal_pilot_rate(access_budget, 219e6, model)[0] == pytest.approx(
        ideal_rate(access_budget, 219e6), rel=1e-2
    )


def test_penalized_rate_checks_ratio(access_budget):
    with pytest.raises(DomainError):
        penalized_rate(access_budget, 1e8, 1.0, PILOT)
    with pytest.raises(DomainError):
        penalized_rate(access_budget, 1e8, 0.5, IDEAL)


@pytest.mark.parametrize("model", [IDEAL, PILOT], ids=["ideal", "pilot"])
@pytest.mark.parametrize("fraction", [0.01, 0.2, 0.5, 0.8, 0.95])
def test_required_bandwidth_inverts_rate(model, fraction, backhaul_budget):
    target = fraction * rate_ceiling(backhaul_budget, model)
    W = required_bandwidth(target, backhaul_budget, model)
    assert not isinstance(W, Infeasible)
    assert achievable_rate(backhaul_budget, W, model) == pytest.approx(target, rel=1e-6)
    # the smallest such bandwidth
    assert achievable_rate(backhaul_budget, W * (1 - 1e-4), model) < target


@pytest.mark.parametrize("model", [IDEAL, PILOT], ids=["ideal", "pilot"])
@pytest.mark.parametrize("target", [50.0, 1e4, 1e6])
def test_required_bandwidth_is_relative_on_thin_links(model, target, backhaul_budget):
    # a few hertz of bandwidth must still deliver the target to high relative precision
    W = required_bandwidth(target, backhaul_budget, model)
    assert achievable_rate(backhaul_budget, W, model) == pytest.approx(target, rel=1e-8)


@pytest.mark.parametrize("model", [IDEAL, PILOT], ids=["ideal", "pilot"])
def test_targets_above_ceiling_are_infeasible(model, backhaul_budget):
    ceiling = rate_ceiling(backhaul_budget, model)
    result = required_bandwidth(1.01 * ceiling, backhaul_budget, model)
    assert isinstance(result, Infeasible)
    assert result.ceiling_bps == pytest.approx(ceiling, rel=1e-3)


def test_required_bandwidth_needs_positive_target(access_budget):
    with pytest.raises(DomainError):
        required_bandwidth(0.0, access_budget, IDEAL)


def test_pilot_rate_peaks_at_finite_bandwidth(backhaul_budget):
    curve = rate_curve(PILOT)
    W_peak = curve.peak_bandwidth * backhaul_budget.snr_bandwidth_hz
    peak = achievable_rate(backhaul_budget, W_peak, PILOT)
    assert achievable_rate(backhaul_budget, 10 * W_peak, PILOT) < peak
    assert achievable_rate(backhaul_budget, 0.1 * W_peak, PILOT) < peak


@pytest.mark.parametrize("model", [IDEAL, PILOT], ids=["ideal", "pilot"])
def test_normalized_curve_matches_bisection(model, backhaul_budget):
    c = backhaul_budget.snr_bandwidth_hz
    curve = rate_curve(model)
    targets = np.array([0.05, 0.3, 0.6, 0.9]) * rate_ceiling(backhaul_budget, model)
    tabulated = c * curve.bandwidth(targets / c)
    exact = [required_bandwidth(t, backhaul_budget, model) for t in targets]
    np.testing.assert_allclose(tabulated, exact, rtol=1e-3)
    assert np.all(np.isinf(curve.bandwidth(np.array([curve.peak_rate * 1.001]))))
