import math

import numpy as np
import pytest

from services.channel import (
    LinkBudget,
    PathLossModel,
    distance_3d,
    link_budget,
    noise_psd_dbm_hz,
    path_loss_db,
    snr_linear,
)
from services.exceptions import DomainError


def test_los_plus_25_at_reference_distance():
    expected = 20 * math.log10(4 * math.pi / 0.3) + 25
    assert path_loss_db(PathLossModel.LOS_PLUS_25, 1, 1) == pytest.approx(expected)
    assert expected == pytest.approx(57.44, abs=0.01)


def test_uma_nlos_closed_form():
    assert path_loss_db("uma-nlos", 100, 28) == pytest.approx(120.48, abs=0.01)


def test_umi_is_about_13_db_worse_than_uma():
    gap = path_loss_db("umi-nlos", 100, 28) - path_loss_db("uma-nlos", 100, 28)
    assert 13.0 <= gap <= 13.5


@pytest.mark.parametrize("model", list(PathLossModel))
def test_path_loss_increases_with_distance_and_frequency(model):
    distances = np.array([1.0, 10.0, 100.0, 400.0, 800.0])
    losses = path_loss_db(model, distances, 28)
    assert np.all(np.diff(losses) > 0)
    assert path_loss_db(model, 200, 60) > path_loss_db(model, 200, 28) > path_loss_db(model, 200, 1)
    assert np.all(np.isfinite(losses)) and np.all(losses > 0)


def test_models_order_at_800_m():
    losses = {m: path_loss_db(m, 800, 28) for m in PathLossModel}
    assert losses[PathLossModel.LOS_PLUS_25] < losses[PathLossModel.UMA_NLOS] < losses[PathLossModel.UMI_NLOS]


@pytest.mark.parametrize("d, fc", [(0.5, 28), (0.0, 28), (100, 0), (100, -3)])
def test_path_loss_domain(d, fc):
    with pytest.raises(DomainError):
        path_loss_db("uma-nlos", d, fc)


def test_noise_psd_is_thermal_plus_noise_figure():
    assert noise_psd_dbm_hz(9) == -165.0
    budget = LinkBudget(tx_power_w=1.0, joint_gain_dbi=25, path_loss_db=120)
    assert budget.noise_psd_dbm_hz == -165.0


def test_snr_of_access_link():
    budget = link_budget("uma-nlos", 100, 28, tx_power_w=1.0, joint_gain_dbi=25)
    # received -65.48 dBm over -165 dBm/Hz
    assert budget.snr_bandwidth_hz == pytest.approx(8.944e9, rel=1e-3)
    assert snr_linear(budget, 219e6) == pytest.approx(8.944e9 / 219e6, rel=1e-3)
    assert budget.with_power(0.5).snr_bandwidth_hz == pytest.approx(budget.snr_bandwidth_hz / 2)


def test_snr_needs_positive_bandwidth():
    budget = LinkBudget(tx_power_w=1.0, joint_gain_dbi=25, path_loss_db=120)
    with pytest.raises(DomainError):
        snr_linear(budget, 0.0)


def test_link_budget_rejects_zero_power():
    with pytest.raises(ValueError):
        LinkBudget(tx_power_w=0.0, joint_gain_dbi=25, path_loss_db=120)


def test_distance_3d():
    assert distance_3d(100, 10, 1.5) == pytest.approx(math.hypot(100, 8.5))
    assert distance_3d(200, 10, 10) == 200
