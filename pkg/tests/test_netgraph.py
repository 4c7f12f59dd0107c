import math

import numpy as np
import pandas as pd
import pytest

from services.beam import AngularSpread, ArrayConfig
from services.exceptions import DomainError, TopologyError
from services.netgraph import (
    LinkKind,
    Topology,
    access_band_partition,
    access_bandwidth,
    build_linear_scenario,
    enumerate_paths,
    flow_system,
    link_index,
    power_system,
)

# Backhaul columns of the four-relay full-connectivity network, in order
FULL_CONNECTIVITY_HOPS = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2), (1, 3), (2, 4), (0, 3), (1, 4), (0, 4)]

# Relay rows of the flow matrix (times R*): inflow minus backhaul outflow
RELAY_ROWS = [
    [1, -1, 0, 0, 0, -1, 0, 0, -1, 0],
    [0, 1, -1, 0, 1, 0, -1, 0, 0, 0],
    [0, 0, 1, -1, 0, 1, 0, 1, 0, 0],
    [0, 0, 0, 1, 0, 0, 1, 0, 1, 1],
]

# Power rows (times P_b): base station, then relays 1 to 3
BACKHAUL_POWER_ROWS = [
    [1, 0, 0, 0, 1, 0, 0, 1, 0, 1],
    [0, 1, 0, 0, 0, 1, 0, 0, 1, 0],
    [0, 0, 1, 0, 0, 0, 1, 0, 0, 0],
    [0, 0, 0, 1, 0, 0, 0, 0, 0, 0],
]


def test_full_connectivity_column_order(default_road):
    links = link_index(default_road, Topology.full_connectivity())
    backhaul = [(l.src, l.dst) for l in links if l.kind is LinkKind.BACKHAUL]
    assert backhaul == FULL_CONNECTIVITY_HOPS
    assert [l.dst for l in links if l.kind is LinkKind.ACCESS] == [0, 1, 2, 3, 4]
    assert [l.distance_m for l in links[:4]] == [200.0] * 4
    assert links[9].distance_m == 800.0


def test_flow_matrix(default_road):
    R_star = 1e9
    system = flow_system(default_road, Topology.full_connectivity(), R_star)
    expected = np.zeros((9, 15))
    expected[:4, :10] = RELAY_ROWS
    expected[4:, 10:] = np.eye(5)
    np.testing.assert_allclose(system.A * R_star, expected)
    np.testing.assert_array_equal(system.b, np.ones(9))


def test_power_matrix(default_road):
    scenario = default_road.model_copy(update={"pb_w": 2.0, "pa_w": 0.5})
    D = power_system(scenario, Topology.full_connectivity())
    expected = np.zeros((9, 15))
    expected[:4, :10] = np.array(BACKHAUL_POWER_ROWS) / 2.0
    expected[4:, 10:] = np.eye(5) / 0.5
    np.testing.assert_allclose(D, expected)


def test_single_hop_star_carries_own_demand(default_road):
    system = flow_system(default_road, Topology.single_hop(), 1e9)
    assert system.labels[:4] == ["BS->R1", "BS->R2", "BS->R3", "BS->R4"]
    R = np.full(9, 1e9)
    assert system.flow_residual(R) == pytest.approx(0.0)
    # one row for the base station's backhaul, five for access
    assert system.D.shape == (6, 9)
    assert system.power_residual(np.full(9, 0.25) * np.r_[np.ones(4), 4 * np.ones(5)]) == 0.0


def test_nearest_neighbor_chain(default_road):
    system = flow_system(default_road, Topology.nearest_neighbor(), 1e9)
    assert system.labels[:4] == ["BS->R1", "R1->R2", "R2->R3", "R3->R4"]
    # the chain carries 4, 3, 2, 1 users
    R = np.array([4e9, 3e9, 2e9, 1e9] + [1e9] * 5)
    assert system.flow_residual(R) == pytest.approx(0.0)


def test_user_weights_scale_demand_only(default_road):
    scenario = default_road.model_copy(update={"user_weights": (1.0, 2.0, 1.0, 0.5, 1.0)})
    weighted = flow_system(scenario, Topology.full_connectivity(), 1e9)
    plain = flow_system(default_road, Topology.full_connectivity(), 1e9)
    np.testing.assert_array_equal(weighted.A, plain.A)
    np.testing.assert_array_equal(weighted.b, [2.0, 1.0, 0.5, 1.0, 1.0, 2.0, 1.0, 0.5, 1.0])


def test_custom_topology_must_reach_every_relay(default_road):
    with pytest.raises(TopologyError):
        Topology.custom([(0, 1), (1, 2), (0, 3)]).backhaul_pairs(4)
    with pytest.raises(TopologyError):
        Topology.custom([(0, 1), (2, 1)]).backhaul_pairs(2)
    pairs = Topology.custom([(0, 2), (0, 1), (2, 3), (1, 4), (0, 2)]).backhaul_pairs(4)
    assert pairs == [(0, 1), (2, 3), (0, 2), (1, 4)]


def test_flow_system_needs_positive_rate(default_road):
    with pytest.raises(DomainError):
        flow_system(default_road, Topology.full_connectivity(), 0.0)


def test_access_reuse_bands(default_road):
    bands = access_band_partition(default_road)
    assert bands == (0, 1, 0, 1, 0)
    assert access_bandwidth([219e6, 200e6, 210e6, 219e6, 100e6], bands) == pytest.approx(438e6)


def test_path_counts_double_per_relay(default_road):
    links = link_index(default_road, Topology.full_connectivity())
    paths = enumerate_paths(4, links)
    assert [len(p) for p in paths] == [1, 2, 4, 8]
    # every path into relay 4 ends on a hop into relay 4
    assert all(links[p[-1]].dst == 4 for p in paths[3])


@pytest.mark.parametrize(
    "params",
    [
        {"relay_positions_m": (200.0, 150.0, 400.0, 800.0)},
        {"relay_positions_m": (200.0, 400.0)},
        {"access_ranges_m": (100.0, 100.0)},
        {"user_weights": (1.0, 1.0, 0.0, 1.0, 1.0)},
        {"relay_spacing_m": -5.0},
    ],
)
def test_invalid_geometry(params):
    with pytest.raises(DomainError):
        build_linear_scenario(**params)


def test_street_canyon_uses_3d_distances():
    scenario = build_linear_scenario(pathloss_model="umi-street")
    links = link_index(scenario, Topology.nearest_neighbor())
    assert links[0].distance_m == pytest.approx(200.0)
    assert links[-1].distance_m == pytest.approx(math.hypot(100.0, 8.5))


def test_irregular_positions():
    scenario = build_linear_scenario(n_relays=2, relay_positions_m=(150.0, 450.0), access_ranges_m=(80.0, 60.0, 90.0))
    links = link_index(scenario, Topology.full_connectivity())
    assert [l.distance_m for l in links] == [150.0, 300.0, 450.0, 80.0, 60.0, 90.0]


def test_arrays_set_gains_and_budgets():
    tx = ArrayConfig(n_h=8, n_v=8, element_gain_dbi=8.0, per_element_power_dbm=20.0)
    rx = ArrayConfig(n_h=1, n_v=2, element_gain_dbi=5.0)
    scenario = build_linear_scenario(tx_array=tx, rx_array=rx, spread=AngularSpread())
    assert scenario.pb_w == pytest.approx(6.4)
    assert scenario.pa_w == pytest.approx(6.4)
    assert scenario.backhaul_joint_gain_dbi == pytest.approx(2 * tx.max_gain_dbi)
    assert scenario.access_joint_gain_dbi == pytest.approx(tx.max_gain_dbi + rx.max_gain_dbi)


def test_matrix_export(default_road, tmp_path):
    system = flow_system(default_road, Topology.full_connectivity(), 1e9)
    path = tmp_path / "A.csv"
    system.to_csv(path, which="A")
    frame = pd.read_csv(path, index_col=0)
    assert list(frame.columns) == system.labels
    assert list(frame.index) == list(system.flow_rows)
    np.testing.assert_allclose(frame.to_numpy(), system.A)
    assert system.to_frame("D").shape == system.D.shape
