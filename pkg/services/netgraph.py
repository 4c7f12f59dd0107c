import logging
from collections import deque
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from services.beam import AngularSpread, ArrayConfig, array_link_gain
from services.channel import LinkBudget, PathLossModel, distance_3d, link_budget
from services.exceptions import DomainError, ProblemSizeError, TopologyError
from services.rate import RateModel

logger = logging.getLogger("backhaul_planner.netgraph")


class LinkKind(str, Enum):
    BACKHAUL = "backhaul"
    ACCESS = "access"


def node_name(index: int) -> str:
    return "BS" if index == 0 else f"R{index}"


class NodeSpec(BaseModel):
    """An access node (base station at index 0, relays after it) and the user it serves."""

    model_config = ConfigDict(frozen=True)

    index: int
    position_m: float
    access_range_m: float

    @property
    def name(self) -> str:
        return node_name(self.index)

    @property
    def user_name(self) -> str:
        return f"U{self.index}"


class LinkSpec(BaseModel):
    """One column of the flow system: a backhaul hop between nodes or an access link to a user."""

    model_config = ConfigDict(frozen=True)

    src: int
    dst: int
    kind: LinkKind
    distance_m: float

    @property
    def label(self) -> str:
        if self.kind is LinkKind.ACCESS:
            return f"{node_name(self.src)}->U{self.dst}"
        return f"{node_name(self.src)}->{node_name(self.dst)}"


class NetworkScenario(BaseModel):
    """A linear deployment: base station at 0 m, relays further down the street, one user per node."""

    model_config = ConfigDict(frozen=True)

    n_relays: int = Field(default=4, ge=0)
    relay_spacing_m: float = Field(default=200.0, gt=0)
    access_range_m: float = Field(default=100.0, gt=0)
    relay_positions_m: tuple[float, ...] | None = None
    access_ranges_m: tuple[float, ...] | None = None
    pathloss_model: PathLossModel = PathLossModel.UMA_NLOS
    fc_ghz: float = Field(default=28.0, gt=0)
    backhaul_joint_gain_dbi: float = 50.0
    access_joint_gain_dbi: float = 25.0
    pb_w: float = Field(default=1.0, gt=0)
    pa_w: float = Field(default=1.0, gt=0)
    noise_figure_db: float = 9.0
    rate_model: RateModel = RateModel()
    access_reuse: int = Field(default=2, ge=1)
    user_weights: tuple[float, ...] | None = None
    tx_height_m: float = Field(default=10.0, ge=0)
    rx_height_m: float = Field(default=1.5, ge=0)

    @model_validator(mode="after")
    def check_geometry(self) -> "NetworkScenario":
        positions = self.positions
        if len(positions) != self.n_relays:
            raise ValueError(f"expected {self.n_relays} relay positions, got {len(positions)}")
        previous = 0.0
        for position in positions:
            if not position > previous:
                raise ValueError("relay positions must be positive and strictly increasing")
            previous = position
        ranges = self.ranges
        if len(ranges) != self.n_relays + 1 or any(not r > 0 for r in ranges):
            raise ValueError("need one positive access range per node")
        weights = self.weights
        if len(weights) != self.n_relays + 1 or any(not w > 0 for w in weights):
            raise ValueError("need one positive user weight per node")
        return self

    @property
    def positions(self) -> tuple[float, ...]:
        if self.relay_positions_m is not None:
            return tuple(self.relay_positions_m)
        return tuple(self.relay_spacing_m * k for k in range(1, self.n_relays + 1))

    @property
    def ranges(self) -> tuple[float, ...]:
        if self.access_ranges_m is not None:
            return tuple(self.access_ranges_m)
        return (self.access_range_m,) * (self.n_relays + 1)

    @property
    def weights(self) -> tuple[float, ...]:
        if self.user_weights is not None:
            return tuple(self.user_weights)
        return (1.0,) * (self.n_relays + 1)

    @property
    def nodes(self) -> list[NodeSpec]:
        positions = (0.0,) + self.positions
        return [
            NodeSpec(index=k, position_m=positions[k], access_range_m=self.ranges[k])
            for k in range(self.n_relays + 1)
        ]


def build_linear_scenario(
    *,
    tx_array: ArrayConfig | None = None,
    rx_array: ArrayConfig | None = None,
    spread: AngularSpread | None = None,
    **params,
) -> NetworkScenario:
    """
    Validate scenario parameters and lay the nodes out on a line.

    When a transmit array is given, the joint gains and both power budgets are
    derived from it: backhaul links end on an identical relay array, access
    links on rx_array, and the angular spread is applied at departure.
    """
    if tx_array is not None:
        if rx_array is None:
            raise DomainError("An array scenario needs a receive array for the users")
        spread = spread or AngularSpread()
        backhaul_gain, power = array_link_gain(tx_array, tx_array, spread)
        access_gain, _ = array_link_gain(tx_array, rx_array, spread)
        params.update(
            backhaul_joint_gain_dbi=backhaul_gain,
            access_joint_gain_dbi=access_gain,
            pb_w=power,
            pa_w=power,
        )
    try:
        scenario = NetworkScenario(**params)
    except ValidationError as e:
        raise DomainError(f"Invalid scenario: {e}") from e
    logger.debug(f"Built scenario with relays at {scenario.positions} m")
    return scenario


class TopologyKind(str, Enum):
    SINGLE_HOP = "single-hop"
    NEAREST_NEIGHBOR = "nearest-neighbor"
    FULL_CONNECTIVITY = "full-connectivity"
    CUSTOM = "custom"


class Topology(BaseModel):
    """Which backhaul hops may carry traffic. Hops always point away from the base station."""

    model_config = ConfigDict(frozen=True)

    kind: TopologyKind = TopologyKind.FULL_CONNECTIVITY
    links: tuple[tuple[int, int], ...] | None = None

    @classmethod
    def single_hop(cls) -> "Topology":
        return cls(kind=TopologyKind.SINGLE_HOP)

    @classmethod
    def nearest_neighbor(cls) -> "Topology":
        return cls(kind=TopologyKind.NEAREST_NEIGHBOR)

    @classmethod
    def full_connectivity(cls) -> "Topology":
        return cls(kind=TopologyKind.FULL_CONNECTIVITY)

    @classmethod
    def custom(cls, links) -> "Topology":
        return cls(kind=TopologyKind.CUSTOM, links=tuple(tuple(link) for link in links))

    def backhaul_pairs(self, n_relays: int) -> list[tuple[int, int]]:
        """Enabled (src, dst) hops in column order: by hop length, then by source."""
        if self.kind is TopologyKind.SINGLE_HOP:
            pairs = {(0, r) for r in range(1, n_relays + 1)}
        elif self.kind is TopologyKind.NEAREST_NEIGHBOR:
            pairs = {(r - 1, r) for r in range(1, n_relays + 1)}
        elif self.kind is TopologyKind.FULL_CONNECTIVITY:
            pairs = {(i, j) for j in range(1, n_relays + 1) for i in range(j)}
        else:
            pairs = set()
            for src, dst in self.links or ():
                if not 0 <= src < dst <= n_relays:
                    raise TopologyError(f"Invalid backhaul hop {src}->{dst} for {n_relays} relays")
                pairs.add((src, dst))
        _check_connected(n_relays, pairs)
        return sorted(pairs, key=lambda pair: (pair[1] - pair[0], pair[0]))


def _check_connected(n_relays: int, pairs) -> None:
    reached = {0}
    queue = deque([0])
    while queue:
        node = queue.popleft()
        for src, dst in pairs:
            if src == node and dst not in reached:
                reached.add(dst)
                queue.append(dst)
    missing = [node_name(r) for r in range(1, n_relays + 1) if r not in reached]
    if missing:
        raise TopologyError(f"Relays {', '.join(missing)} cannot be reached from the base station")


def _link_distance(scenario: NetworkScenario, horizontal_m: float, kind: LinkKind) -> float:
    if scenario.pathloss_model is not PathLossModel.UMI_STREET:
        return horizontal_m
    # relays sit at base-station height; users at terminal height
    rx_height = scenario.tx_height_m if kind is LinkKind.BACKHAUL else scenario.rx_height_m
    return distance_3d(horizontal_m, scenario.tx_height_m, rx_height)


def link_index(scenario: NetworkScenario, topology: Topology) -> tuple[LinkSpec, ...]:
    nodes = scenario.nodes
    links = [
        LinkSpec(
            src=src,
            dst=dst,
            kind=LinkKind.BACKHAUL,
            distance_m=_link_distance(
                scenario, nodes[dst].position_m - nodes[src].position_m, LinkKind.BACKHAUL
            ),
        )
        for src, dst in topology.backhaul_pairs(scenario.n_relays)
    ]
    links += [
        LinkSpec(
            src=node.index,
            dst=node.index,
            kind=LinkKind.ACCESS,
            distance_m=_link_distance(scenario, node.access_range_m, LinkKind.ACCESS),
        )
        for node in nodes
    ]
    return tuple(links)


def link_budgets(scenario: NetworkScenario, links) -> list[LinkBudget]:
    """Budgets of each link at its transmitter's full power budget."""
    budgets = []
    for link in links:
        backhaul = link.kind is LinkKind.BACKHAUL
        budgets.append(
            link_budget(
                scenario.pathloss_model,
                link.distance_m,
                scenario.fc_ghz,
                tx_power_w=scenario.pb_w if backhaul else scenario.pa_w,
                joint_gain_dbi=(
                    scenario.backhaul_joint_gain_dbi if backhaul else scenario.access_joint_gain_dbi
                ),
                noise_figure_db=scenario.noise_figure_db,
            )
        )
    return budgets


@dataclass(frozen=True)
class FlowSystem:
    """
    Linear constraints of the planning problem: A @ R = b (flow conservation)
    and D @ P <= 1 (power budgets), with one column per link.
    """

    A: np.ndarray
    b: np.ndarray
    D: np.ndarray
    link_index: tuple[LinkSpec, ...]
    flow_rows: tuple[str, ...]
    power_rows: tuple[str, ...]
    r_star_bps: float

    def __post_init__(self):
        for matrix in (self.A, self.b, self.D):
            matrix.setflags(write=False)

    @property
    def backhaul_columns(self) -> np.ndarray:
        return np.array([j for j, l in enumerate(self.link_index) if l.kind is LinkKind.BACKHAUL], dtype=int)

    @property
    def access_columns(self) -> np.ndarray:
        return np.array([j for j, l in enumerate(self.link_index) if l.kind is LinkKind.ACCESS], dtype=int)

    @property
    def labels(self) -> list[str]:
        return [link.label for link in self.link_index]

    def flow_residual(self, R) -> float:
        return float(np.max(np.abs(self.A @ np.asarray(R, dtype=float) - self.b)))

    def power_residual(self, P) -> float:
        excess = self.D @ np.asarray(P, dtype=float) - 1.0
        return float(max(np.max(excess, initial=0.0), 0.0))

    def to_frame(self, which: str = "A") -> pd.DataFrame:
        if which == "A":
            return pd.DataFrame(self.A, index=list(self.flow_rows), columns=self.labels)
        if which == "D":
            return pd.DataFrame(self.D, index=list(self.power_rows), columns=self.labels)
        raise ValueError(f"Unknown matrix {which!r}")

    def to_csv(self, path: str | Path, which: str = "A") -> None:
        self.to_frame(which).to_csv(path, lineterminator="\n", encoding="utf-8")


def _power_rows(scenario: NetworkScenario, links) -> tuple[np.ndarray, list[str]]:
    rows, labels = [], []
    for node in scenario.nodes:
        columns = [j for j, l in enumerate(links) if l.kind is LinkKind.BACKHAUL and l.src == node.index]
        if columns:
            row = np.zeros(len(links))
            row[columns] = 1.0 / scenario.pb_w
            rows.append(row)
            labels.append(f"{node.name} backhaul")
    for j, link in enumerate(links):
        if link.kind is LinkKind.ACCESS:
            row = np.zeros(len(links))
            row[j] = 1.0 / scenario.pa_w
            rows.append(row)
            labels.append(f"{node_name(link.src)} access")
    return np.array(rows).reshape(len(rows), len(links)), labels


def power_system(scenario: NetworkScenario, topology: Topology) -> np.ndarray:
    """D matrix: one row per transmitter's backhaul budget, one per access link."""
    return _power_rows(scenario, link_index(scenario, topology))[0]


def flow_system(scenario: NetworkScenario, topology: Topology, R_star: float) -> FlowSystem:
    if not R_star > 0:
        raise DomainError(f"Target rate must be positive, got {R_star}")
    links = link_index(scenario, topology)
    n = scenario.n_relays
    weights = scenario.weights

    A = np.zeros((n + n + 1, len(links)))
    for j, link in enumerate(links):
        if link.kind is LinkKind.BACKHAUL:
            # relay rows: backhaul inflow minus backhaul outflow equals the relay's own user demand
            A[link.dst - 1, j] += 1.0
            if link.src > 0:
                A[link.src - 1, j] -= 1.0
        else:
            A[n + link.dst, j] = 1.0
    A /= R_star
    b = np.array(weights[1:] + weights, dtype=float)
    D, power_labels = _power_rows(scenario, links)
    flow_rows = [f"{node_name(r)} flow" for r in range(1, n + 1)] + [f"U{k} demand" for k in range(n + 1)]
    return FlowSystem(
        A=A,
        b=b,
        D=D,
        link_index=links,
        flow_rows=tuple(flow_rows),
        power_rows=tuple(power_labels),
        r_star_bps=R_star,
    )


def access_band_partition(scenario: NetworkScenario) -> tuple[int, ...]:
    """Band of each access link (node order along the street), alternating under frequency reuse."""
    return tuple(k % scenario.access_reuse for k in range(scenario.n_relays + 1))


def access_bandwidth(bandwidths, bands) -> float:
    """Total access spectrum: every band is as wide as its widest member link."""
    widest: dict[int, float] = {}
    for bandwidth, band in zip(bandwidths, bands):
        widest[band] = max(widest.get(band, 0.0), float(bandwidth))
    return sum(widest.values())


def enumerate_paths(n_relays: int, links, max_paths: int = 5000) -> list[list[list[int]]]:
    """For every relay, all base-station-to-relay paths as lists of backhaul column indices."""
    outgoing: dict[int, list[tuple[int, int]]] = {}
    for j, link in enumerate(links):
        if link.kind is LinkKind.BACKHAUL:
            outgoing.setdefault(link.src, []).append((j, link.dst))

    paths: list[list[list[int]]] = [[] for _ in range(n_relays)]
    count = 0
    stack = [(0, [])]
    while stack:
        node, columns = stack.pop()
        if node > 0:
            paths[node - 1].append(columns)
            count += 1
            if count > max_paths:
                raise ProblemSizeError(f"Topology has more than {max_paths} backhaul paths")
        for j, dst in outgoing.get(node, []):
            stack.append((dst, columns + [j]))
    for relay_paths in paths:
        relay_paths.sort(key=lambda columns: (len(columns), columns))
    return paths
