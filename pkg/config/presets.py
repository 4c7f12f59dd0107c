from config.scenario_file import ScenarioConfig
from services.exceptions import ScenarioConfigError
from services.solver import PlanMethod

GBPS = 1e9
MBPS = 1e6

ALL_TOPOLOGIES = [
    PlanMethod.SINGLE_HOP_EQUAL,
    PlanMethod.SINGLE_HOP,
    PlanMethod.NEAREST_NEIGHBOR,
    PlanMethod.OPTIMAL,
]


def _grid(start: float, stop: float, count: int) -> list[float]:
    step = (stop - start) / (count - 1)
    return [round(start + k * step, 3) for k in range(count)]


# Scenarios behind the published rate-bandwidth curves, on the default road
PRESETS: dict[str, ScenarioConfig] = {
    # star backhaul with equal power at 50 dBi, against the topologies and direct access
    "fig3": ScenarioConfig(
        pathloss_model="los-plus-25",
        backhaul_gain_dbi=50.0,
        r_star_bps=1 * GBPS,
        r_star_grid_bps=_grid(0.1 * GBPS, 1.2 * GBPS, 12),
        methods=ALL_TOPOLOGIES + [PlanMethod.DIRECT],
    ),
    # severe path loss: relay-to-relay hops win
    "fig4": ScenarioConfig(
        pathloss_model="umi-nlos",
        r_star_bps=50 * MBPS,
        r_star_grid_bps=_grid(10 * MBPS, 100 * MBPS, 10),
        methods=ALL_TOPOLOGIES,
    ),
    # power optimization gains, equal split as reference
    "fig5": ScenarioConfig(
        pathloss_model="uma-nlos",
        r_star_bps=1 * GBPS,
        r_star_grid_bps=_grid(0.1 * GBPS, 1.2 * GBPS, 12),
        methods=[PlanMethod.SINGLE_HOP_EQUAL, PlanMethod.SINGLE_HOP, PlanMethod.OPTIMAL],
    ),
    # the star network when scattering leaves only 40 dBi of joint gain
    "fig6": ScenarioConfig(
        pathloss_model="los-plus-25",
        backhaul_gain_dbi=40.0,
        r_star_bps=300 * MBPS,
        r_star_grid_bps=_grid(50 * MBPS, 400 * MBPS, 8),
        methods=[PlanMethod.SINGLE_HOP_EQUAL, PlanMethod.DIRECT],
    ),
    # the optimized topology labelled link by link
    "fig7": ScenarioConfig(
        pathloss_model="uma-nlos",
        r_star_bps=1.18 * GBPS,
        r_star_grid_bps=[1.18 * GBPS],
        methods=[PlanMethod.OPTIMAL],
    ),
    # street canyon with pilot overhead; 64-element transmit arrays at 20 dBm per element
    "fig8": ScenarioConfig(
        pathloss_model="umi-street",
        rate_model="pilot-penalized",
        coherence_bandwidth_hz=7.6e6,
        coherence_time_s=5e-3,
        tx_n_h=8,
        tx_n_v=8,
        tx_element_gain_dbi=8.0,
        tx_element_power_dbm=20.0,
        rx_n_h=1,
        rx_n_v=2,
        rx_element_gain_dbi=5.0,
        asd_deg=15.6,
        zsd_deg=1.6,
        r_star_bps=1 * GBPS,
        r_star_grid_bps=_grid(0.2 * GBPS, 1.2 * GBPS, 6),
        methods=[PlanMethod.OPTIMAL],
    ),
}


def preset_names() -> list[str]:
    return sorted(PRESETS)


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioConfigError(f"unknown preset {name!r}; choose from {', '.join(preset_names())}") from None
