import logging

from fastapi import HTTPException

from config.presets import get_preset, preset_names
from controllers.schema import GainResponse, PathLossResponse, PlanRequest, SweepRequest
from services.beam import AngularSpread, ArrayConfig, effective_gain
from services.channel import path_loss_db
from services.exceptions import PlannerError, ScenarioConfigError
from services.netgraph import Topology, TopologyKind
from services.solver import (
    PlanMethod,
    SolveReport,
    SweepResult,
    minimize_total_bandwidth,
    single_hop_equal_power,
    sweep_rate_bandwidth,
)

logger = logging.getLogger("backhaul_planner")


def pathloss_service(model, d_m: float, fc_ghz: float) -> PathLossResponse:
    try:
        loss = path_loss_db(model, d_m, fc_ghz)
    except PlannerError as e:
        raise HTTPException(status_code=400, detail=str(e))
    return PathLossResponse(model=model, distance_m=d_m, fc_ghz=fc_ghz, path_loss_db=loss)


def gain_service(n_h: int, n_v: int, element_gain_dbi: float, asd_deg: float, zsd_deg: float) -> GainResponse:
    try:
        array = ArrayConfig(n_h=n_h, n_v=n_v, element_gain_dbi=element_gain_dbi)
        gain = effective_gain(array, AngularSpread.from_degrees(asd_deg, zsd_deg))
    except (PlannerError, ValueError) as e:
        raise HTTPException(status_code=400, detail=str(e))
    return GainResponse(
        n_h=n_h,
        n_v=n_v,
        asd_deg=asd_deg,
        zsd_deg=zsd_deg,
        max_gain_dbi=array.max_gain_dbi,
        effective_gain_dbi=gain,
        degradation_db=array.max_gain_dbi - gain,
    )


def plan_service(request: PlanRequest) -> SolveReport:
    r_star = request.r_star_bps or request.scenario.r_star_bps
    try:
        scenario = request.scenario.to_scenario()
        if request.equal_power:
            if request.topology is not TopologyKind.SINGLE_HOP:
                raise HTTPException(status_code=400, detail="Equal power split is only defined for single-hop")
            return single_hop_equal_power(scenario, r_star)
        if request.topology is TopologyKind.CUSTOM:
            topology = Topology.custom(request.links or [])
        else:
            topology = Topology(kind=request.topology)
        method = {
            TopologyKind.SINGLE_HOP: PlanMethod.SINGLE_HOP,
            TopologyKind.NEAREST_NEIGHBOR: PlanMethod.NEAREST_NEIGHBOR,
        }.get(request.topology, PlanMethod.OPTIMAL)
        return minimize_total_bandwidth(scenario, topology, r_star, seed=request.seed, method=method)
    except PlannerError as e:
        raise HTTPException(status_code=400, detail=str(e))


def sweep_service(request: SweepRequest) -> SweepResult:
    methods = request.methods or request.scenario.methods
    grid = request.r_star_grid_bps or request.scenario.r_star_grid_bps or [request.scenario.r_star_bps]
    try:
        scenario = request.scenario.to_scenario()
        return sweep_rate_bandwidth(scenario, methods, grid, seed=request.seed)
    except PlannerError as e:
        raise HTTPException(status_code=400, detail=str(e))


def presets_service() -> list[str]:
    return preset_names()


def preset_service(name: str):
    try:
        return get_preset(name)
    except ScenarioConfigError as e:
        raise HTTPException(status_code=404, detail=str(e))
