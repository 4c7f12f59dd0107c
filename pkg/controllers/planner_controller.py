import logging

from fastapi import APIRouter, HTTPException, Query

from config.scenario_file import ScenarioConfig
from services.channel import PathLossModel
from services.solver import SolveReport, SweepResult
from .planner_service import (
    gain_service,
    pathloss_service,
    plan_service,
    preset_service,
    presets_service,
    sweep_service,
)
from .schema import GainResponse, PathLossResponse, PlanRequest, PresetList, SweepRequest

logger = logging.getLogger("backhaul_planner")

router = APIRouter()


# Define a GET endpoint for path loss
@router.get("/pathloss", response_model=PathLossResponse)
def pathloss(model: PathLossModel, d_m: float = Query(gt=0), fc_ghz: float = Query(default=28.0, gt=0)):
    return pathloss_service(model, d_m, fc_ghz)


# Define a GET endpoint for the effective array gain under angular spread
@router.get("/gain", response_model=GainResponse)
def gain(
    n_h: int = Query(ge=1),
    n_v: int = Query(ge=1),
    element_gain_dbi: float = 8.0,
    asd_deg: float = Query(default=0.0, ge=0),
    zsd_deg: float = Query(default=0.0, ge=0),
):
    return gain_service(n_h, n_v, element_gain_dbi, asd_deg, zsd_deg)


# Define a POST endpoint for planning one target rate
@router.post("/plan", response_model=SolveReport)
def plan(request: PlanRequest):
    try:
        # Delegate the functionality to the service layer
        return plan_service(request)
    except HTTPException:
        raise
    except Exception as e:
        logger.exception(f"Planning failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))


# Define a POST endpoint for rate sweeps
@router.post("/sweep", response_model=SweepResult)
def sweep(request: SweepRequest):
    try:
        return sweep_service(request)
    except HTTPException:
        raise
    except Exception as e:
        logger.exception(f"Sweep failed: {e}")
        raise HTTPException(status_code=500, detail=str(e))


@router.get("/presets", response_model=PresetList)
def presets():
    return {"presets": presets_service()}


@router.get("/presets/{name}", response_model=ScenarioConfig)
def preset(name: str):
    return preset_service(name)
