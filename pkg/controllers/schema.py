from pydantic import BaseModel, Field

from config.scenario_file import ScenarioConfig
from services.channel import PathLossModel
from services.netgraph import TopologyKind
from services.solver import PlanMethod


# Define the PathLossResponse model
class PathLossResponse(BaseModel):
    model: PathLossModel
    distance_m: float
    fc_ghz: float
    path_loss_db: float


# Define the GainResponse model
class GainResponse(BaseModel):
    n_h: int
    n_v: int
    asd_deg: float
    zsd_deg: float
    max_gain_dbi: float
    effective_gain_dbi: float
    degradation_db: float


# Define the PlanRequest model
class PlanRequest(BaseModel):
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    r_star_bps: float | None = Field(default=None, gt=0)
    topology: TopologyKind = TopologyKind.FULL_CONNECTIVITY
    links: list[tuple[int, int]] | None = None
    equal_power: bool = False
    seed: int | None = None


# Define the SweepRequest model
class SweepRequest(BaseModel):
    scenario: ScenarioConfig = Field(default_factory=ScenarioConfig)
    methods: list[PlanMethod] | None = None
    r_star_grid_bps: list[float] | None = None
    seed: int | None = None


# Define the PresetList model
class PresetList(BaseModel):
    presets: list[str]
