import io
import logging
from pathlib import Path

from dotenv.parser import parse_stream
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from services.beam import AngularSpread, ArrayConfig
from services.channel import PathLossModel
from services.exceptions import DomainError, ScenarioConfigError
from services.netgraph import NetworkScenario, build_linear_scenario
from services.rate import RateKind, RateModel
from services.solver import PlanMethod

logger = logging.getLogger("backhaul_planner.config")

_LIST_FIELDS = ("relay_positions_m", "access_ranges_m", "user_weights", "r_star_grid_bps", "methods")


# Define the scenario file model; every physical key carries its unit
class ScenarioConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    n_relays: int = Field(default=4, ge=0)
    spacing_m: float = Field(default=200.0, gt=0)
    relay_positions_m: list[float] | None = None
    access_range_m: float = Field(default=100.0, gt=0)
    access_ranges_m: list[float] | None = None
    pathloss_model: PathLossModel = PathLossModel.UMA_NLOS
    fc_ghz: float = Field(default=28.0, gt=0)
    backhaul_gain_dbi: float = 50.0
    access_gain_dbi: float = 25.0
    pb_w: float = Field(default=1.0, gt=0)
    pa_w: float = Field(default=1.0, gt=0)
    noise_figure_db: float = 9.0
    access_reuse: int = Field(default=2, ge=1)
    user_weights: list[float] | None = None
    tx_height_m: float = Field(default=10.0, ge=0)
    rx_height_m: float = Field(default=1.5, ge=0)

    rate_model: RateKind = RateKind.IDEAL
    coherence_length: float | None = None
    coherence_bandwidth_hz: float | None = None
    coherence_time_s: float | None = None

    # Arrays: when tx_n_h is set, gains and power budgets come from the arrays
    tx_n_h: int | None = Field(default=None, ge=1)
    tx_n_v: int | None = Field(default=None, ge=1)
    tx_element_gain_dbi: float = 8.0
    tx_element_power_dbm: float | None = None
    rx_n_h: int = Field(default=1, ge=1)
    rx_n_v: int = Field(default=1, ge=1)
    rx_element_gain_dbi: float = 5.0
    asd_deg: float = Field(default=0.0, ge=0)
    zsd_deg: float = Field(default=0.0, ge=0)

    r_star_bps: float = Field(default=1e9, gt=0)
    r_star_grid_bps: list[float] = Field(default_factory=list)
    methods: list[PlanMethod] = Field(default_factory=lambda: [PlanMethod.OPTIMAL])

    @field_validator(*_LIST_FIELDS, mode="before")
    @classmethod
    def split_comma_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(",") if item.strip()]
        return value

    def rate(self) -> RateModel:
        if self.rate_model is RateKind.IDEAL:
            return RateModel.ideal()
        if self.coherence_length is not None:
            return RateModel.pilot_penalized(self.coherence_length)
        if self.coherence_bandwidth_hz is None or self.coherence_time_s is None:
            raise DomainError("pilot-penalized rate needs coherence_length or coherence_bandwidth_hz and coherence_time_s")
        return RateModel.from_coherence(self.coherence_bandwidth_hz, self.coherence_time_s)

    def to_scenario(self) -> NetworkScenario:
        arrays = {}
        if self.tx_n_h is not None:
            arrays = dict(
                tx_array=ArrayConfig(
                    n_h=self.tx_n_h,
                    n_v=self.tx_n_v or self.tx_n_h,
                    element_gain_dbi=self.tx_element_gain_dbi,
                    per_element_power_dbm=self.tx_element_power_dbm,
                ),
                rx_array=ArrayConfig(n_h=self.rx_n_h, n_v=self.rx_n_v, element_gain_dbi=self.rx_element_gain_dbi),
                spread=AngularSpread.from_degrees(self.asd_deg, self.zsd_deg),
            )
        return build_linear_scenario(
            n_relays=self.n_relays,
            relay_spacing_m=self.spacing_m,
            relay_positions_m=tuple(self.relay_positions_m) if self.relay_positions_m else None,
            access_range_m=self.access_range_m,
            access_ranges_m=tuple(self.access_ranges_m) if self.access_ranges_m else None,
            pathloss_model=self.pathloss_model,
            fc_ghz=self.fc_ghz,
            backhaul_joint_gain_dbi=self.backhaul_gain_dbi,
            access_joint_gain_dbi=self.access_gain_dbi,
            pb_w=self.pb_w,
            pa_w=self.pa_w,
            noise_figure_db=self.noise_figure_db,
            rate_model=self.rate(),
            access_reuse=self.access_reuse,
            user_weights=tuple(self.user_weights) if self.user_weights else None,
            tx_height_m=self.tx_height_m,
            rx_height_m=self.rx_height_m,
            **arrays,
        )

    def dump(self) -> str:
        """Render as a scenario file that parses back to the same configuration."""
        lines = []
        for key, value in self.model_dump(mode="json", exclude_none=True).items():
            if isinstance(value, list):
                value = ",".join(str(item) for item in value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"


def _validate(data: dict, lines: dict[str, int | None]) -> ScenarioConfig:
    try:
        return ScenarioConfig.model_validate(data)
    except ValidationError as e:
        error = e.errors()[0]
        key = str(error["loc"][0]) if error["loc"] else None
        message = f"{key}: {error['msg']}" if key else error["msg"]
        raise ScenarioConfigError(message, line=lines.get(key)) from e


def _binding_line(binding) -> int:
    # a binding starts at the blank lines before it; count them off
    text = binding.original.string
    leading = text[: len(text) - len(text.lstrip())]
    return binding.original.line + leading.count("\n")


def parse_scenario_text(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """
    Parse key=value scenario text on top of base (the default road when omitted).

    Errors name the line of the offending key.
    """
    data = base.model_dump(exclude_unset=True) if base else {}
    lines: dict[str, int | None] = {}
    for binding in parse_stream(io.StringIO(text)):
        line = _binding_line(binding)
        if binding.error:
            raise ScenarioConfigError(f"cannot parse {binding.original.string.strip()!r}", line=line)
        if binding.key is None:
            continue
        if binding.key in lines:
            raise ScenarioConfigError(f"{binding.key} is set twice", line=line)
        data[binding.key] = binding.value if binding.value is not None else ""
        lines[binding.key] = line
    return _validate(data, lines)


def apply_overrides(config: ScenarioConfig, overrides) -> ScenarioConfig:
    """Apply command-line key=value pairs on top of a configuration."""
    data = config.model_dump(exclude_unset=True)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ScenarioConfigError(f"expected key=value, got {item!r}")
        data[key.strip()] = value.strip()
    return _validate(data, {})


def load_scenario(path: str | Path | None = None, preset: str | None = None, overrides=()) -> ScenarioConfig:
    from config.presets import get_preset

    config = get_preset(preset) if preset else ScenarioConfig()
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ScenarioConfigError(f"cannot read {path}: {e.strerror}") from e
        config = parse_scenario_text(text, base=config)
        logger.info(f"Loaded scenario file {path}")
    if overrides:
        config = apply_overrides(config, overrides)
    return config
