from pydantic import ConfigDict, field_validator
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    # Solver stopping rules, relative to the normalized objective
    solver_tolerance: float = 1e-6
    solver_max_iterations: int = 4000
    solver_starts: int = 8
    solver_seed: int = 2017

    # Links narrower than this are reported as pruned from the topology
    active_link_threshold_hz: float = 1e3

    sweep_workers: int = 1
    log_level: str = "INFO"
    max_full_connectivity_relays: int = 10

    model_config = ConfigDict(env_file=".env", extra="allow")

    @field_validator("solver_starts")
    @classmethod
    def at_least_eight_starts(cls, value: int) -> int:
        if value < 8:
            raise ValueError("solver_starts must be at least 8")
        return value

    @field_validator("solver_tolerance")
    @classmethod
    def positive_tolerance(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("solver_tolerance must be positive")
        return value


settings = Settings()
