from fastapi import FastAPI
import logging

from config.presets import PRESETS
from config.settings import settings
from services.rate import RateModel, rate_curve

logger = logging.getLogger("backhaul_planner")

# job of this code is to ensure that
# 1) the solver settings are sane and logged
# 2) the rate curves of every preset are tabulated before the first request
# 3) every preset still builds a valid scenario


async def startup_event(app: FastAPI):
    """
    Startup event for warming caches and validating presets.
    """
    logger.info(
        f"Solver: tolerance {settings.solver_tolerance:g}, {settings.solver_starts} starts, "
        f"seed {settings.solver_seed}, {settings.sweep_workers} sweep worker(s)"
    )

    # Tabulate rate curves; the pilot-penalized ones take a moment each
    rate_curve(RateModel.ideal())
    for name, preset in PRESETS.items():
        try:
            scenario = preset.to_scenario()
            rate_curve(scenario.rate_model)
            logger.info(f"Preset '{name}' ready ({scenario.pathloss_model.value}, {scenario.n_relays} relays).")
        except Exception as e:
            logger.error(f"Preset '{name}' is invalid: {e}")
            raise
