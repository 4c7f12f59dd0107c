import math
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field

from services.exceptions import DomainError

# Thermal noise power spectral density at room temperature
THERMAL_NOISE_DBM_HZ = -174.0
# Path-loss models are referenced to 1 m
REFERENCE_DISTANCE_M = 1.0


class PathLossModel(str, Enum):
    LOS_PLUS_25 = "los-plus-25"
    UMA_NLOS = "uma-nlos"
    UMI_NLOS = "umi-nlos"
    UMI_STREET = "umi-street"


# (distance coefficient, frequency coefficient, constant) of each closed form
_COEFFICIENTS = {
    # free space at 1 m is 20*log10(4*pi/0.3) for fc in GHz, plus 25 dB of blockage
    PathLossModel.LOS_PLUS_25: (20.0, 20.0, 20.0 * math.log10(4 * math.pi / 0.3) + 25.0),
    PathLossModel.UMA_NLOS: (34.0, 23.0, 19.2),
    PathLossModel.UMI_NLOS: (36.7, 26.0, 22.7),
    PathLossModel.UMI_STREET: (35.3, 21.3, 22.4),
}


def path_loss_db(model: PathLossModel, d: float | np.ndarray, fc: float) -> float | np.ndarray:
    """
    Path loss in dB of one of the four propagation models.

    d is the link distance in meters (the 3D distance for UMI_STREET) and fc
    the carrier frequency in GHz. Distances below the 1 m reference are
    rejected rather than extrapolated.
    """
    model = PathLossModel(model)
    distance = np.asarray(d, dtype=float)
    if np.any(~np.isfinite(distance)) or np.any(distance < REFERENCE_DISTANCE_M):
        raise DomainError(f"Distance must be at least {REFERENCE_DISTANCE_M} m, got {d}")
    if not fc > 0:
        raise DomainError(f"Carrier frequency must be positive, got {fc} GHz")
    a, b, c = _COEFFICIENTS[model]
    loss = a * np.log10(distance) + b * math.log10(fc) + c
    return float(loss) if loss.ndim == 0 else loss


def distance_3d(horizontal_m: float, tx_height_m: float, rx_height_m: float) -> float:
    return math.hypot(horizontal_m, tx_height_m - rx_height_m)


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def linear_to_db(value: float) -> float:
    return 10.0 * math.log10(value)


def dbm_to_watts(value_dbm: float) -> float:
    return 10.0 ** ((value_dbm - 30.0) / 10.0)


def noise_psd_dbm_hz(noise_figure_db: float) -> float:
    return THERMAL_NOISE_DBM_HZ + noise_figure_db


class LinkBudget(BaseModel):
    """Everything needed to turn a bandwidth into an SNR on one link."""

    model_config = ConfigDict(frozen=True)

    tx_power_w: float = Field(gt=0)
    joint_gain_dbi: float
    path_loss_db: float
    noise_figure_db: float = 9.0
    distance_m: float = Field(default=REFERENCE_DISTANCE_M, ge=REFERENCE_DISTANCE_M)

    @computed_field
    @property
    def noise_psd_dbm_hz(self) -> float:
        return noise_psd_dbm_hz(self.noise_figure_db)

    @property
    def noise_psd_w_hz(self) -> float:
        return dbm_to_watts(self.noise_psd_dbm_hz)

    @property
    def channel_gain(self) -> float:
        """Linear power gain of the link: joint antenna gain over path loss."""
        return 10.0 ** ((self.joint_gain_dbi - self.path_loss_db) / 10.0)

    @property
    def received_power_w(self) -> float:
        return self.tx_power_w * self.channel_gain

    @property
    def snr_per_watt_hz(self) -> float:
        """SNR-bandwidth product delivered per transmitted watt, in Hz/W."""
        return self.channel_gain / self.noise_psd_w_hz

    @property
    def snr_bandwidth_hz(self) -> float:
        """Received power over noise PSD: the SNR the link would have in 1 Hz."""
        return self.tx_power_w * self.snr_per_watt_hz

    def with_power(self, tx_power_w: float) -> "LinkBudget":
        return self.model_copy(update={"tx_power_w": tx_power_w})


def link_budget(
    model: PathLossModel,
    distance_m: float,
    fc_ghz: float,
    tx_power_w: float,
    joint_gain_dbi: float,
    noise_figure_db: float = 9.0,
) -> LinkBudget:
    return LinkBudget(
        tx_power_w=tx_power_w,
        joint_gain_dbi=joint_gain_dbi,
        path_loss_db=path_loss_db(model, distance_m, fc_ghz),
        noise_figure_db=noise_figure_db,
        distance_m=distance_m,
    )


def snr_linear(budget: LinkBudget, W: float | np.ndarray) -> float | np.ndarray:
    """Linear SNR of the link when the received power is spread over W Hz."""
    bandwidth = np.asarray(W, dtype=float)
    if np.any(bandwidth <= 0):
        raise DomainError(f"Bandwidth must be positive, got {W}")
    snr = budget.snr_bandwidth_hz / bandwidth
    return float(snr) if snr.ndim == 0 else snr
