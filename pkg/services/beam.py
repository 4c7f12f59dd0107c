import math

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from services.channel import db_to_linear, dbm_to_watts, linear_to_db
from services.exceptions import DomainError, ModelValidityError

# The Gaussian beam model holds for beams narrower than this
MAX_BEAMWIDTH_RAD = math.pi / 2


class ArrayConfig(BaseModel):
    """A planar array of n_h x n_v identical elements."""

    model_config = ConfigDict(frozen=True)

    n_h: int = Field(ge=1)
    n_v: int = Field(ge=1)
    element_gain_dbi: float
    per_element_power_dbm: float | None = None

    @property
    def n_elements(self) -> int:
        return self.n_h * self.n_v

    @property
    def max_gain_linear(self) -> float:
        return self.n_elements * db_to_linear(self.element_gain_dbi)

    @property
    def max_gain_dbi(self) -> float:
        return linear_to_db(self.max_gain_linear)

    @property
    def total_power_w(self) -> float:
        if self.per_element_power_dbm is None:
            raise DomainError("Array has no per-element power")
        return self.n_elements * dbm_to_watts(self.per_element_power_dbm)


class AngularSpread(BaseModel):
    """RMS departure spreads in radians: azimuth (ASD) and zenith (ZSD)."""

    model_config = ConfigDict(frozen=True)

    asd: float = Field(default=0.0, ge=0)
    zsd: float = Field(default=0.0, ge=0)

    @classmethod
    def from_degrees(cls, asd_deg: float, zsd_deg: float) -> "AngularSpread":
        return cls(asd=math.radians(asd_deg), zsd=math.radians(zsd_deg))


def gaussian_pattern(phi, theta, B_h: float, B_v: float):
    """Linear gain of a Gaussian beam with RMS beamwidths B_h, B_v at angles (phi, theta)."""
    if not (B_h > 0 and B_v > 0):
        raise DomainError("Beamwidths must be positive")
    return (
        2.0
        / (B_h * B_v)
        * np.exp(-np.square(phi) / (2 * B_h**2))
        * np.exp(-np.square(theta) / (2 * B_v**2))
    )


def _check_beamwidths(B_h: float, B_v: float) -> None:
    if B_h > MAX_BEAMWIDTH_RAD or B_v > MAX_BEAMWIDTH_RAD:
        raise ModelValidityError(
            f"Beamwidths ({math.degrees(B_h):.1f} deg, {math.degrees(B_v):.1f} deg) exceed the "
            f"{math.degrees(MAX_BEAMWIDTH_RAD):.0f} deg limit of the Gaussian beam model"
        )


def nominal_beamwidths(cfg: ArrayConfig) -> tuple[float, float]:
    """
    RMS beamwidths (B_h0, B_v0) of the array without scattering.

    Their product is fixed by the peak gain, 2 / (N * G_e); each dimension's
    beamwidth is inversely proportional to its element count.
    """
    product = 2.0 / cfg.max_gain_linear
    B_h0 = math.sqrt(product * cfg.n_v / cfg.n_h)
    B_v0 = math.sqrt(product * cfg.n_h / cfg.n_v)
    _check_beamwidths(B_h0, B_v0)
    return B_h0, B_v0


def effective_beamwidths(cfg: ArrayConfig, spread: AngularSpread) -> tuple[float, float]:
    B_h0, B_v0 = nominal_beamwidths(cfg)
    B_h = math.hypot(B_h0, spread.asd)
    B_v = math.hypot(B_v0, spread.zsd)
    _check_beamwidths(B_h, B_v)
    return B_h, B_v


def effective_gain(cfg: ArrayConfig, spread: AngularSpread) -> float:
    """Peak gain in dBi after the beam is convolved with the channel's angular spectrum."""
    if spread.asd == 0 and spread.zsd == 0:
        nominal_beamwidths(cfg)
        return cfg.max_gain_dbi
    B_h, B_v = effective_beamwidths(cfg, spread)
    return linear_to_db(2.0 / (B_h * B_v))


def array_link_gain(tx: ArrayConfig, rx: ArrayConfig, spread: AngularSpread) -> tuple[float, float]:
    """
    Joint gain (dBi) and total transmit power (W) of a link between two arrays.

    The spread is applied at departure only; the receive array contributes its
    full gain.
    """
    joint_gain = effective_gain(tx, spread) + rx.max_gain_dbi
    return joint_gain, tx.total_power_w
