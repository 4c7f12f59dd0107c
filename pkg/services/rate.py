import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.interpolate import PchipInterpolator
from scipy.optimize import bisect
from scipy.special import lambertw

from services.channel import LinkBudget, snr_linear
from services.exceptions import DomainError
from services.numerics import golden_section_max, golden_section_max_vec

logger = logging.getLogger("backhaul_planner.rate")

LN2 = math.log(2.0)

# Bandwidth inversion is relative; the absolute floor only guards a zero root
BANDWIDTH_XTOL_HZ = 1e-9
BANDWIDTH_RTOL = 1e-12


class RateKind(str, Enum):
    IDEAL = "ideal"
    PILOT_PENALIZED = "pilot-penalized"


class RateModel(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: RateKind = RateKind.IDEAL
    # symbols per independent channel coefficient, L_c = B_c * T_c
    coherence_length: float | None = None

    @model_validator(mode="after")
    def check_coherence_length(self) -> "RateModel":
        if self.kind is RateKind.PILOT_PENALIZED:
            if self.coherence_length is None or not self.coherence_length > 1:
                raise ValueError("pilot-penalized rate needs a coherence length greater than 1")
        return self

    @classmethod
    def ideal(cls) -> "RateModel":
        return cls(kind=RateKind.IDEAL)

    @classmethod
    def pilot_penalized(cls, coherence_length: float) -> "RateModel":
        return cls(kind=RateKind.PILOT_PENALIZED, coherence_length=coherence_length)

    @classmethod
    def from_coherence(cls, coherence_bandwidth_hz: float, coherence_time_s: float) -> "RateModel":
        return cls.pilot_penalized(coherence_bandwidth_hz * coherence_time_s)


@dataclass(frozen=True)
class Infeasible:
    """A target rate above what the link can ever deliver."""

    target_bps: float
    ceiling_bps: float


# --- spectral efficiencies as functions of SNR (vectorized) ---


def shannon_efficiency(snr):
    return np.log1p(snr) / LN2


def pilot_efficiency(snr, alpha, coherence_length):
    """Bits/s/Hz left after spending a fraction alpha of the symbols on MMSE pilots."""
    pilots = alpha * coherence_length
    effective_snr = pilots * snr**2 / (1.0 + snr + pilots * snr)
    return (1.0 - alpha) * np.log1p(effective_snr) / LN2


def optimal_pilot_ratio(snr: float, coherence_length: float) -> tuple[float, float]:
    """Maximize pilot_efficiency over alpha in (0, 1); returns (alpha*, efficiency)."""
    if snr <= 0:
        return 0.5, 0.0
    return golden_section_max(lambda a: float(pilot_efficiency(snr, a, coherence_length)), 0.0, 1.0)


# --- rate operations on a link budget ---


def ideal_rate(budget: LinkBudget, W: float) -> float:
    """AWGN capacity W*log2(1 + SNR(W)) in bits/s."""
    return float(W * shannon_efficiency(snr_linear(budget, W)))


def penalized_rate(budget: LinkBudget, W: float, alpha: float, model: RateModel) -> float:
    if model.kind is not RateKind.PILOT_PENALIZED:
        raise DomainError("penalized_rate needs a pilot-penalized rate model")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"Pilot ratio must lie in (0, 1), got {alpha}")
    return float(W * pilot_efficiency(snr_linear(budget, W), alpha, model.coherence_length))


def optimal_pilot_rate(budget: LinkBudget, W: float, model: RateModel) -> tuple[float, float]:
    """Best rate over the pilot ratio; returns (bits/s, alpha*)."""
    if model.kind is not RateKind.PILOT_PENALIZED:
        raise DomainError("optimal_pilot_rate needs a pilot-penalized rate model")
    snr = snr_linear(budget, W)
    alpha, efficiency = optimal_pilot_ratio(snr, model.coherence_length)
    return W * efficiency, alpha


def achievable_rate(budget: LinkBudget, W: float, model: RateModel) -> float:
    """The per-link rate function f(W, P) of the chosen rate model; zero bandwidth carries nothing."""
    if W <= 0:
        return 0.0
    if model.kind is RateKind.IDEAL:
        return ideal_rate(budget, W)
    return optimal_pilot_rate(budget, W, model)[0]


def rate_ceiling(budget: LinkBudget, model: RateModel) -> float:
    """Supremum of the rate over all bandwidths (the power-limited asymptote for the ideal model)."""
    return budget.snr_bandwidth_hz * rate_curve(model).peak_rate


def required_bandwidth(target: float, budget: LinkBudget, model: RateModel) -> float | Infeasible:
    """
    Smallest bandwidth whose rate reaches target, by bracketed bisection.

    Only the increasing branch of the rate-bandwidth curve is searched. For
    the pilot-penalized model the curve peaks at a finite bandwidth, which is
    located first and used as the right end of the bracket.
    """
    if not target > 0:
        raise DomainError(f"Target rate must be positive, got {target}")
    curve = rate_curve(model)
    snr_bandwidth = budget.snr_bandwidth_hz

    def shortfall(W: float) -> float:
        return achievable_rate(budget, W, model) - target

    if model.kind is RateKind.IDEAL:
        ceiling = snr_bandwidth * curve.peak_rate
        if target >= ceiling:
            return Infeasible(target, ceiling)
        hi = max(snr_bandwidth * curve.bandwidth(target / snr_bandwidth), 1.0)
        for _ in range(200):
            if shortfall(hi) >= 0:
                break
            hi *= 2.0
    else:
        hi = snr_bandwidth * curve.peak_bandwidth
        ceiling = achievable_rate(budget, hi, model)
        if target > ceiling:
            return Infeasible(target, ceiling)

    if shortfall(hi) < 0:
        return Infeasible(target, target + shortfall(hi))
    return bisect(shortfall, 0.0, hi, xtol=BANDWIDTH_XTOL_HZ, rtol=BANDWIDTH_RTOL, maxiter=400)


# --- normalized rate curves used by the vectorized solver ---
#
# With c = received power / N0 (Hz), every rate model satisfies
# rate(W) = c * h(W / c). Inverting h on its increasing branch gives the
# required bandwidth of a whole vector of links at once: W = c * omega(R / c).


class IdealCurve:
    peak_rate = 1.0 / LN2
    peak_bandwidth = math.inf

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        return u * shannon_efficiency(1.0 / u)

    def bandwidth(self, k):
        k = np.asarray(k, dtype=float)
        q = np.clip(k * LN2, 1e-300, None)
        inside = (k > 0) & (q < 1.0)
        branch = lambertw(-q * np.exp(-q), -1).real
        y = -branch / q
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(inside, 1.0 / (y - 1.0), np.where(k <= 0, 0.0, np.inf))
        return u

    def bandwidth_slope(self, k):
        u = self.bandwidth(k)
        with np.errstate(divide="ignore", invalid="ignore"):
            slope_h = np.log1p(1.0 / u) / LN2 - 1.0 / ((1.0 + u) * LN2)
            slope = np.where(u > 0, 1.0 / slope_h, 0.0)
        return np.where(np.isfinite(u), slope, np.inf)


class PilotCurve:
    """Tabulated normalized curve of the pilot-optimized rate for one coherence length."""

    def __init__(self, coherence_length: float, points: int = 4201):
        self.coherence_length = coherence_length
        u = np.logspace(-12, 9, points)
        h = self.rate(u)
        peak = int(np.argmax(h))
        lo = math.log(u[max(peak - 1, 0)])
        hi = math.log(u[min(peak + 1, u.size - 1)])
        log_peak, peak_rate = golden_section_max(lambda t: float(self.rate(math.exp(t))), lo, hi)
        self.peak_bandwidth = math.exp(log_peak)
        self.peak_rate = peak_rate

        branch_u = np.append(u[:peak], self.peak_bandwidth)
        branch_k = np.append(h[:peak], peak_rate)
        running = np.maximum.accumulate(branch_k)
        keep = np.concatenate(([True], branch_k[1:] > running[:-1]))
        self._log_u = np.log(branch_u[keep])
        self._log_k = np.log(branch_k[keep])
        self._k_min = branch_k[keep][0]
        self._u_min = branch_u[keep][0]
        self._inverse = PchipInterpolator(self._log_k, self._log_u, extrapolate=False)
        self._inverse_slope = self._inverse.derivative()
        logger.debug(
            f"Pilot curve for L_c={coherence_length:g}: peak {peak_rate:.4f} at u={self.peak_bandwidth:.4g}"
        )

    def rate(self, u):
        u = np.asarray(u, dtype=float)
        snr = 1.0 / u
        lo = np.full(u.shape, 0.0)
        hi = np.full(u.shape, 1.0)
        _, efficiency = golden_section_max_vec(
            lambda a: pilot_efficiency(snr, a, self.coherence_length), lo, hi
        )
        return u * efficiency

    def bandwidth(self, k):
        k = np.asarray(k, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            tabulated = np.exp(self._inverse(np.log(np.clip(k, self._k_min, self.peak_rate))))
        u = np.where(k < self._k_min, k * self._u_min / self._k_min, tabulated)
        u = np.where(k <= 0, 0.0, u)
        return np.where(k >= self.peak_rate, np.inf, u)

    def bandwidth_slope(self, k):
        k = np.asarray(k, dtype=float)
        clipped = np.clip(k, self._k_min, self.peak_rate)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.exp(self._inverse(np.log(clipped)))
            slope = u / clipped * self._inverse_slope(np.log(clipped))
        slope = np.where(k < self._k_min, self._u_min / self._k_min, slope)
        return np.where(k >= self.peak_rate, np.inf, slope)


@lru_cache(maxsize=32)
def _curve(kind: RateKind, coherence_length: float | None):
    if kind is RateKind.IDEAL:
        return IdealCurve()
    return PilotCurve(coherence_length)


def rate_curve(model: RateModel):
    return _curve(model.kind, model.coherence_length)
