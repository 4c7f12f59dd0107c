import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from itertools import product
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field
from scipy.optimize import linprog

from config.settings import settings
from services.channel import link_budget
from services.exceptions import DomainError, PlannerError, ProblemSizeError
from services.netgraph import (
    FlowSystem,
    LinkKind,
    NetworkScenario,
    Topology,
    TopologyKind,
    access_band_partition,
    access_bandwidth,
    enumerate_paths,
    flow_system,
    link_budgets,
)
from services.numerics import project_capped_simplex, project_simplex, simplex_grid
from services.rate import Infeasible, achievable_rate, rate_ceiling, rate_curve, required_bandwidth

logger = logging.getLogger("backhaul_planner.solver")

# Oracle grids stay tractable up to two relays (five links)
ORACLE_MAX_RELAYS = 2
# Path flows below this share of a user's demand are treated as unused
NEGLIGIBLE_SHARE = 1e-10
ARMIJO_SLOPE = 1e-4
BARRIER_STAGES = (1e-3, 1e-5, 1e-7, 1e-9)


class SolveStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    TOLERANCE_NOT_MET = "tolerance-not-met"


class PlanMethod(str, Enum):
    OPTIMAL = "optimal"
    SINGLE_HOP = "single-hop"
    SINGLE_HOP_EQUAL = "single-hop-equal"
    NEAREST_NEIGHBOR = "nearest-neighbor"
    DIRECT = "direct"


# Define the residuals model
class Residuals(BaseModel):
    flow: float = 0.0
    power: float = 0.0
    rate: float = 0.0

    def worst(self) -> float:
        return max(self.flow, self.power, self.rate)


# Define the allocation model
class Allocation(BaseModel):
    links: list[str]
    W: list[float]
    P: list[float]
    R: list[float]
    objective_hz: float
    backhaul_hz: float
    access_hz: float
    residuals: Residuals = Field(default_factory=Residuals)
    # Oracle only: largest objective change to a neighbouring grid cell
    grid_cell_hz: float | None = None


# Define the solve report model
class SolveReport(BaseModel):
    method: PlanMethod
    status: SolveStatus
    r_star_bps: float
    allocation: Allocation | None = None
    active_topology: list[str] = Field(default_factory=list)
    iterations: int = 0
    wall_time_s: float = 0.0
    seeds: list[int] = Field(default_factory=list)
    message: str | None = None

    @property
    def objective_hz(self) -> float:
        return self.allocation.objective_hz if self.allocation else math.inf

    def to_document(self) -> str:
        return self.model_dump_json(indent=2)


def verify_allocation(scenario: NetworkScenario, system: FlowSystem, W, P, R) -> Residuals:
    """
    Re-check an allocation against the flow and power systems and the rate model.

    Works from the scenario's link budgets alone, so it shares no state with
    whatever produced the allocation.
    """
    W, P, R = (np.asarray(v, dtype=float) for v in (W, P, R))
    budgets = link_budgets(scenario, system.link_index)
    rate_error = 0.0
    for w, p, r, budget in zip(W, P, R, budgets):
        if w > 0 and p > 0:
            delivered = achievable_rate(budget.with_power(p), w, scenario.rate_model)
            rate_error = max(rate_error, abs(r - delivered) / max(r, 1.0))
        elif r > 0:
            rate_error = max(rate_error, r / system.r_star_bps)
    return Residuals(
        flow=system.flow_residual(R),
        power=system.power_residual(P),
        rate=rate_error,
    )


# --- reduced problem over path flows and backhaul powers ---


@dataclass
class _ReducedProblem:
    """
    The planning problem with bandwidth eliminated.

    Variables z = (x, p): x holds each relay's traffic split over its paths
    from the base station, p each backhaul link's share of its transmitter's
    budget. Rates are normalized by R* so the objective is bandwidth over R*.
    """

    system: FlowSystem
    incidence: np.ndarray  # backhaul link x path
    path_demand: np.ndarray
    path_blocks: list[np.ndarray]
    power_blocks: list[np.ndarray]
    snr_capacity: np.ndarray  # c / R* of each backhaul link at full power
    kappa: np.ndarray  # normalized rate ceiling at full power
    curve: object
    # when set, routing is held here and only the power shares move
    fixed_x: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.incidence.shape[1]

    @property
    def size(self) -> int:
        return self.n_paths + self.incidence.shape[0]

    def split(self, z):
        return z[: self.n_paths], z[self.n_paths :]

    def rates(self, x):
        return self.incidence @ (x * self.path_demand)

    def bandwidths(self, r, p):
        c = p * self.snr_capacity
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(c > 0, r / np.where(c > 0, c, 1.0), np.where(r > 0, np.inf, 0.0))
        return c * self.curve.bandwidth(k), c, k

    def objective(self, z, mu: float) -> float:
        x, p = self.split(z)
        r = self.rates(x)
        slack = p - r / self.kappa
        if np.any(slack <= 0):
            return math.inf
        W, _, _ = self.bandwidths(r, p)
        if not np.all(np.isfinite(W)):
            return math.inf
        return float(W.sum() - mu * np.log(slack).sum())

    def gradient(self, z, mu: float):
        x, p = self.split(z)
        r = self.rates(x)
        slack = p - r / self.kappa
        W, c, k = self.bandwidths(r, p)
        omega = W / np.where(c > 0, c, 1.0)
        slope = self.curve.bandwidth_slope(k)
        grad_r = slope + mu / (slack * self.kappa)
        grad_p = (omega - k * slope) * self.snr_capacity - mu / slack
        if self.fixed_x is not None:
            grad_x = np.zeros(self.n_paths)
        else:
            grad_x = self.path_demand * (self.incidence.T @ grad_r)
        return np.concatenate([grad_x, grad_p])

    def project(self, z):
        out = np.empty_like(z)
        if self.fixed_x is not None:
            out[: self.n_paths] = self.fixed_x
        else:
            for block in self.path_blocks:
                out[block] = project_simplex(z[block], 1.0)
        for block in self.power_blocks:
            out[block] = project_capped_simplex(z[block], 1.0)
        return out

    def interior_power(self, x):
        """Power floor of every link plus an equal share of each transmitter's leftover budget."""
        floor = self.rates(x) / self.kappa
        p = np.empty_like(floor)
        offset = self.n_paths
        for block in self.power_blocks:
            local = block - offset
            leftover = 1.0 - floor[local].sum()
            if leftover <= 0:
                return None
            p[local] = floor[local] + leftover / local.size
        return p


def _build_reduced(scenario: NetworkScenario, system: FlowSystem) -> _ReducedProblem:
    links = system.link_index
    backhaul = [j for j, link in enumerate(links) if link.kind is LinkKind.BACKHAUL]
    paths = enumerate_paths(scenario.n_relays, links)
    weights = scenario.weights

    flat_paths, demand, path_blocks = [], [], []
    for relay, relay_paths in enumerate(paths, start=1):
        start = len(flat_paths)
        flat_paths += relay_paths
        demand += [weights[relay]] * len(relay_paths)
        path_blocks.append(np.arange(start, len(flat_paths)))

    incidence = np.zeros((len(backhaul), len(flat_paths)))
    for i, columns in enumerate(flat_paths):
        # backhaul columns come first in the link index
        incidence[columns, i] = 1.0

    n_paths = len(flat_paths)
    power_blocks = []
    for src in sorted({links[j].src for j in backhaul}):
        power_blocks.append(np.array([n_paths + j for j in backhaul if links[j].src == src]))

    budgets = link_budgets(scenario, [links[j] for j in backhaul])
    snr_capacity = np.array([b.snr_bandwidth_hz for b in budgets]) / system.r_star_bps
    curve = rate_curve(scenario.rate_model)
    return _ReducedProblem(
        system=system,
        incidence=incidence,
        path_demand=np.array(demand, dtype=float),
        path_blocks=path_blocks,
        power_blocks=power_blocks,
        snr_capacity=snr_capacity,
        kappa=snr_capacity * curve.peak_rate,
        curve=curve,
    )


def _phase_one(problem: _ReducedProblem):
    """
    Most interior point of the feasible set by linear programming.

    Maximizes the smallest gap between a link's power share and the share its
    rate needs at the power-limited asymptote. Returns (z, gap).
    """
    n_paths, n_links = problem.n_paths, problem.incidence.shape[0]
    size = problem.size + 1
    cost = np.zeros(size)
    cost[-1] = -1.0

    A_eq = np.zeros((len(problem.path_blocks), size))
    for i, block in enumerate(problem.path_blocks):
        A_eq[i, block] = 1.0
    b_eq = np.ones(len(problem.path_blocks))

    rows, b_ub = [], []
    for block in problem.power_blocks:
        row = np.zeros(size)
        row[block] = 1.0
        rows.append(row)
        b_ub.append(1.0)
    for l in range(n_links):
        # r_l / kappa_l - p_l + s <= 0
        row = np.zeros(size)
        row[:n_paths] = problem.incidence[l] * problem.path_demand / problem.kappa[l]
        row[n_paths + l] = -1.0
        row[-1] = 1.0
        rows.append(row)
        b_ub.append(0.0)

    bounds = [(0.0, 1.0)] * problem.size + [(None, 1.0)]
    result = linprog(
        cost,
        A_ub=np.array(rows),
        b_ub=np.array(b_ub),
        A_eq=A_eq if len(b_eq) else None,
        b_eq=b_eq if len(b_eq) else None,
        bounds=bounds,
        method="highs",
    )
    if result.status != 0:
        raise PlannerError(f"Feasibility program failed: {result.message}")
    return result.x[:-1], float(result.x[-1])


def _starting_points(problem: _ReducedProblem, z_lp, n_starts: int, seed: int):
    x_lp = np.clip(problem.split(z_lp)[0], 0.0, 1.0)
    candidates = []
    uniform = np.zeros(problem.n_paths)
    for block in problem.path_blocks:
        uniform[block] = 1.0 / block.size
    candidates.append((seed, uniform))
    candidates.append((seed + 1, x_lp))
    for i in range(2, n_starts):
        rng = np.random.default_rng(seed + i)
        x = np.zeros(problem.n_paths)
        for block in problem.path_blocks:
            x[block] = rng.dirichlet(np.ones(block.size))
        candidates.append((seed + i, x))

    starts = []
    for start_seed, x in candidates:
        # pull the split toward the phase-one point until every transmitter has power to spare
        for t in (0.0, 0.5, 0.75, 0.9, 0.99, 1.0):
            blended = (1.0 - t) * x + t * x_lp
            p = problem.interior_power(blended)
            if p is not None:
                starts.append((start_seed, np.concatenate([blended, p])))
                break
    return starts


def _descend(problem: _ReducedProblem, z, tolerance: float, max_iterations: int):
    """
    Projected gradient descent with Barzilai-Borwein steps and Armijo backtracking,
    repeated over a decreasing barrier weight.

    Returns (z, objective without barrier, iterations, converged).
    """
    scale = max(problem.objective(z, 0.0), 1e-12)
    iterations = 0
    converged = False
    for weight in BARRIER_STAGES:
        mu = weight * scale / max(problem.incidence.shape[0], 1)
        F = problem.objective(z, mu)
        g = problem.gradient(z, mu)
        step = 1.0 / max(np.max(np.abs(g)), 1e-12)
        converged = False
        quiet = 0
        for _ in range(max_iterations):
            iterations += 1
            stationarity = np.max(np.abs(problem.project(z - g) - z), initial=0.0)
            if stationarity <= tolerance:
                converged = True
                break
            trial = step
            while True:
                z_new = problem.project(z - trial * g)
                F_new = problem.objective(z_new, mu)
                if F_new <= F + ARMIJO_SLOPE * g @ (z_new - z):
                    break
                trial *= 0.5
                if trial < 1e-20:
                    z_new = None
                    break
            if z_new is None:
                # no descent left at machine precision
                converged = True
                break
            g_new = problem.gradient(z_new, mu)
            s, y = z_new - z, g_new - g
            quiet = quiet + 1 if F - F_new <= tolerance * 1e-3 * abs(F) else 0
            z, F, g = z_new, F_new, g_new
            if quiet >= 10:
                converged = True
                break
            curvature = s @ y
            step = float(np.clip(s @ s / curvature, 1e-12, 1e12)) if curvature > 0 else trial * 2.0
    return z, problem.objective(z, 0.0), iterations, converged


def _drop_negligible(problem: _ReducedProblem, x):
    x = x.copy()
    for block in problem.path_blocks:
        x[block] = np.where(x[block] < NEGLIGIBLE_SHARE, 0.0, x[block])
        x[block] /= x[block].sum()
    return x


def _prune_paths(problem: _ReducedProblem, x, p, R_star: float):
    """
    Drop negligible path shares and every path that crosses a backhaul link
    thinner than the active-link threshold; each relay's split is renormalized.

    Returns (x, changed). A relay whose every path is thin keeps its split.
    """
    x = _drop_negligible(problem, x)
    r = problem.rates(x)
    W, _, _ = problem.bandwidths(r, p)
    thin = (r > 0) & (W * R_star < settings.active_link_threshold_hz)
    if not np.any(thin):
        return x, False
    crossing = problem.incidence[thin].sum(axis=0) > 0
    changed = False
    for block in problem.path_blocks:
        kept = np.where(crossing[block], 0.0, x[block])
        if kept.sum() <= 0 or np.array_equal(kept, x[block]):
            continue
        x[block] = kept / kept.sum()
        changed = True
    return x, changed


def _resolve_power(problem: _ReducedProblem, x, p, tolerance: float):
    """Re-optimize the power shares for a fixed routing. Returns (p, converged) or None."""
    fixed = replace(problem, fixed_x=x)
    z0 = np.concatenate([x, p])
    if not math.isfinite(fixed.objective(z0, 0.0)):
        interior = fixed.interior_power(x)
        if interior is None:
            return None
        z0 = np.concatenate([x, interior])
    z, _, _, converged = _descend(fixed, z0, tolerance, settings.solver_max_iterations)
    return fixed.split(z)[1], converged


def _access_allocation(scenario: NetworkScenario, system: FlowSystem):
    """Access links always use the full access budget; each carries its own user's demand."""
    W, P, R, failed = {}, {}, {}, []
    budgets = link_budgets(scenario, system.link_index)
    weights = scenario.weights
    for j in system.access_columns:
        link = system.link_index[j]
        target = weights[link.dst] * system.r_star_bps
        bandwidth = required_bandwidth(target, budgets[j], scenario.rate_model)
        if isinstance(bandwidth, Infeasible):
            failed.append(f"{link.label} (ceiling {bandwidth.ceiling_bps:.4g} bit/s)")
            continue
        W[j], P[j], R[j] = bandwidth, scenario.pa_w, target
    return W, P, R, failed


def _finish(
    method: PlanMethod,
    scenario: NetworkScenario,
    system: FlowSystem,
    W,
    P,
    R,
    started: float,
    iterations: int = 0,
    seeds=(),
    converged: bool = True,
    tolerance: float | None = None,
) -> SolveReport:
    tolerance = tolerance or settings.solver_tolerance
    W, P, R = (np.asarray(v, dtype=float) for v in (W, P, R))
    access = system.access_columns
    backhaul = system.backhaul_columns
    access_hz = access_bandwidth(W[access], access_band_partition(scenario))
    backhaul_hz = float(W[backhaul].sum()) if backhaul.size else 0.0
    residuals = verify_allocation(scenario, system, W, P, R)
    allocation = Allocation(
        links=system.labels,
        W=W.tolist(),
        P=P.tolist(),
        R=R.tolist(),
        objective_hz=backhaul_hz + access_hz,
        backhaul_hz=backhaul_hz,
        access_hz=access_hz,
        residuals=residuals,
    )
    active = [
        label for label, w in zip(system.labels, W) if w >= settings.active_link_threshold_hz
    ]
    status = SolveStatus.OPTIMAL
    message = None
    if not converged:
        status = SolveStatus.TOLERANCE_NOT_MET
        message = "iteration cap reached before the stopping rule was met"
    elif residuals.worst() > tolerance:
        status = SolveStatus.TOLERANCE_NOT_MET
        message = f"residuals {residuals.worst():.3g} exceed tolerance {tolerance:g}"
    report = SolveReport(
        method=method,
        status=status,
        r_star_bps=system.r_star_bps,
        allocation=allocation,
        active_topology=active,
        iterations=iterations,
        wall_time_s=time.perf_counter() - started,
        seeds=list(seeds),
        message=message,
    )
    logger.info(
        f"{method.value} at R*={system.r_star_bps / 1e6:.1f} Mbit/s: {report.status.value}, "
        f"{allocation.objective_hz / 1e6:.1f} MHz in {report.wall_time_s:.2f}s"
    )
    if message:
        logger.warning(f"{method.value}: {message}")
    return report


def _infeasible(method: PlanMethod, R_star: float, started: float, message: str, seeds=()) -> SolveReport:
    logger.warning(f"{method.value} infeasible at R*={R_star / 1e6:.1f} Mbit/s: {message}")
    return SolveReport(
        method=method,
        status=SolveStatus.INFEASIBLE,
        r_star_bps=R_star,
        wall_time_s=time.perf_counter() - started,
        seeds=list(seeds),
        message=message,
    )


def _check_size(scenario: NetworkScenario, topology: Topology) -> None:
    if (
        topology.kind is TopologyKind.FULL_CONNECTIVITY
        and scenario.n_relays > settings.max_full_connectivity_relays
    ):
        raise ProblemSizeError(
            f"Full connectivity with {scenario.n_relays} relays exceeds the limit of "
            f"{settings.max_full_connectivity_relays}"
        )


def minimize_total_bandwidth(
    scenario: NetworkScenario,
    topology: Topology,
    R_star: float,
    seed: int | None = None,
    tolerance: float | None = None,
    method: PlanMethod = PlanMethod.OPTIMAL,
) -> SolveReport:
    """
    Jointly choose routing, backhaul power and bandwidth to minimize total spectrum.

    Bandwidth is eliminated link by link through the rate inversion, leaving a
    problem over path flows and power shares. A phase-one linear program
    decides feasibility; then projected descent on a log-barrier objective runs
    from several starts and the best result is polished with exact bisection.
    """
    started = time.perf_counter()
    seed = settings.solver_seed if seed is None else seed
    tolerance = tolerance or settings.solver_tolerance
    _check_size(scenario, topology)
    system = flow_system(scenario, topology, R_star)

    W_access, P_access, R_access, failed = _access_allocation(scenario, system)
    if failed:
        return _infeasible(method, R_star, started, f"access links cannot carry the target: {', '.join(failed)}")

    W = np.zeros(len(system.link_index))
    P = np.zeros_like(W)
    R = np.zeros_like(W)
    for j in W_access:
        W[j], P[j], R[j] = W_access[j], P_access[j], R_access[j]

    if scenario.n_relays == 0:
        return _finish(method, scenario, system, W, P, R, started, tolerance=tolerance)

    problem = _build_reduced(scenario, system)
    z_lp, gap = _phase_one(problem)
    if gap <= 1e-12:
        return _infeasible(
            method, R_star, started, "no routing keeps every backhaul link below its power-limited ceiling"
        )

    starts = _starting_points(problem, z_lp, settings.solver_starts, seed)
    best = None
    total_iterations = 0
    for start_seed, z0 in starts:
        z, value, iterations, converged = _descend(problem, z0, tolerance, settings.solver_max_iterations)
        total_iterations += iterations
        logger.debug(f"start {start_seed}: {value * R_star / 1e6:.3f} MHz after {iterations} iterations")
        if best is None or value < best[1]:
            best = (z, value, converged)
    z, _, converged = best

    x, p = problem.split(z)
    for _ in range(3):
        pruned, changed = _prune_paths(problem, x, p, R_star)
        if not changed:
            x = pruned
            break
        resolved = _resolve_power(problem, pruned, p, tolerance)
        if resolved is None:
            # the rerouted flow does not fit the budgets; keep the thin links
            x = _drop_negligible(problem, x)
            break
        x, (p, power_converged) = pruned, resolved
        converged = converged and power_converged

    rates = problem.rates(x) * R_star
    budgets = link_budgets(scenario, system.link_index)
    for l, j in enumerate(system.backhaul_columns):
        if rates[l] <= 0:
            continue
        power = p[l] * scenario.pb_w
        bandwidth = required_bandwidth(rates[l], budgets[j].with_power(power), scenario.rate_model)
        if isinstance(bandwidth, Infeasible):
            converged = False
            continue
        W[j], P[j], R[j] = bandwidth, power, rates[l]
    return _finish(
        method,
        scenario,
        system,
        W,
        P,
        R,
        started,
        iterations=total_iterations,
        seeds=[s for s, _ in starts],
        converged=converged,
        tolerance=tolerance,
    )


def single_hop_equal_power(scenario: NetworkScenario, R_star: float) -> SolveReport:
    """Star backhaul with the base station's budget split equally; closed form, no iterations."""
    started = time.perf_counter()
    method = PlanMethod.SINGLE_HOP_EQUAL
    system = flow_system(scenario, Topology.single_hop(), R_star)
    W_access, P_access, R_access, failed = _access_allocation(scenario, system)

    W = np.zeros(len(system.link_index))
    P = np.zeros_like(W)
    R = np.zeros_like(W)
    for j in W_access:
        W[j], P[j], R[j] = W_access[j], P_access[j], R_access[j]

    budgets = link_budgets(scenario, system.link_index)
    share = scenario.pb_w / max(scenario.n_relays, 1)
    for j in system.backhaul_columns:
        link = system.link_index[j]
        target = scenario.weights[link.dst] * R_star
        bandwidth = required_bandwidth(target, budgets[j].with_power(share), scenario.rate_model)
        if isinstance(bandwidth, Infeasible):
            failed.append(f"{link.label} (ceiling {bandwidth.ceiling_bps:.4g} bit/s)")
            continue
        W[j], P[j], R[j] = bandwidth, share, target
    if failed:
        return _infeasible(method, R_star, started, f"links cannot carry the target: {', '.join(failed)}")
    return _finish(method, scenario, system, W, P, R, started)


def single_hop_optimized_power(
    scenario: NetworkScenario, R_star: float, seed: int | None = None, tolerance: float | None = None
) -> SolveReport:
    return minimize_total_bandwidth(
        scenario, Topology.single_hop(), R_star, seed=seed, tolerance=tolerance, method=PlanMethod.SINGLE_HOP
    )


def single_hop_ceiling(scenario: NetworkScenario) -> float:
    """Largest per-user rate an equal-power star network can sustain at any bandwidth."""
    system = flow_system(scenario, Topology.single_hop(), 1.0)
    budgets = link_budgets(scenario, system.link_index)
    share = scenario.pb_w / max(scenario.n_relays, 1)
    ceilings = []
    for j, link in enumerate(system.link_index):
        budget = budgets[j].with_power(share) if link.kind is LinkKind.BACKHAUL else budgets[j]
        ceilings.append(rate_ceiling(budget, scenario.rate_model) / scenario.weights[link.dst])
    return min(ceilings)


def direct_access(scenario: NetworkScenario, R_star: float) -> SolveReport:
    """
    No relays: the base station serves every user itself on orthogonal bands.

    User k stands its access range beyond node k's position, and the access
    budget is split equally across the users.
    """
    started = time.perf_counter()
    method = PlanMethod.DIRECT
    if not R_star > 0:
        raise DomainError(f"Target rate must be positive, got {R_star}")
    share = scenario.pa_w / (scenario.n_relays + 1)
    W, P, R, failed = [], [], [], []
    for node in scenario.nodes:
        distance = node.position_m + node.access_range_m
        budget = link_budget(
            scenario.pathloss_model,
            distance,
            scenario.fc_ghz,
            tx_power_w=share,
            joint_gain_dbi=scenario.access_joint_gain_dbi,
            noise_figure_db=scenario.noise_figure_db,
        )
        target = scenario.weights[node.index] * R_star
        bandwidth = required_bandwidth(target, budget, scenario.rate_model)
        if isinstance(bandwidth, Infeasible):
            failed.append(f"BS->U{node.index} (ceiling {bandwidth.ceiling_bps:.4g} bit/s)")
            continue
        W.append(bandwidth)
        P.append(share)
        R.append(target)
    if failed:
        return _infeasible(method, R_star, started, f"users out of reach: {', '.join(failed)}")
    total = float(sum(W))
    allocation = Allocation(
        links=[f"BS->U{k}" for k in range(scenario.n_relays + 1)],
        W=W,
        P=P,
        R=R,
        objective_hz=total,
        backhaul_hz=0.0,
        access_hz=total,
    )
    return SolveReport(
        method=method,
        status=SolveStatus.OPTIMAL,
        r_star_bps=R_star,
        allocation=allocation,
        active_topology=[l for l, w in zip(allocation.links, W) if w >= settings.active_link_threshold_hz],
        wall_time_s=time.perf_counter() - started,
    )


def run_method(
    method: PlanMethod,
    scenario: NetworkScenario,
    R_star: float,
    seed: int | None = None,
    tolerance: float | None = None,
) -> SolveReport:
    method = PlanMethod(method)
    if method is PlanMethod.OPTIMAL:
        return minimize_total_bandwidth(scenario, Topology.full_connectivity(), R_star, seed, tolerance)
    if method is PlanMethod.SINGLE_HOP:
        return single_hop_optimized_power(scenario, R_star, seed, tolerance)
    if method is PlanMethod.SINGLE_HOP_EQUAL:
        return single_hop_equal_power(scenario, R_star)
    if method is PlanMethod.NEAREST_NEIGHBOR:
        return minimize_total_bandwidth(
            scenario, Topology.nearest_neighbor(), R_star, seed, tolerance, method=PlanMethod.NEAREST_NEIGHBOR
        )
    return direct_access(scenario, R_star)


# --- exhaustive grid oracle ---


def brute_force_oracle(
    scenario: NetworkScenario, topology: Topology, R_star: float, grid_resolution: int = 40
) -> Allocation:
    """
    Exhaustive search over a lattice of path splits and power splits.

    Every cell's backhaul bandwidth comes from the rate inversion; the best
    cell is then recomputed with bisection. grid_cell_hz reports the largest
    objective change to a neighbouring cell, the declared accuracy.
    """
    if scenario.n_relays > ORACLE_MAX_RELAYS:
        raise ProblemSizeError(f"The grid oracle handles at most {ORACLE_MAX_RELAYS} relays")
    if grid_resolution < 1:
        raise DomainError("Grid resolution must be at least 1")
    system = flow_system(scenario, topology, R_star)
    W_access, P_access, R_access, failed = _access_allocation(scenario, system)
    if failed:
        raise DomainError(f"Access links cannot carry the target: {', '.join(failed)}")

    W = np.zeros(len(system.link_index))
    P = np.zeros_like(W)
    R = np.zeros_like(W)
    for j in W_access:
        W[j], P[j], R[j] = W_access[j], P_access[j], R_access[j]
    access_hz = access_bandwidth(W[system.access_columns], access_band_partition(scenario))

    grid_cell = 0.0
    if scenario.n_relays:
        problem = _build_reduced(scenario, system)
        blocks = [simplex_grid(b.size, grid_resolution) for b in problem.path_blocks]
        blocks += [simplex_grid(b.size, grid_resolution) for b in problem.power_blocks]
        cells = np.array([np.concatenate(choice) for choice in product(*blocks)])
        x = cells[:, : problem.n_paths]
        # power blocks are grouped by transmitter; scatter them back into link order
        p = np.empty((len(cells), problem.incidence.shape[0]))
        column = problem.n_paths
        for block in problem.power_blocks:
            p[:, block - problem.n_paths] = cells[:, column : column + block.size]
            column += block.size
        rates = (x * problem.path_demand) @ problem.incidence.T
        c = p * problem.snr_capacity
        with np.errstate(divide="ignore", invalid="ignore"):
            k = np.where(c > 0, rates / np.where(c > 0, c, 1.0), np.where(rates > 0, np.inf, 0.0))
            bandwidth = c * problem.curve.bandwidth(k)
        bandwidth = np.where(rates > 0, bandwidth, 0.0)
        objective = bandwidth.sum(axis=1)
        objective = np.where(np.isfinite(objective), objective, np.inf)
        if not np.any(np.isfinite(objective)):
            raise DomainError("No grid cell can carry the target rate")
        best = int(np.argmin(objective))
        step = 1.0 / grid_resolution
        neighbours = np.max(np.abs(cells - cells[best]), axis=1) <= step + 1e-12
        finite = neighbours & np.isfinite(objective)
        grid_cell = float(np.max(objective[finite] - objective[best])) * R_star

        budgets = link_budgets(scenario, system.link_index)
        for l, j in enumerate(system.backhaul_columns):
            rate = rates[best, l] * R_star
            if rate <= 0:
                continue
            power = p[best, l] * scenario.pb_w
            bandwidth = required_bandwidth(rate, budgets[j].with_power(power), scenario.rate_model)
            if isinstance(bandwidth, Infeasible):
                raise PlannerError(f"Best grid cell overloads {system.link_index[j].label}")
            W[j] = bandwidth
            P[j], R[j] = power, rate

    residuals = verify_allocation(scenario, system, W, P, R)
    if residuals.worst() > settings.solver_tolerance:
        raise PlannerError(
            f"Oracle allocation fails its own check: flow {residuals.flow:.3g}, "
            f"power {residuals.power:.3g}, rate {residuals.rate:.3g}"
        )
    backhaul_hz = float(W[system.backhaul_columns].sum()) if scenario.n_relays else 0.0
    return Allocation(
        links=system.labels,
        W=W.tolist(),
        P=P.tolist(),
        R=R.tolist(),
        objective_hz=backhaul_hz + access_hz,
        backhaul_hz=backhaul_hz,
        access_hz=access_hz,
        residuals=residuals,
        grid_cell_hz=grid_cell,
    )


# --- sweeps and comparisons ---


class SweepPoint(BaseModel):
    topology: PlanMethod
    r_star_bps: float
    total_bw_hz: float | None
    backhaul_bw_hz: float | None
    access_bw_hz: float | None
    status: SolveStatus


class SweepResult(BaseModel):
    points: list[SweepPoint]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([point.model_dump(mode="json") for point in self.points])
        return frame[["topology", "r_star_bps", "total_bw_hz", "backhaul_bw_hz", "access_bw_hz", "status"]]

    def to_csv(self, path: str | Path) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n", encoding="utf-8")

    def rate_curve(self, method: PlanMethod) -> pd.DataFrame:
        """Per-user rate against total bandwidth for one method, solved points only."""
        frame = self.to_frame()
        solved = frame[(frame.topology == PlanMethod(method).value) & frame.total_bw_hz.notna()]
        return solved[["total_bw_hz", "r_star_bps"]].sort_values("total_bw_hz").reset_index(drop=True)


def _sweep_point(args) -> SweepPoint:
    method, scenario, R_star, seed, tolerance = args
    report = run_method(method, scenario, R_star, seed, tolerance)
    allocation = report.allocation
    return SweepPoint(
        topology=method,
        r_star_bps=R_star,
        total_bw_hz=allocation.objective_hz if allocation else None,
        backhaul_bw_hz=allocation.backhaul_hz if allocation else None,
        access_bw_hz=allocation.access_hz if allocation else None,
        status=report.status,
    )


def sweep_rate_bandwidth(
    scenario: NetworkScenario,
    methods,
    r_stars,
    seed: int | None = None,
    tolerance: float | None = None,
    workers: int | None = None,
) -> SweepResult:
    """
    Minimized total bandwidth for every (method, R*) pair, ordered by method then rate.

    Infeasible points are recorded and the sweep carries on. Each method's
    bandwidth must not decrease with R*; violations are flagged as
    tolerance-not-met.
    """
    methods = [PlanMethod(m) for m in methods]
    r_stars = sorted(float(r) for r in r_stars)
    if not methods or not r_stars:
        raise DomainError("A sweep needs at least one method and one target rate")
    tolerance = tolerance or settings.solver_tolerance
    workers = workers or settings.sweep_workers
    jobs = [(m, scenario, r, seed, tolerance) for m in methods for r in r_stars]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            points = list(pool.map(_sweep_point, jobs))
    else:
        points = [_sweep_point(job) for job in jobs]

    for method in methods:
        previous = None
        for point in points:
            if point.topology is not method or point.total_bw_hz is None:
                continue
            if previous is not None and point.total_bw_hz < previous * (1.0 - 1e2 * tolerance):
                logger.warning(
                    f"{method.value}: bandwidth drops from {previous:.4g} to {point.total_bw_hz:.4g} Hz "
                    f"at R*={point.r_star_bps:.4g}"
                )
                point.status = SolveStatus.TOLERANCE_NOT_MET
            previous = point.total_bw_hz if previous is None else max(previous, point.total_bw_hz)
    return SweepResult(points=points)


def max_rate_within_bandwidth(
    method: PlanMethod,
    scenario: NetworkScenario,
    total_bw_hz: float,
    rel_tol: float = 1e-3,
    seed: int | None = None,
) -> float:
    """Largest per-user rate whose minimized total bandwidth fits total_bw_hz, by bisection on R*."""
    if not total_bw_hz > 0:
        raise DomainError(f"Bandwidth budget must be positive, got {total_bw_hz}")

    def fits(R_star: float) -> bool:
        report = run_method(method, scenario, R_star, seed)
        return report.allocation is not None and report.objective_hz <= total_bw_hz

    lo, hi = 0.0, 1e6
    while fits(hi):
        lo, hi = hi, hi * 2.0
        if hi > 1e15:
            raise PlannerError("Rate search did not bracket the bandwidth budget")
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            lo = mid
        else:
            hi = mid
    logger.info(f"{PlanMethod(method).value}: {lo / 1e6:.1f} Mbit/s per user within {total_bw_hz / 1e6:.1f} MHz")
    return lo


def compare_topologies(
    scenario: NetworkScenario, R_star: float, seed: int | None = None, methods=None
) -> list[SolveReport]:
    """All planning methods at one target rate, best first; equal objectives favour fewer active links."""
    methods = [PlanMethod(m) for m in (methods or list(PlanMethod))]
    reports = [run_method(method, scenario, R_star, seed) for method in methods]
    tie = settings.solver_tolerance * 1e2

    solved = sorted(
        (r for r in reports if r.status is not SolveStatus.INFEASIBLE), key=lambda r: r.objective_hz
    )
    ranked, group = [], []
    for report in solved:
        # objectives within tie of the group's best are equal; fewer links first
        if group and not math.isclose(report.objective_hz, group[0].objective_hz, rel_tol=tie):
            ranked += sorted(group, key=lambda r: len(r.active_topology))
            group = []
        group.append(report)
    ranked += sorted(group, key=lambda r: len(r.active_topology))
    return ranked + [r for r in reports if r.status is SolveStatus.INFEASIBLE]
