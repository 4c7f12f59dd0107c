# Error types raised by the planning services.
# Infeasible targets are reported as values, never raised.


class PlannerError(Exception):
    """Base class for every error raised by the planner."""


class DomainError(PlannerError, ValueError):
    """An input lies outside the domain of a propagation or rate model."""


class ModelValidityError(DomainError):
    """The Gaussian beam model is used beyond the beamwidths it is valid for."""


class TopologyError(PlannerError, ValueError):
    """A backhaul topology is malformed or leaves a relay unreachable."""


class ProblemSizeError(PlannerError, ValueError):
    """A problem is too large for an exhaustive or path-based method."""


class ScenarioConfigError(PlannerError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")
