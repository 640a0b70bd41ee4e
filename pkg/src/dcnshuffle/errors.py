"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class DcnShuffleError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(DcnShuffleError, ValueError):
    """A topology generator received an invalid parameter combination."""


class TopologyParseError(DcnShuffleError, ValueError):
    """A topology document could not be parsed."""


class TopologyValidationError(DcnShuffleError, ValueError):
    """A topology violates one of its structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class PlacementError(DcnShuffleError, ValueError):
    """A worker placement refers to invalid servers."""


class ScenarioError(DcnShuffleError, ValueError):
    """A failure scenario refers to unknown links or is malformed."""


class FatalScenarioError(DcnShuffleError):
    """Some positive-volume demand has no path after the failures."""

    def __init__(self, demand_ids, message=None):
        self.demand_ids = tuple(demand_ids)
        super().__init__(
            message or f"fatal scenario: {len(self.demand_ids)} demand(s) disconnected"
        )


class DegenerateModelError(DcnShuffleError, ValueError):
    """The demand set carries no positive volume, so no model is built."""


class ModelError(DcnShuffleError, ValueError):
    """An optimization model is malformed or does not match its inputs."""


class LpFormatError(DcnShuffleError, ValueError):
    """An LP-format document could not be parsed."""


class SolverError(DcnShuffleError, RuntimeError):
    """The simplex engine hit a numerical failure it could not recover from."""


class ResourceError(DcnShuffleError, RuntimeError):
    """Branch-and-bound exhausted its node budget before closing the gap."""

    def __init__(self, message, incumbent=None, best_bound=None, explored_nodes=0):
        self.incumbent = incumbent
        self.best_bound = best_bound
        self.explored_nodes = explored_nodes
        super().__init__(message)


class InfeasibleError(DcnShuffleError):
    """A model that should be feasible was reported infeasible by the solver."""
