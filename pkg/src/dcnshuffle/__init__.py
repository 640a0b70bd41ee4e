"""Optimal MapReduce shuffle routing in data-center networks under link failures.

Stage 1 finds the minimum shuffle completion time T* = 1/lambda* as a
maximum concurrent flow; stage 2 finds, among routings achieving T*, one
that powers the fewest network elements. Both are solved by the bundled
simplex and branch-and-bound in :mod:`dcnshuffle.lpsolve`.
"""

from __future__ import annotations

from .errors import (
    DcnShuffleError,
    DegenerateModelError,
    FatalScenarioError,
    InfeasibleError,
    LpFormatError,
    ModelError,
    ParameterError,
    PlacementError,
    ResourceError,
    ScenarioError,
    SolverError,
    TopologyParseError,
    TopologyValidationError,
)
from .failures import NO_FAILURE, FailureScenario, Fatality, apply_scenario, classify_scenario, load_suite
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    SuiteConfig,
    emit_report,
    load_config,
    run_experiment,
    run_suite,
    solve_instance,
)
from .lpformat import read_lp, write_lp
from .lpsolve import check_solution, solve, solve_lp, solve_milp
from .metrics import degradation, energy, overall_completion
from .optmodel import OptModel, build_stage1, build_stage2, completion_time_from_lambda, export_lp
from .topology import (
    ARCHITECTURES,
    NodeKind,
    Topology,
    build_topology,
    load_topology,
    read_topology,
    save_topology,
    validate_topology,
)
from .workload import DemandSet, Placement, default_placement, make_graysort_demands, validate_placement

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
