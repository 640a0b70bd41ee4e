"""Experiment orchestration: volume sweeps x failure suites x topologies.

A suite config is a JSON document::

    {
      "name": "study",
      "output_dir": "results",
      "defaults": {"volumes_gb": [1, 2, ...], "server_rate_cap_mbps": 1000},
      "experiments": [
        {"name": "fat-tree", "topology": {"arch": "fat-tree", "params": {"k": 4}},
         "placement": "placements/fat-tree.json", "scenarios": "scenarios/fat-tree.json"},
        ...
      ]
    }

Relative paths resolve against the config file's directory. The failure-free
baseline ``"none"`` is always evaluated, whatever the scenario suite lists.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .errors import DcnShuffleError, InfeasibleError
from .failures import NO_FAILURE, FailureScenario, Fatality, apply_scenario, classify_scenario, load_suite
from .lpsolve import OPTIMAL, check_solution, solve, solve_milp
from .metrics import degradation, energy as energy_fields
from .optmodel import PIN_RELATIVE_SLACK, build_stage1, build_stage2, completion_time_from_lambda
from .topology import Topology, build_topology, read_topology, validate_topology
from .workload import DemandSet, Placement, default_placement, make_graysort_demands, placement_from_document

MB_PER_GB = 1000.0
WORKERS_ENV = "DCNSHUFFLE_WORKERS"
DEFAULT_VOLUMES = tuple(float(v) for v in range(1, 21))
LAMBDA_ZERO = 1e-12


@dataclass
class InstanceResult:
    """Outcome of optimizing one (topology, demands, scenario) instance."""

    fatality: Fatality
    lam: float = math.nan
    completion_time: float = math.nan
    schedule_time: float = math.nan  # completion time of the stage-2 routing
    active_power: float = math.nan
    idle_power: float = math.nan
    energy: float = math.nan
    energy_active_only: float = math.nan
    active_nodes: tuple[int, ...] = ()
    stage1_iterations: int = 0
    stage1_nodes: int = 0
    stage2_nodes: int = 0
    max_violation: float = 0.0
    flows: dict = field(default_factory=dict, repr=False)

    def scaled(self, factor: float) -> InstanceResult:
        """The same instance with every volume multiplied by ``factor``."""
        out = InstanceResult(**{f.name: getattr(self, f.name) for f in fields(self)})
        out.lam = self.lam / factor
        out.completion_time = self.completion_time * factor
        out.schedule_time = self.schedule_time * factor
        out.energy = self.energy * factor
        out.energy_active_only = self.energy_active_only * factor
        return out


def _solve_checked(model, what: str):
    sol = solve(model) if not model.binaries else solve_milp(model)
    if sol.status != OPTIMAL:
        raise InfeasibleError(f"{what}: solver status {sol.status}")
    cert = check_solution(model, sol)
    if not cert.ok:
        raise InfeasibleError(f"{what}: solution failed certification ({cert})")
    return sol, cert


def _starved_demands(t: Topology, demands: DemandSet, aggregate: bool) -> tuple[int, ...]:
    """Demands that get zero rate even when solved alone."""
    starved = []
    for dem in demands.positive():
        single = DemandSet((dem,), dem.volume)
        s, _ = _solve_checked(build_stage1(t, single, aggregate=aggregate), "stage 1")
        if s.objective_value <= LAMBDA_ZERO:
            starved.append(dem.id)
    # jointly unservable (budget conflict): blame everything
    return tuple(starved) or tuple(dem.id for dem in demands.positive())


def solve_instance(
    t: Topology,
    demands: DemandSet,
    scenario: FailureScenario = NO_FAILURE,
    epsilon: float = 0.0,
    aggregate: bool = True,
    stage2: bool = True,
    include_servers: bool = False,
) -> InstanceResult:
    """Classify, then run stage 1 (min completion time) and stage 2 (min power)."""
    fatality = classify_scenario(t, demands, scenario)
    if fatality.fatal:
        return InstanceResult(fatality)
    if not demands.positive():
        return InstanceResult(fatality, math.inf, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    failed = apply_scenario(t, scenario)
    m1 = build_stage1(failed, demands, aggregate=aggregate)
    s1, c1 = _solve_checked(m1, "stage 1")
    lam = s1.objective_value
    if lam <= LAMBDA_ZERO:
        # connected, but the circuit budget cannot give every demand a path
        return InstanceResult(Fatality(_starved_demands(failed, demands, aggregate)))
    res = InstanceResult(fatality, lam, completion_time_from_lambda(lam))
    res.stage1_iterations = getattr(s1, "iteration_count", getattr(s1, "lp_iterations", 0))
    res.stage1_nodes = getattr(s1, "explored_nodes", 1)
    res.max_violation = c1.max_violation
    flow_model, flow_sol = m1, s1
    if stage2:
        m2 = build_stage2(failed, demands, lam, epsilon, aggregate=aggregate)
        s2, c2 = _solve_checked(m2, "stage 2")
        lam2 = s2.value(m2.metadata["lam"])
        # within the pin row's numerical slack the schedule is the stage-1 one
        near = lam2 >= lam * (1.0 - 10 * PIN_RELATIVE_SLACK)
        res.schedule_time = res.completion_time if near else completion_time_from_lambda(lam2)
        e = energy_fields(failed, s2, res.schedule_time, m2, include_servers=include_servers)
        res.active_power, res.idle_power = e.active_power, e.idle_power
        res.energy, res.energy_active_only = e.energy, e.energy_active_only
        res.active_nodes = e.active_nodes
        res.stage2_nodes = getattr(s2, "explored_nodes", 1)
        res.max_violation = max(res.max_violation, c2.max_violation)
        flow_model, flow_sol = m2, s2
    else:
        res.schedule_time = res.completion_time
    arc_flow: dict[int, float] = {}
    meta = flow_model.metadata
    for (k, arc_id), vid in meta["flow"].items():
        v = flow_sol.value(vid)
        if v > 1e-9:
            arc_flow[arc_id] = arc_flow.get(arc_id, 0.0) + v
    res.flows = arc_flow
    return res


# -- configuration ------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    name: str
    topology: dict
    placement: Any = None
    scenarios: Any = None
    volumes_gb: Sequence[float] = DEFAULT_VOLUMES
    server_rate_cap_mbps: float | None = 1000.0
    epsilon: float = 0.0
    parallelism: int = 1
    seed: int = 0
    aggregate: bool = True
    exploit_homogeneity: bool = True
    stage2: bool = True
    include_servers: bool = False
    base_dir: str = "."

    def __post_init__(self):
        self.volumes_gb = tuple(float(v) for v in self.volumes_gb)
        if not self.volumes_gb or any(not v > 0 for v in self.volumes_gb):
            raise DcnShuffleError(f"{self.name}: volumes_gb must be non-empty and positive")
        if int(self.parallelism) < 1:
            raise DcnShuffleError(f"{self.name}: parallelism must be >= 1")
        if self.epsilon < 0:
            raise DcnShuffleError(f"{self.name}: epsilon must be >= 0")

    def _path(self, ref: str) -> Path:
        p = Path(ref)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def load_topology(self) -> Topology:
        spec = self.topology
        if "document" in spec:
            t = read_topology(self._path(spec["document"]))
        else:
            t = build_topology(spec["arch"], spec.get("params") or {})
        if self.server_rate_cap_mbps is not None:
            t = t.with_server_rate_cap(self.server_rate_cap_mbps)
        problems = validate_topology(t)
        if problems:
            raise DcnShuffleError(f"{self.name}: invalid topology: {'; '.join(problems)}")
        return t

    def load_placement(self, t: Topology) -> Placement:
        ref = self.placement
        if ref is None:
            return default_placement(t)
        if isinstance(ref, dict) and "random" in ref:
            opts = ref["random"]
            servers = [n.id for n in t.servers()]
            rng = np.random.default_rng(self.seed)
            m, r = int(opts.get("mappers", 10)), int(opts.get("reducers", 6))
            picked = [int(x) for x in rng.permutation(servers)[: m + r]]
            return Placement(tuple(picked[:m]), tuple(picked[m:]))
        if isinstance(ref, str):
            ref = json.loads(self._path(ref).read_text())
        return placement_from_document(t, ref)

    def load_scenarios(self, t: Topology) -> list[FailureScenario]:
        ref = self.scenarios
        if ref is None:
            return []
        text = self._path(ref).read_text() if isinstance(ref, str) else json.dumps(ref)
        return load_suite(t, text)


@dataclass
class SuiteConfig:
    name: str
    experiments: list[ExperimentConfig]
    output_dir: str = "results"
    base_dir: str = "."

    @property
    def output_path(self) -> Path:
        p = Path(self.output_dir)
        return p if p.is_absolute() else Path(self.base_dir) / p


_EXPERIMENT_KEYS = {f.name for f in fields(ExperimentConfig)} - {"base_dir"}


def suite_from_document(doc: dict, base_dir: str = ".") -> SuiteConfig:
    defaults = doc.get("defaults", {})
    experiments = []
    for entry in doc.get("experiments", []):
        merged = {**defaults, **entry}
        unknown = set(merged) - _EXPERIMENT_KEYS
        if unknown:
            raise DcnShuffleError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        experiments.append(ExperimentConfig(**merged, base_dir=str(base_dir)))
    if not experiments:
        raise DcnShuffleError("config lists no experiments")
    return SuiteConfig(doc.get("name", "suite"), experiments, doc.get("output_dir", "results"), str(base_dir))


def load_config(path) -> SuiteConfig:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DcnShuffleError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return suite_from_document(doc, str(path.parent))


# -- running ---------------------------------------------------------------------------


REPORT_COLUMNS = (
    "topology", "scenario", "volume_gb", "t_base_s", "t_fail_s", "extra_delay_s",
    "degradation_pct", "t_schedule_s", "active_power_w", "idle_power_w", "energy_j",
    "energy_active_only_j", "fatality", "fatal_demands", "failed_links", "lambda_per_s",
    "stage1_iterations", "stage1_nodes", "stage2_nodes", "max_violation",
)


@dataclass
class ReportRow:
    topology: str
    scenario: str
    volume_gb: float
    t_base_s: float
    t_fail_s: float
    extra_delay_s: float
    degradation_pct: float
    t_schedule_s: float
    active_power_w: float
    idle_power_w: float
    energy_j: float
    energy_active_only_j: float
    fatality: str
    fatal_demands: int
    failed_links: int
    lambda_per_s: float
    stage1_iterations: int
    stage1_nodes: int
    stage2_nodes: int
    max_violation: float

    @property
    def fatal(self) -> bool:
        return self.fatality == "fatal"


@dataclass
class ExperimentReport:
    rows: list[ReportRow]

    def __add__(self, other: ExperimentReport) -> ExperimentReport:
        return ExperimentReport(self.rows + other.rows)

    def select(self, topology: str | None = None, scenario: str | None = None) -> list[ReportRow]:
        return [
            r for r in self.rows
            if (topology is None or r.topology == topology) and (scenario is None or r.scenario == scenario)
        ]


def _cell(args) -> tuple[str, float, InstanceResult]:
    t, demands, scenario, volume, cfg_flags = args
    return scenario.name, volume, solve_instance(t, demands, scenario, **cfg_flags)


def _workers(cfg: ExperimentConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return int(cfg.parallelism)


def run_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Evaluate every (scenario, volume) cell of one topology.

    With ``exploit_homogeneity`` each scenario is solved once at the smallest
    volume and the rest of the sweep is obtained by scaling: the optimum
    flow pattern is volume-independent, times and energies grow linearly.
    """
    t = cfg.load_topology()
    placement = cfg.load_placement(t)
    scenarios = [NO_FAILURE] + cfg.load_scenarios(t)
    flags = dict(epsilon=cfg.epsilon, aggregate=cfg.aggregate, stage2=cfg.stage2,
                 include_servers=cfg.include_servers)
    volumes = sorted(set(cfg.volumes_gb))
    solve_volumes = volumes[:1] if cfg.exploit_homogeneity else volumes
    jobs = []
    for s in scenarios:
        for v in solve_volumes:
            d = make_graysort_demands(v * MB_PER_GB, placement, t)
            jobs.append((t, d, s, v, flags))

    results: dict[tuple[str, float], InstanceResult] = {}
    workers = _workers(cfg)
    try:
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(_cell, jobs))
        else:
            outcomes = [_cell(j) for j in jobs]
    except DcnShuffleError as exc:
        raise type(exc)(f"{cfg.name}: {exc}") if isinstance(exc, InfeasibleError) else exc
    for name, v, res in outcomes:
        results[name, v] = res
    if cfg.exploit_homogeneity:
        ref = solve_volumes[0]
        for s in scenarios:
            base = results[s.name, ref]
            for v in volumes[1:]:
                results[s.name, v] = base if base.fatality.fatal else base.scaled(v / ref)

    rows = []
    for s in scenarios:
        if results[NO_FAILURE.name, volumes[0]].fatality.fatal:
            raise InfeasibleError(f"{cfg.name}: placement is disconnected without failures")
        for v in volumes:
            base = results[NO_FAILURE.name, v]
            res = results[s.name, v]
            rows.append(_row(cfg.name, s, v, base, res))
    return ExperimentReport(rows)


def _row(topology: str, s: FailureScenario, v: float, base: InstanceResult, res: InstanceResult) -> ReportRow:
    nan = math.nan
    if res.fatality.fatal:
        return ReportRow(topology, s.name, v, base.completion_time, nan, nan, nan, nan, nan, nan, nan,
                         nan, "fatal", len(res.fatality.demands), len(s.failed_links), nan, 0, 0, 0, nan)
    t_base, t_fail = base.completion_time, res.completion_time
    if abs(t_fail - t_base) <= 1e-9 * t_base:
        t_fail = t_base  # solver rounding, not a real change
    deg = degradation(t_fail, t_base) if t_base > 0 else 0.0
    return ReportRow(
        topology, s.name, v, t_base, t_fail, t_fail - t_base, deg, res.schedule_time,
        res.active_power, res.idle_power, res.energy, res.energy_active_only,
        "nonfatal", 0, len(s.failed_links), res.lam, res.stage1_iterations, res.stage1_nodes,
        res.stage2_nodes, res.max_violation,
    )


def run_suite(suite: SuiteConfig) -> ExperimentReport:
    report = ExperimentReport([])
    for cfg in suite.experiments:
        report = report + run_experiment(cfg)
    return report


# -- emission ----------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return ""
        return f"{x:.12g}"
    return str(x)


def _csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


def _sorted_rows(r: ExperimentReport) -> list[ReportRow]:
    order: dict[str, int] = {}
    for row in r.rows:
        order.setdefault(row.topology, len(order))
    scen_order: dict[tuple[str, str], int] = {}
    for row in r.rows:
        scen_order.setdefault((row.topology, row.scenario), len(scen_order))
    return sorted(r.rows, key=lambda x: (order[x.topology], scen_order[x.topology, x.scenario], x.volume_gb))


def fig2_series(r: ExperimentReport) -> list[tuple]:
    """(topology, scenario, volume_gb, completion_time_s) for every non-fatal cell."""
    return [(x.topology, x.scenario, x.volume_gb, x.t_fail_s) for x in _sorted_rows(r) if not x.fatal]


def fig3_stacked(r: ExperimentReport) -> list[tuple]:
    """(topology, scenario, volume_gb, base_s, extra_s, overall_s) at each topology's largest volume."""
    out = []
    rows = _sorted_rows(r)
    vmax = {}
    for x in rows:
        vmax[x.topology] = max(vmax.get(x.topology, 0.0), x.volume_gb)
    for x in rows:
        if x.volume_gb == vmax[x.topology] and not x.fatal:
            out.append((x.topology, x.scenario, x.volume_gb, x.t_base_s, x.extra_delay_s, x.t_base_s + x.extra_delay_s))
    return out


FIG2_COLUMNS = ("topology", "scenario", "volume_gb", "completion_time_s")
FIG3_COLUMNS = ("topology", "scenario", "volume_gb", "base_s", "extra_s", "overall_s")


def emit_report(r: ExperimentReport, out_dir, format: str = "csv") -> list[Path]:
    """Write ``results``, ``fig2_series`` and ``fig3_stacked`` files into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise DcnShuffleError(f"cannot create {out}: {exc}") from None
    rows = _sorted_rows(r)
    tables = {
        "results": (REPORT_COLUMNS, [tuple(getattr(x, c) for c in REPORT_COLUMNS) for x in rows]),
        "fig2_series": (FIG2_COLUMNS, fig2_series(r)),
        "fig3_stacked": (FIG3_COLUMNS, fig3_stacked(r)),
    }
    written = []
    for name, (header, data) in tables.items():
        if format == "csv":
            path = out / f"{name}.csv"
            text = _csv(header, data)
        elif format == "json":
            path = out / f"{name}.json"
            records = [{h: (None if isinstance(v, float) and math.isnan(v) else v) for h, v in zip(header, d)}
                       for d in data]
            text = json.dumps(records, indent=2) + "\n"
        else:
            raise ValueError(f"unknown format {format!r}")
        try:
            path.write_text(text)
        except OSError as exc:
            raise DcnShuffleError(f"cannot write {path}: {exc}") from None
        written.append(path)
    return written


def report_to_records(r: ExperimentReport) -> list[dict]:
    return [asdict(x) for x in _sorted_rows(r)]
