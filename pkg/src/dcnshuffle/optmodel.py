"""Two-stage shuffle optimization models.

Stage 1 is a maximum concurrent flow: every demand ``d`` is injected at rate
``lam * v_d`` and ``lam`` is maximised. A schedule that finishes all demands
by ``T`` has average rates ``v_d / T``, so ``lam = 1 / T`` is feasible and
``1 / lam*`` is the minimum makespan.

Stage 2 keeps the throughput at ``lam* / (1 + epsilon)`` and minimises the
power of the switches that carry traffic, with one activation binary per
powered element.

Models are solver-agnostic: a list of bounded variables, linear constraints
and a linear objective. Variable names follow ``f_d{D}_a{A}`` (flow of demand
``D`` on arc ``A``), ``lam``, ``u_n{N}`` and ``y_l{L}``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateModelError, FatalScenarioError, ModelError
from .failures import NO_FAILURE, classify_scenario
from .topology import NodeKind, Topology, topology_to_document
from .workload import DemandSet

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "=", ">="

# Keeps the stage-2 throughput floor reachable despite rounding in lam*.
PIN_RELATIVE_SLACK = 1e-9


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    lower: float = 0.0
    upper: float = math.inf
    integrality: str = CONTINUOUS

    @property
    def is_binary(self) -> bool:
        return self.integrality == BINARY


@dataclass(frozen=True)
class LinearConstraint:
    id: int
    terms: tuple[tuple[int, float], ...]
    sense: str
    rhs: float
    tag: str


@dataclass(frozen=True)
class OptModel:
    variables: tuple[Variable, ...]
    constraints: tuple[LinearConstraint, ...]
    objective_sense: str  # "max" or "min"
    objective: tuple[tuple[int, float], ...]
    metadata: dict = field(default_factory=dict, compare=False)

    __hash__ = None  # type: ignore[assignment]

    @property
    def binaries(self) -> list[int]:
        return [v.id for v in self.variables if v.is_binary]

    def var_id(self, name: str) -> int:
        index = self.metadata.get("_names")
        if index is None:
            index = {v.name: v.id for v in self.variables}
            self.metadata["_names"] = index
        return index[name]

    def validate(self) -> list[str]:
        """Structural checks; an empty list means the model is well formed."""
        out = []
        n = len(self.variables)
        if [v.id for v in self.variables] != list(range(n)):
            out.append("variable ids dense")
        if len({v.name for v in self.variables}) != n:
            out.append("variable names unique")
        for v in self.variables:
            if not v.lower <= v.upper:
                out.append(f"{v.name}: lower <= upper")
            if v.is_binary and (v.lower < 0 or v.upper > 1):
                out.append(f"{v.name}: binary bounds within [0, 1]")
        for c in self.constraints:
            ids = [i for i, _ in c.terms]
            if len(set(ids)) != len(ids):
                out.append(f"{c.tag}: duplicate variable")
            if any(not 0 <= i < n for i in ids):
                out.append(f"{c.tag}: undeclared variable")
            if any(not math.isfinite(a) for _, a in c.terms) or not math.isfinite(c.rhs):
                out.append(f"{c.tag}: non-finite coefficient")
            if c.sense not in (LE, EQ, GE):
                out.append(f"{c.tag}: bad sense {c.sense!r}")
        if any(not 0 <= i < n for i, _ in self.objective):
            out.append("objective: undeclared variable")
        if self.objective_sense not in ("max", "min"):
            out.append("objective sense must be max or min")
        return out

    def arrays(self):
        """Return ``(c, A, senses, rhs, lower, upper, binary_mask)`` with ``A`` in CSC form."""
        n, m = len(self.variables), len(self.constraints)
        c = np.zeros(n)
        for i, a in self.objective:
            c[i] += a
        rows, cols, vals = [], [], []
        for r, con in enumerate(self.constraints):
            for i, a in con.terms:
                rows.append(r)
                cols.append(i)
                vals.append(a)
        A = sp.csc_matrix((vals, (rows, cols)), shape=(m, n))
        senses = [con.sense for con in self.constraints]
        rhs = np.array([con.rhs for con in self.constraints], dtype=float)
        lower = np.array([v.lower for v in self.variables], dtype=float)
        upper = np.array([v.upper for v in self.variables], dtype=float)
        binary = np.array([v.is_binary for v in self.variables], dtype=bool)
        return c, A, senses, rhs, lower, upper, binary

    def evaluate(self, values: Sequence[float]) -> float:
        return float(sum(a * values[i] for i, a in self.objective))


class ModelBuilder:
    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[LinearConstraint] = []

    def var(self, name: str, lower: float = 0.0, upper: float = math.inf, binary: bool = False) -> int:
        vid = len(self.variables)
        if binary:
            lower, upper = max(lower, 0.0), min(upper, 1.0)
        self.variables.append(Variable(vid, name, float(lower), float(upper), BINARY if binary else CONTINUOUS))
        return vid

    def constrain(self, terms: Iterable[tuple[int, float]], sense: str, rhs: float, tag: str) -> int:
        merged: dict[int, float] = {}
        for i, a in terms:
            merged[i] = merged.get(i, 0.0) + float(a)
        cid = len(self.constraints)
        self.constraints.append(
            LinearConstraint(cid, tuple((i, a) for i, a in merged.items() if a != 0.0), sense, float(rhs), tag)
        )
        return cid

    def build(self, sense: str, objective: Iterable[tuple[int, float]], metadata: dict) -> OptModel:
        return OptModel(tuple(self.variables), tuple(self.constraints), sense, tuple(objective), metadata)


def fingerprint(obj: Any) -> str:
    text = json.dumps(obj, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _commodities(d: DemandSet, aggregate: bool) -> list[tuple[str, int, dict[int, float]]]:
    """(name prefix, source, {sink: volume}) per commodity."""
    positive = d.positive()
    if not aggregate:
        return [(f"f_d{dem.id}", dem.source, {dem.sink: dem.volume}) for dem in positive]
    grouped: dict[int, dict[int, float]] = {}
    for dem in positive:
        sinks = grouped.setdefault(dem.source, {})
        sinks[dem.sink] = sinks.get(dem.sink, 0.0) + dem.volume
    return [(f"f_s{src}", src, sinks) for src, sinks in grouped.items()]


def _stage1_body(t: Topology, d: DemandSet, aggregate: bool) -> tuple[ModelBuilder, dict]:
    fatality = classify_scenario(t, d, NO_FAILURE)
    if fatality.fatal:
        raise FatalScenarioError(fatality.demands)
    commodities = _commodities(d, aggregate)
    if not commodities:
        raise DegenerateModelError("demand set has no positive-volume network demand")

    mb = ModelBuilder()
    arcs = t.arcs()
    lam = mb.var("lam")
    groups = {g.id: g for g in t.groups}
    optical = {l.id: l for l in t.active_links if l.optical_group is not None}
    y = {lid: mb.var(f"y_l{lid}", binary=True) for lid in optical}

    out_arcs: dict[int, list] = {}
    in_arcs: dict[int, list] = {}
    for arc in arcs:
        out_arcs.setdefault(arc.tail, []).append(arc)
        in_arcs.setdefault(arc.head, []).append(arc)

    flow: dict[tuple[int, int], int] = {}
    for k, (prefix, _, _) in enumerate(commodities):
        for arc in arcs:
            flow[k, arc.id] = mb.var(f"{prefix}_a{arc.id}")

    for k, (prefix, src, sinks) in enumerate(commodities):
        label = prefix[2:]
        injection = {src: sum(sinks.values())}
        for snk, vol in sinks.items():
            injection[snk] = injection.get(snk, 0.0) - vol
        for node in t.nodes:
            terms = [(flow[k, a.id], 1.0) for a in out_arcs.get(node.id, ())]
            terms += [(flow[k, a.id], -1.0) for a in in_arcs.get(node.id, ())]
            inj = injection.get(node.id, 0.0)
            if inj:
                terms.append((lam, -inj))
            if terms:
                mb.constrain(terms, EQ, 0.0, f"flowcons:{label}:n{node.id}")

    for arc in arcs:
        terms = [(flow[k, arc.id], 1.0) for k in range(len(commodities))]
        if arc.link in y:
            terms.append((y[arc.link], -arc.capacity))
            mb.constrain(terms, LE, 0.0, f"optcap:a{arc.id}")
        else:
            mb.constrain(terms, LE, arc.capacity, f"cap:a{arc.id}")

    for node in t.nodes:
        if node.kind is not NodeKind.SERVER:
            continue
        for direction, table in (("out", out_arcs), ("in", in_arcs)):
            arcs_here = table.get(node.id, ())
            if arcs_here:
                terms = [(flow[k, a.id], 1.0) for a in arcs_here for k in range(len(commodities))]
                mb.constrain(terms, LE, t.server_rate_cap, f"srv_{direction}:n{node.id}")

    for gid in sorted({l.optical_group for l in optical.values()}):
        members = [l for l in optical.values() if l.optical_group == gid]
        for node_id, budget in sorted(groups[gid].budgets.items()):
            mine = [y[l.id] for l in members if node_id in (l.a, l.b)]
            if mine:
                mb.constrain([(v, 1.0) for v in mine], LE, float(budget), f"budget:g{gid}:n{node_id}")

    meta = {
        "arch": t.arch_tag,
        "topology_fingerprint": fingerprint(topology_to_document(t)),
        "demand_fingerprint": fingerprint([(x.source, x.sink, x.volume) for x in d.demands]),
        "lam": lam,
        "aggregate": aggregate,
        "commodities": [(src, sinks) for _, src, sinks in commodities],
        "flow": flow,
        "arcs": arcs,
        "circuits": y,
        "loopback_demands": [x.id for x in d.demands if x.colocated and x.volume > 0],
        "total_volume": d.total_volume,
    }
    return mb, meta


def build_stage1(t: Topology, d: DemandSet, aggregate: bool = False) -> OptModel:
    """Maximum concurrent flow model over the working arcs of ``t``.

    With ``aggregate=True`` demands sharing a mapper are merged into one
    commodity (flow variables ``f_s{N}_a{A}``). This has the same optimum for
    splittable flow and a much smaller model.

    Raises:
        FatalScenarioError: Some positive-volume demand has no path.
        DegenerateModelError: No demand needs the network.
    """
    mb, meta = _stage1_body(t, d, aggregate)
    meta["stage"] = 1
    return mb.build("max", [(meta["lam"], 1.0)], meta)


def _activation_arcs(t: Topology, node_id: int, arcs) -> list:
    node = t.nodes[node_id]
    if node.kind is NodeKind.OCS:
        owned = {g.id for g in t.groups if g.switch == node_id}
        links = {l.id for l in t.active_links if l.optical_group in owned}
        own_arcs = [a for a in arcs if a.link in links]
    else:
        own_arcs = []
    return own_arcs + [a for a in arcs if node_id in (a.tail, a.head) and a not in own_arcs]


def build_stage2(
    t: Topology,
    d: DemandSet,
    lambda_star: float,
    epsilon: float = 0.0,
    aggregate: bool = False,
    arc_cuts: bool = True,
) -> OptModel:
    """Minimum-power routing that keeps ``lam >= lambda_star / (1 + epsilon)``.

    With ``arc_cuts`` every arc a switch owns also gets ``flow_a <= cap_a * u_n``.
    These rows are implied by the node activation row for binary ``u_n``, so the
    optimum is unchanged, but they tighten the LP relaxation and shrink the
    branch-and-bound tree.
    """
    if not lambda_star > 0:
        raise ModelError("lambda_star must be > 0")
    if epsilon < 0:
        raise ModelError("epsilon must be >= 0")
    mb, meta = _stage1_body(t, d, aggregate)
    arcs, flow = meta["arcs"], meta["flow"]
    n_comm = len(meta["commodities"])
    activation = {}
    weights = []
    for node in t.nodes:
        if not node.kind.is_switch:
            continue
        u = mb.var(f"u_n{node.id}", binary=True)
        activation[node.id] = u
        weights.append((u, node.power_active - node.power_idle))
        own = _activation_arcs(t, node.id, arcs)
        if own:
            big_m = sum(a.capacity for a in own)
            terms = [(flow[k, a.id], 1.0) for a in own for k in range(n_comm)]
            terms.append((u, -big_m))
            mb.constrain(terms, LE, 0.0, f"activate:n{node.id}")
            if arc_cuts:
                for a in own:
                    cut = [(flow[k, a.id], 1.0) for k in range(n_comm)] + [(u, -a.capacity)]
                    mb.constrain(cut, LE, 0.0, f"arccut:n{node.id}:a{a.id}")
    floor = lambda_star / (1.0 + epsilon) * (1.0 - PIN_RELATIVE_SLACK)
    mb.constrain([(meta["lam"], 1.0)], GE, floor, "pin:lam")
    meta.update(stage=2, activation=activation, lambda_star=lambda_star, epsilon=epsilon)
    return mb.build("min", weights, meta)


def completion_time_from_lambda(lam: float) -> float:
    if not lam > 0:
        raise ValueError(f"lambda must be > 0, got {lam}")
    return 1.0 / lam


def export_lp(model: OptModel) -> str:
    from .lpformat import write_lp

    return write_lp(model)
