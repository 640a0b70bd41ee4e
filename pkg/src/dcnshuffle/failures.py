"""Link-failure scenarios and fatality classification.

A failure always takes out a whole link (both directions). A scenario is
*fatal* when some positive-volume demand loses every path from its mapper
to its reducer; such a job needs application-level recovery (re-running the
map task on a replica), which is outside what the optimizer models.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable

from .errors import ScenarioError
from .topology import Topology
from .workload import DemandSet


@dataclass(frozen=True)
class FailureScenario:
    name: str
    failed_links: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "failed_links", frozenset(int(l) for l in self.failed_links))


NO_FAILURE = FailureScenario("none")


@dataclass(frozen=True)
class Fatality:
    """Result of classifying a scenario; ``demands`` lists disconnected demand ids."""

    demands: tuple[int, ...] = ()

    @property
    def fatal(self) -> bool:
        return bool(self.demands)

    def __str__(self) -> str:
        return "fatal" if self.fatal else "nonfatal"


NON_FATAL = Fatality()


def apply_scenario(t: Topology, s: FailureScenario) -> Topology:
    """Return ``t`` with the scenario's links removed (on top of earlier failures)."""
    unknown = [l for l in s.failed_links if not 0 <= l < len(t.links)]
    if unknown:
        raise ScenarioError(f"scenario {s.name!r}: unknown link id(s) {sorted(unknown)}")
    if not s.failed_links:
        return t
    return replace(t, failed_links=t.failed_links | s.failed_links)


def reachable_from(t: Topology, source: int) -> set[int]:
    adj: dict[int, list[int]] = {}
    for arc in t.arcs():
        adj.setdefault(arc.tail, []).append(arc.head)
    seen = {source}
    queue = deque([source])
    while queue:
        for v in adj.get(queue.popleft(), ()):
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return seen


def classify_scenario(t: Topology, d: DemandSet, s: FailureScenario) -> Fatality:
    failed = apply_scenario(t, s)
    cache: dict[int, set[int]] = {}
    lost = []
    for dem in d.positive():
        if dem.source not in cache:
            cache[dem.source] = reachable_from(failed, dem.source)
        if dem.sink not in cache[dem.source]:
            lost.append(dem.id)
    return Fatality(tuple(lost))


def scenario_from_document(t: Topology, doc) -> FailureScenario:
    """Build a scenario from ``{"name": ..., "failed_links": [label or id, ...]}``."""
    if not isinstance(doc, dict) or "name" not in doc or "failed_links" not in doc:
        raise ScenarioError("scenario document needs 'name' and 'failed_links'")
    ids = []
    for ref in doc["failed_links"]:
        try:
            ids.append(t.find_link(ref).id)
        except KeyError as exc:
            raise ScenarioError(f"scenario {doc['name']!r}: {exc.args[0]}") from None
    if len(set(ids)) != len(ids):
        raise ScenarioError(f"scenario {doc['name']!r}: duplicate links")
    return FailureScenario(str(doc["name"]), frozenset(ids))


def scenario_to_document(t: Topology, s: FailureScenario) -> dict:
    return {"name": s.name, "failed_links": [t.link_label(l) for l in sorted(s.failed_links)]}


def load_suite(t: Topology, text: str) -> list[FailureScenario]:
    """Parse a scenario suite: ``{"scenarios": [scenario, ...]}`` or a bare list."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}: {exc.msg}") from None
    entries: Iterable = doc.get("scenarios", []) if isinstance(doc, dict) else doc
    scenarios = [scenario_from_document(t, e) for e in entries]
    names = [s.name for s in scenarios]
    if len(set(names)) != len(names):
        raise ScenarioError("scenario names must be unique")
    if NO_FAILURE.name in names:
        raise ScenarioError(f"scenario name {NO_FAILURE.name!r} is reserved for the baseline")
    return scenarios
