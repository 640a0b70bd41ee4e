from __future__ import annotations

import os
from importlib import resources

import pytest
from hypothesis import HealthCheck, settings

from dcnshuffle.topology import DEFAULT_POWER, Link, Node, NodeKind, Topology
from dcnshuffle.workload import Demand, DemandSet

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_KIND = {"s": NodeKind.SERVER, "w": NodeKind.TOR, "c": NodeKind.CORE, "p": NodeKind.PON}


def custom_topology(kinds: str, edges, server_rate_cap: float = 1e9, power=None) -> Topology:
    """Small hand-made topology.

    ``kinds`` has one letter per node (s server, w switch, c core, p passive);
    ``edges`` lists ``(a, b)`` or ``(a, b, capacity)``.
    """
    nodes = []
    for i, ch in enumerate(kinds):
        kind = _KIND[ch]
        active, idle = (power or {}).get(i, DEFAULT_POWER[kind])
        nodes.append(Node(i, kind, f"{kind.value}{i}", active, idle))
    links = []
    for j, e in enumerate(edges):
        a, b = e[0], e[1]
        cap = e[2] if len(e) > 2 else 1000.0
        links.append(Link(j, a, b, float(cap)))
    return Topology(tuple(nodes), tuple(links), (), float(server_rate_cap), "custom")


def demand_set(*triples) -> DemandSet:
    """DemandSet from ``(source, sink, volume)`` triples."""
    demands = tuple(Demand(i, s, t, float(v)) for i, (s, t, v) in enumerate(triples))
    return DemandSet(demands, float(sum(v for _, _, v in triples)))


@pytest.fixture(scope="session")
def data_dir():
    return resources.files("dcnshuffle") / "data"


@pytest.fixture(scope="session")
def suite_config_path(data_dir):
    return str(data_dir / "paper_suite.cfg")
