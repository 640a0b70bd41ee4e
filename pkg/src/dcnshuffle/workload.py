"""Shuffle demand sets for GraySort-style jobs.

The intermediate data of a sort equals its input, and a uniform key
partition spreads it evenly: every mapper sends ``V / (M * R)`` to every
reducer. A per-pair weight matrix can skew that split.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PlacementError
from .topology import NodeKind, Topology


@dataclass(frozen=True)
class Placement:
    mappers: tuple[int, ...]
    reducers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "mappers", tuple(int(m) for m in self.mappers))
        object.__setattr__(self, "reducers", tuple(int(r) for r in self.reducers))


@dataclass(frozen=True)
class Demand:
    id: int
    source: int
    sink: int
    volume: float  # MBytes

    @property
    def colocated(self) -> bool:
        return self.source == self.sink


@dataclass(frozen=True)
class DemandSet:
    demands: tuple[Demand, ...]
    total_volume: float

    def positive(self) -> list[Demand]:
        """Demands that need the network: positive volume and not colocated."""
        return [d for d in self.demands if d.volume > 0 and not d.colocated]

    def scaled(self, factor: float) -> DemandSet:
        return DemandSet(
            tuple(Demand(d.id, d.source, d.sink, d.volume * factor) for d in self.demands),
            self.total_volume * factor,
        )


def validate_placement(t: Topology, p: Placement) -> list[str]:
    out = []
    n = len(t.nodes)
    if not p.mappers:
        out.append("at least one mapper")
    if not p.reducers:
        out.append("at least one reducer")
    for role, ids in (("mapper", p.mappers), ("reducer", p.reducers)):
        for i in ids:
            if not 0 <= i < n:
                out.append(f"{role} {i}: unknown node")
            elif t.nodes[i].kind is not NodeKind.SERVER:
                out.append(f"{role} {i} ({t.nodes[i].label}): not a server")
        if len(set(ids)) != len(ids):
            out.append(f"duplicate server in {role} list")
    return out


def make_graysort_demands(
    total_volume: float,
    placement: Placement,
    topology: Topology | None = None,
    weights: Sequence[Sequence[float]] | None = None,
) -> DemandSet:
    """Split ``total_volume`` MBytes over every mapper->reducer pair.

    Demand ids run mapper-major: demand ``i * R + j`` goes from mapper ``i``
    to reducer ``j``. With ``weights`` (an M x R non-negative matrix) the
    volume is split proportionally instead of uniformly.

    Raises:
        PlacementError: If the placement is invalid (checked against
            ``topology`` when given) or ``total_volume`` is negative.
    """
    if total_volume < 0:
        raise PlacementError("total_volume must be >= 0")
    if topology is not None:
        problems = validate_placement(topology, placement)
        if problems:
            raise PlacementError("; ".join(problems))
    m, r = len(placement.mappers), len(placement.reducers)
    if m == 0 or r == 0:
        raise PlacementError("placement needs at least one mapper and one reducer")
    if weights is None:
        share = np.full((m, r), 1.0 / (m * r))
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (m, r) or (w < 0).any() or w.sum() <= 0:
            raise PlacementError(f"weights must be a non-negative {m}x{r} matrix with positive sum")
        share = w / w.sum()
    demands = []
    for i, src in enumerate(placement.mappers):
        for j, dst in enumerate(placement.reducers):
            demands.append(Demand(i * r + j, src, dst, float(total_volume * share[i, j])))
    return DemandSet(tuple(demands), float(total_volume))


def default_placement(t: Topology, mappers: int = 10, reducers: int = 6) -> Placement:
    """First ``mappers`` servers map, the next ``reducers`` reduce.

    Servers are reused (round-robin) only when the topology has too few.
    """
    servers = [n.id for n in t.servers()]
    if not servers:
        raise PlacementError("topology has no servers")
    if len(servers) < mappers or len(servers) < reducers:
        raise PlacementError(f"need at least {max(mappers, reducers)} servers, have {len(servers)}")
    ms = servers[:mappers]
    rs = [servers[(mappers + j) % len(servers)] for j in range(reducers)]
    return Placement(tuple(ms), tuple(rs))


def placement_to_document(t: Topology, p: Placement) -> dict:
    return {
        "mappers": [t.nodes[i].label for i in p.mappers],
        "reducers": [t.nodes[i].label for i in p.reducers],
    }


def placement_from_document(t: Topology, doc) -> Placement:
    """Resolve a placement document listing server labels (or node ids)."""
    if isinstance(doc, str):
        doc = json.loads(doc)
    ids = {}
    for role in ("mappers", "reducers"):
        if role not in doc:
            raise PlacementError(f"placement document missing '{role}'")
        resolved = []
        for ref in doc[role]:
            try:
                resolved.append(t.find_node(ref).id)
            except (KeyError, IndexError):
                raise PlacementError(f"{role}: unknown server {ref!r}") from None
        ids[role] = tuple(resolved)
    p = Placement(ids["mappers"], ids["reducers"])
    problems = validate_placement(t, p)
    if problems:
        raise PlacementError("; ".join(problems))
    return p
