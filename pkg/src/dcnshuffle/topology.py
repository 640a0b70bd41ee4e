"""Data-center network topologies as capacitated graphs with power annotations.

Seven families are generated here: Spine-and-Leaf, Fat-Tree, BCube, DCell,
c-Through, Helios and a server-centric PON design. Every undirected link
expands to two directed arcs with ids ``2 * link.id`` (a -> b) and
``2 * link.id + 1`` (b -> a), so arc ids stay stable when links fail.

Hybrid designs carry *optical constraint groups*: the candidate circuits of
an optical circuit switch, together with a per-endpoint transceiver budget
that limits how many circuits each ToR or pod can hold at once.
"""

from __future__ import annotations

import enum
import json
from collections import deque
from dataclasses import dataclass, field, replace
from itertools import combinations, product
from typing import Any, Iterable, Mapping

from .errors import ParameterError, TopologyParseError, TopologyValidationError

DEFAULT_CAPACITY = 1000.0  # MBytes/s per direction
DEFAULT_SERVER_RATE = 1000.0  # MBytes/s


class NodeKind(str, enum.Enum):
    SERVER = "server"
    TOR = "tor"
    AGG = "agg"
    CORE = "core"
    POD = "pod"
    ELECTRICAL_CORE = "electrical_core"
    OCS = "ocs"
    PON = "pon"

    @property
    def is_switch(self) -> bool:
        return self not in (NodeKind.SERVER, NodeKind.PON)


# (active W, idle W). Placeholder values; override per kind via ``power=``.
DEFAULT_POWER: dict[NodeKind, tuple[float, float]] = {
    NodeKind.SERVER: (15.0, 15.0),
    NodeKind.TOR: (200.0, 100.0),
    NodeKind.AGG: (200.0, 100.0),
    NodeKind.CORE: (200.0, 100.0),
    NodeKind.POD: (200.0, 100.0),
    NodeKind.ELECTRICAL_CORE: (200.0, 100.0),
    NodeKind.OCS: (100.0, 50.0),
    NodeKind.PON: (0.0, 0.0),
}


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    label: str
    power_active: float
    power_idle: float


@dataclass(frozen=True)
class Link:
    id: int
    a: int
    b: int
    capacity: float
    optical_group: int | None = None


@dataclass(frozen=True)
class OpticalConstraintGroup:
    """Candidate circuits of one optical circuit switch.

    ``budgets`` maps every endpoint node id to the number of circuits it may
    terminate simultaneously. ``switch`` is the node id of the switch that
    realises the circuits; its activation follows the circuit flows.
    """

    id: int
    budgets: Mapping[int, int]
    switch: int | None = None

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Arc:
    id: int
    link: int
    tail: int
    head: int
    capacity: float


@dataclass(frozen=True, eq=True)
class Topology:
    nodes: tuple[Node, ...]
    links: tuple[Link, ...]
    groups: tuple[OpticalConstraintGroup, ...] = ()
    server_rate_cap: float = DEFAULT_SERVER_RATE
    arch_tag: str = "custom"
    failed_links: frozenset[int] = field(default_factory=frozenset)

    __hash__ = None  # type: ignore[assignment]

    # -- lookups -----------------------------------------------------------

    @property
    def active_links(self) -> tuple[Link, ...]:
        if not self.failed_links:
            return self.links
        return tuple(l for l in self.links if l.id not in self.failed_links)

    def node(self, node_id: int) -> Node:
        return self.nodes[node_id]

    def link(self, link_id: int) -> Link:
        return self.links[link_id]

    def servers(self) -> list[Node]:
        return [n for n in self.nodes if n.kind is NodeKind.SERVER]

    def arcs(self) -> list[Arc]:
        """Directed arcs of all working links, in arc-id order."""
        out = []
        for l in self.active_links:
            out.append(Arc(2 * l.id, l.id, l.a, l.b, l.capacity))
            out.append(Arc(2 * l.id + 1, l.id, l.b, l.a, l.capacity))
        return out

    def incident_links(self, node_id: int) -> list[Link]:
        return [l for l in self.active_links if node_id in (l.a, l.b)]

    def degree(self, node_id: int) -> int:
        return len(self.incident_links(node_id))

    def group_links(self, group_id: int) -> list[Link]:
        return [l for l in self.active_links if l.optical_group == group_id]

    def link_label(self, link: Link | int) -> str:
        if isinstance(link, int):
            link = self.links[link]
        label = f"{self.nodes[link.a].label}--{self.nodes[link.b].label}"
        if link.optical_group is not None:
            label += f"@g{link.optical_group}"
        return label

    def find_link(self, ref: str | int) -> Link:
        """Resolve a link by id or by its stable label (either orientation)."""
        if isinstance(ref, int) or (isinstance(ref, str) and ref.isdigit()):
            idx = int(ref)
            if 0 <= idx < len(self.links):
                return self.links[idx]
            raise KeyError(f"unknown link id {idx}")
        labels = self._label_index()
        if ref in labels:
            return self.links[labels[ref]]
        raise KeyError(f"unknown link label {ref!r}")

    def find_node(self, ref: str | int) -> Node:
        if isinstance(ref, int):
            return self.nodes[ref]
        for n in self.nodes:
            if n.label == ref:
                return n
        raise KeyError(f"unknown node label {ref!r}")

    def _label_index(self) -> dict[str, int]:
        idx: dict[str, int] = {}
        for l in self.links:
            fwd = self.link_label(l)
            a, b = self.nodes[l.a].label, self.nodes[l.b].label
            suffix = fwd[len(a) + len(b) + 2:]
            idx[fwd] = l.id
            idx.setdefault(f"{b}--{a}{suffix}", l.id)
        return idx

    def with_server_rate_cap(self, cap: float) -> Topology:
        return replace(self, server_rate_cap=float(cap))


# -- generators -----------------------------------------------------------


class _Builder:
    def __init__(self, power: Mapping[Any, tuple[float, float]] | None):
        self.power = dict(DEFAULT_POWER)
        for kind, value in (power or {}).items():
            self.power[NodeKind(kind)] = (float(value[0]), float(value[1]))
        self.nodes: list[Node] = []
        self.links: list[Link] = []
        self.groups: list[OpticalConstraintGroup] = []

    def node(self, kind: NodeKind, label: str) -> int:
        active, idle = self.power[kind]
        self.nodes.append(Node(len(self.nodes), kind, label, active, idle))
        return len(self.nodes) - 1

    def link(self, a: int, b: int, capacity: float, group: int | None = None) -> int:
        self.links.append(Link(len(self.links), a, b, float(capacity), group))
        return len(self.links) - 1

    def circuit_group(self, switch: int, endpoints: list[int], budget: int, capacity: float):
        gid = len(self.groups)
        self.groups.append(
            OpticalConstraintGroup(gid, {e: int(budget) for e in endpoints}, switch)
        )
        for a, b in combinations(endpoints, 2):
            self.link(a, b, capacity, gid)

    def build(self, arch: str, server_rate_cap: float) -> Topology:
        return Topology(
            tuple(self.nodes), tuple(self.links), tuple(self.groups),
            float(server_rate_cap), arch,
        )


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ParameterError(message)


def _positive_int(params: dict, name: str, minimum: int = 1) -> int:
    value = params[name]
    _require(isinstance(value, int) and value >= minimum, f"{name} must be an integer >= {minimum}")
    return value


def _spine_leaf(b: _Builder, p: dict) -> None:
    spines = _positive_int(p, "spines")
    leaves = _positive_int(p, "leaves")
    per_leaf = _positive_int(p, "servers_per_leaf")
    leaf_ids = [b.node(NodeKind.TOR, f"leaf{i}") for i in range(leaves)]
    spine_ids = [b.node(NodeKind.CORE, f"spine{i}") for i in range(spines)]
    for i, leaf in enumerate(leaf_ids):
        for j in range(per_leaf):
            s = b.node(NodeKind.SERVER, f"leaf{i}.server{j}")
            b.link(s, leaf, p["capacity"])
    for leaf, spine in product(leaf_ids, spine_ids):
        b.link(leaf, spine, p["capacity"])


def _fat_tree(b: _Builder, p: dict) -> None:
    k = p["k"]
    _require(isinstance(k, int) and k >= 2 and k % 2 == 0, "fat-tree k must be even and >= 2")
    half = k // 2
    cap = p["capacity"]
    core = [b.node(NodeKind.CORE, f"core{i}") for i in range(half * half)]
    for pod in range(k):
        aggs = [b.node(NodeKind.AGG, f"pod{pod}.agg{i}") for i in range(half)]
        edges = [b.node(NodeKind.TOR, f"pod{pod}.edge{i}") for i in range(half)]
        for e, edge in enumerate(edges):
            for h in range(half):
                s = b.node(NodeKind.SERVER, f"pod{pod}.edge{e}.server{h}")
                b.link(s, edge, cap)
        for edge, agg in product(edges, aggs):
            b.link(edge, agg, cap)
        for i, agg in enumerate(aggs):
            for j in range(half):
                b.link(agg, core[i * half + j], cap)


def _bcube(b: _Builder, p: dict) -> None:
    n = _positive_int(p, "n", 2)
    level = p["level"]
    _require(isinstance(level, int) and level >= 0, "bcube level must be an integer >= 0")
    digits = level + 1
    addrs = list(product(range(n), repeat=digits))
    servers = {a: b.node(NodeKind.SERVER, "server" + "".join(map(str, a))) for a in addrs}
    for lvl in range(digits):
        # one switch per assignment of the other digits
        for rest in product(range(n), repeat=level):
            sw = b.node(NodeKind.TOR, f"sw{lvl}.{''.join(map(str, rest))}")
            for d in range(n):
                addr = rest[: digits - 1 - lvl] + (d,) + rest[digits - 1 - lvl:]
                b.link(servers[addr], sw, p["capacity"])


def _dcell_count(n: int, level: int) -> int:
    t = n
    for _ in range(level):
        t = t * (t + 1)
    return t


def _dcell(b: _Builder, p: dict) -> None:
    n = _positive_int(p, "n", 2)
    level = p["level"]
    _require(isinstance(level, int) and level >= 0, "dcell level must be an integer >= 0")
    _require(_dcell_count(n, level) <= 100_000, "dcell instance too large")
    cap = p["capacity"]

    def build(lvl: int, prefix: tuple[int, ...]) -> list[int]:
        if lvl == 0:
            sw = b.node(NodeKind.TOR, "cell" + ".".join(map(str, prefix)) + ".sw" if prefix else "sw")
            out = []
            for j in range(n):
                s = b.node(NodeKind.SERVER, "server" + ".".join(map(str, prefix + (j,))))
                b.link(s, sw, cap)
                out.append(s)
            return out
        t_prev = _dcell_count(n, lvl - 1)
        cells = [build(lvl - 1, prefix + (i,)) for i in range(t_prev + 1)]
        for i in range(t_prev + 1):
            for j in range(i + 1, t_prev + 1):
                b.link(cells[i][j - 1], cells[j][i], cap)
        return [s for cell in cells for s in cell]

    build(level, ())


def _c_through(b: _Builder, p: dict) -> None:
    tors = _positive_int(p, "tors", 2)
    per_tor = _positive_int(p, "servers_per_tor")
    budget = _positive_int(p, "budget")
    cap = p["capacity"]
    tor_ids = [b.node(NodeKind.TOR, f"tor{i}") for i in range(tors)]
    core = b.node(NodeKind.CORE, "core0")
    ocs = b.node(NodeKind.OCS, "ocs0")
    for i, tor in enumerate(tor_ids):
        for j in range(per_tor):
            s = b.node(NodeKind.SERVER, f"tor{i}.server{j}")
            b.link(s, tor, cap)
    for tor in tor_ids:
        b.link(tor, core, p.get("electrical_capacity", cap))
    b.circuit_group(ocs, tor_ids, budget, p.get("optical_capacity", cap))


def _helios(b: _Builder, p: dict) -> None:
    pods = _positive_int(p, "pods", 2)
    per_pod = _positive_int(p, "servers_per_pod")
    n_elec = _positive_int(p, "electrical_cores")
    n_opt = _positive_int(p, "optical_cores")
    budget = _positive_int(p, "budget")
    cap = p["capacity"]
    pod_ids = [b.node(NodeKind.POD, f"pod{i}") for i in range(pods)]
    elec = [b.node(NodeKind.ELECTRICAL_CORE, f"ecore{i}") for i in range(n_elec)]
    opt = [b.node(NodeKind.OCS, f"ocs{i}") for i in range(n_opt)]
    for i, pod in enumerate(pod_ids):
        for j in range(per_pod):
            s = b.node(NodeKind.SERVER, f"pod{i}.server{j}")
            b.link(s, pod, cap)
    for pod, e in product(pod_ids, elec):
        b.link(pod, e, p.get("electrical_capacity", cap))
    for o in opt:
        b.circuit_group(o, pod_ids, budget, p.get("optical_capacity", cap))


def _pon(b: _Builder, p: dict) -> None:
    racks = _positive_int(p, "racks", 2)
    groups = _positive_int(p, "groups_per_rack")
    per_group = _positive_int(p, "servers_per_group")
    cap = p["capacity"]
    servers = {}
    for r in range(racks):
        for g in range(groups):
            for s in range(per_group):
                servers[r, g, s] = b.node(NodeKind.SERVER, f"rack{r}.group{g}.server{s}")
    # intra-rack star coupler
    for r in range(racks):
        coupler = b.node(NodeKind.PON, f"rack{r}.coupler")
        for g, s in product(range(groups), range(per_group)):
            b.link(servers[r, g, s], coupler, cap)
    # inter-rack passive path joining the same group position of every rack
    for g in range(groups):
        splitter = b.node(NodeKind.PON, f"interrack.group{g}")
        for r, s in product(range(racks), range(per_group)):
            b.link(servers[r, g, s], splitter, cap)
    for r, g in product(range(racks), range(groups)):
        for s, t in combinations(range(per_group), 2):
            b.link(servers[r, g, s], servers[r, g, t], cap)


_FAMILIES = {
    "spine-leaf": (_spine_leaf, {"spines": 2, "leaves": 4, "servers_per_leaf": 4}),
    "fat-tree": (_fat_tree, {"k": 4}),
    "bcube": (_bcube, {"n": 4, "level": 1}),
    "dcell": (_dcell, {"n": 4, "level": 1}),
    "c-through": (_c_through, {"tors": 4, "servers_per_tor": 4, "budget": 1}),
    "helios": (
        _helios,
        {"pods": 4, "servers_per_pod": 4, "electrical_cores": 1, "optical_cores": 2, "budget": 1},
    ),
    "pon-servercentric": (_pon, {"racks": 4, "groups_per_rack": 4, "servers_per_group": 1}),
}

ARCHITECTURES = tuple(_FAMILIES)
FAMILY_DEFAULTS = {arch: dict(defaults) for arch, (_, defaults) in _FAMILIES.items()}


def build_topology(arch: str, params: Mapping[str, Any] | None = None, **kwargs: Any) -> Topology:
    """Generate a topology of one of the seven families.

    Args:
        arch: Family tag, one of ``ARCHITECTURES``.
        params: Family parameters; missing entries take the family defaults.
            Common keys: ``capacity`` (MBytes/s, all links),
            ``server_rate_cap`` (MBytes/s), ``power`` (kind -> (active, idle)
            watts) and ``capacity_overrides`` (link label -> MBytes/s).
        **kwargs: Merged over ``params``.

    Raises:
        ParameterError: If the family is unknown or a parameter is invalid.
    """
    if arch not in _FAMILIES:
        raise ParameterError(f"unknown architecture {arch!r}; expected one of {', '.join(ARCHITECTURES)}")
    gen, defaults = _FAMILIES[arch]
    p = {**defaults, "capacity": DEFAULT_CAPACITY, "server_rate_cap": DEFAULT_SERVER_RATE}
    p.update(params or {})
    p.update(kwargs)
    unknown = set(p) - set(defaults) - {
        "capacity", "server_rate_cap", "power", "capacity_overrides",
        "electrical_capacity", "optical_capacity",
    }
    _require(not unknown, f"unknown parameter(s) for {arch}: {', '.join(sorted(unknown))}")
    _require(float(p["capacity"]) > 0, "capacity must be > 0")
    _require(float(p["server_rate_cap"]) > 0, "server_rate_cap must be > 0")
    b = _Builder(p.get("power"))
    gen(b, p)
    t = b.build(arch, p["server_rate_cap"])
    overrides = p.get("capacity_overrides") or {}
    if overrides:
        links = list(t.links)
        for ref, cap in overrides.items():
            try:
                l = t.find_link(ref)
            except KeyError as exc:
                raise ParameterError(str(exc)) from None
            _require(float(cap) > 0, f"capacity override for {ref!r} must be > 0")
            links[l.id] = replace(l, capacity=float(cap))
        t = replace(t, links=tuple(links))
    return t


# -- validation -----------------------------------------------------------


def _connected(n_nodes: int, links: Iterable[Link]) -> bool:
    if n_nodes == 0:
        return True
    adj: list[list[int]] = [[] for _ in range(n_nodes)]
    for l in links:
        adj[l.a].append(l.b)
        adj[l.b].append(l.a)
    seen = {0}
    queue = deque([0])
    while queue:
        for v in adj[queue.popleft()]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == n_nodes


def validate_topology(t: Topology) -> list[str]:
    """Check every structural invariant; an empty list means the topology is valid."""
    out: list[str] = []
    n = len(t.nodes)
    if [v.id for v in t.nodes] != list(range(n)):
        out.append("node ids dense and unique")
    if [l.id for l in t.links] != list(range(len(t.links))):
        out.append("link ids dense and unique")
    if not t.server_rate_cap > 0:
        out.append("server_rate_cap > 0")
    for v in t.nodes:
        if not 0 <= v.power_idle <= v.power_active:
            out.append(f"node {v.id}: 0 <= power_idle <= power_active")
        if v.kind is NodeKind.PON and (v.power_active != 0 or v.power_idle != 0):
            out.append(f"node {v.id}: passive component must draw 0 W")
    group_ids = {g.id for g in t.groups}
    if len(group_ids) != len(t.groups):
        out.append("group ids unique")
    ok_links = []
    for l in t.links:
        if not (0 <= l.a < n and 0 <= l.b < n):
            out.append(f"link {l.id}: endpoints must exist")
            continue
        if l.a == l.b:
            out.append(f"link {l.id}: endpoints distinct")
        if not l.capacity > 0:
            out.append(f"link {l.id}: capacity > 0")
        if l.optical_group is not None and l.optical_group not in group_ids:
            out.append(f"link {l.id}: unknown optical group {l.optical_group}")
        ok_links.append(l)
    by_group = {g.id: g for g in t.groups}
    for l in ok_links:
        if l.optical_group in by_group:
            budgets = by_group[l.optical_group].budgets
            if l.a not in budgets or l.b not in budgets:
                out.append(f"link {l.id}: endpoints missing from group {l.optical_group} budgets")
    for g in t.groups:
        for node_id, k in g.budgets.items():
            if not (isinstance(k, int) and k >= 1):
                out.append(f"group {g.id}: budget for node {node_id} must be >= 1")
        if g.switch is not None and not (0 <= g.switch < n):
            out.append(f"group {g.id}: unknown switch node {g.switch}")
    for f in t.failed_links:
        if not 0 <= f < len(t.links):
            out.append(f"failed link {f} is not a link id")
    electrical = [l for l in ok_links if l.optical_group is None]
    # a circuit switch hangs off its endpoints rather than off wired links
    for g in t.groups:
        if g.switch is not None and 0 <= g.switch < n:
            electrical += [Link(-1, g.switch, e, 1.0) for e in g.budgets if 0 <= e < n]
    if not _connected(n, electrical):
        out.append("connected")
    return out


# -- documents ------------------------------------------------------------


def topology_to_document(t: Topology) -> dict:
    doc: dict[str, Any] = {
        "arch_tag": t.arch_tag,
        "server_rate_cap_mbps": t.server_rate_cap,
        "nodes": [
            {
                "id": v.id,
                "kind": v.kind.value,
                "label": v.label,
                "power_active_w": v.power_active,
                "power_idle_w": v.power_idle,
            }
            for v in t.nodes
        ],
        "links": [],
        "groups": [],
    }
    for l in t.links:
        entry: dict[str, Any] = {"id": l.id, "a": l.a, "b": l.b, "capacity_mbps": l.capacity}
        if l.optical_group is not None:
            entry["optical_group"] = l.optical_group
        doc["links"].append(entry)
    for g in t.groups:
        entry = {"id": g.id, "budgets": {str(k): v for k, v in sorted(g.budgets.items())}}
        if g.switch is not None:
            entry["switch"] = g.switch
        doc["groups"].append(entry)
    if t.failed_links:
        doc["failed_links"] = sorted(t.failed_links)
    return doc


def save_topology(t: Topology, path=None) -> str:
    """Serialise to the JSON topology document; also write it when ``path`` is given."""
    text = json.dumps(topology_to_document(t), indent=2) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _field(entry: Mapping, name: str, where: str, kind=None):
    if not isinstance(entry, Mapping):
        raise TopologyParseError(f"{where}: expected an object")
    if name not in entry:
        raise TopologyParseError(f"{where}: missing field '{name}'")
    value = entry[name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TopologyParseError(f"{where}: field '{name}' must be a number")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise TopologyParseError(f"{where}: field '{name}' must be an integer")
    if kind is str and not isinstance(value, str):
        raise TopologyParseError(f"{where}: field '{name}' must be a string")
    return value


def topology_from_document(doc: Mapping, validate: bool = True) -> Topology:
    nodes = []
    for i, e in enumerate(_field(doc, "nodes", "document")):
        where = f"nodes[{i}]"
        kind = _field(e, "kind", where, str)
        try:
            kind = NodeKind(kind)
        except ValueError:
            raise TopologyParseError(f"{where}: unknown node kind {kind!r}") from None
        nodes.append(Node(
            _field(e, "id", where, int), kind, _field(e, "label", where, str),
            _field(e, "power_active_w", where, float), _field(e, "power_idle_w", where, float),
        ))
    links = []
    for i, e in enumerate(_field(doc, "links", "document")):
        where = f"links[{i}]"
        group = e.get("optical_group") if isinstance(e, Mapping) else None
        if group is not None and (isinstance(group, bool) or not isinstance(group, int)):
            raise TopologyParseError(f"{where}: field 'optical_group' must be an integer")
        links.append(Link(
            _field(e, "id", where, int), _field(e, "a", where, int), _field(e, "b", where, int),
            _field(e, "capacity_mbps", where, float), group,
        ))
    groups = []
    for i, e in enumerate(doc.get("groups", [])):
        where = f"groups[{i}]"
        raw = _field(e, "budgets", where)
        if not isinstance(raw, Mapping):
            raise TopologyParseError(f"{where}: field 'budgets' must be an object")
        try:
            budgets = {int(k): int(v) for k, v in raw.items()}
        except (TypeError, ValueError):
            raise TopologyParseError(f"{where}: budgets must map node ids to integers") from None
        groups.append(OpticalConstraintGroup(_field(e, "id", where, int), budgets, e.get("switch")))
    t = Topology(
        tuple(nodes), tuple(links), tuple(groups),
        _field(doc, "server_rate_cap_mbps", "document", float),
        _field(doc, "arch_tag", "document", str),
        frozenset(int(x) for x in doc.get("failed_links", [])),
    )
    if validate:
        violations = validate_topology(t)
        if violations:
            raise TopologyValidationError(violations)
    return t


def load_topology(document: str, validate: bool = True) -> Topology:
    """Parse a JSON topology document (text, not a path)."""
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise TopologyParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, Mapping):
        raise TopologyParseError("document: expected a JSON object")
    return topology_from_document(doc, validate=validate)


def read_topology(path, validate: bool = True) -> Topology:
    with open(path, encoding="utf-8") as fh:
        return load_topology(fh.read(), validate=validate)
