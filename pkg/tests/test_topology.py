from __future__ import annotations

import json
from dataclasses import replace

import pytest

from dcnshuffle.errors import ParameterError, TopologyParseError, TopologyValidationError
from dcnshuffle.topology import (
    ARCHITECTURES,
    Link,
    NodeKind,
    build_topology,
    load_topology,
    save_topology,
    topology_to_document,
    validate_topology,
)

from conftest import custom_topology


def kinds(t):
    out = {}
    for n in t.nodes:
        out[n.kind] = out.get(n.kind, 0) + 1
    return out


def test_fat_tree_counts():
    t = build_topology("fat-tree", k=4)
    c = kinds(t)
    assert c[NodeKind.SERVER] == 16
    assert c[NodeKind.CORE] == 4
    assert c[NodeKind.AGG] == 8
    assert c[NodeKind.TOR] == 8


@pytest.mark.parametrize("k", [2, 4, 6, 8])
def test_fat_tree_formulas(k):
    t = build_topology("fat-tree", k=k)
    switches = sum(1 for n in t.nodes if n.kind.is_switch)
    assert len(t.servers()) == k**3 // 4
    assert switches == 5 * k * k // 4
    # k/2 hosts + k/2 aggs per edge, k/2 cores per agg
    assert len(t.links) == k**3 // 4 * 3


def test_bcube_counts_and_degree():
    t = build_topology("bcube", n=4, level=1)
    assert len(t.servers()) == 16
    assert sum(1 for n in t.nodes if n.kind.is_switch) == 8
    assert all(t.degree(s.id) == 2 for s in t.servers())


@pytest.mark.parametrize("n,level", [(2, 0), (2, 1), (3, 1), (2, 2), (3, 2)])
def test_bcube_formulas(n, level):
    t = build_topology("bcube", n=n, level=level)
    assert len(t.servers()) == n ** (level + 1)
    assert sum(1 for x in t.nodes if x.kind.is_switch) == (level + 1) * n**level
    assert all(t.degree(s.id) == level + 1 for s in t.servers())


def test_dcell_counts():
    t = build_topology("dcell", n=4, level=1)
    assert len(t.servers()) == 20
    assert sum(1 for x in t.nodes if x.kind.is_switch) == 5
    assert validate_topology(t) == []
    assert all(t.degree(s.id) == 2 for s in t.servers())


def test_dcell_level2_recursion():
    t = build_topology("dcell", n=2, level=2)
    # t1 = 2*3 = 6, t2 = 6*7 = 42
    assert len(t.servers()) == 42
    assert validate_topology(t) == []


def test_pon_passive_and_four_racks():
    t = build_topology("pon-servercentric", racks=4, servers_per_group=1)
    pon = [n for n in t.nodes if n.kind is NodeKind.PON]
    assert pon and all(n.power_active == 0 and n.power_idle == 0 for n in pon)
    assert {n.label.split(".")[0] for n in t.servers()} == {f"rack{r}" for r in range(4)}
    assert all(t.degree(s.id) >= 2 for s in t.servers())


def test_pon_intra_group_mesh():
    t = build_topology("pon-servercentric", servers_per_group=3)
    mesh = [l for l in t.links if t.nodes[l.a].kind is NodeKind.SERVER and t.nodes[l.b].kind is NodeKind.SERVER]
    assert len(mesh) == 4 * 4 * 3


def test_c_through_structure():
    t = build_topology("c-through")
    assert len(t.groups) == 1
    g = t.groups[0]
    assert t.nodes[g.switch].kind is NodeKind.OCS
    assert len(t.group_links(0)) == 6
    assert set(g.budgets.values()) == {1}


def test_helios_structure():
    t = build_topology("helios")
    assert len(t.groups) == 2
    pods = [n.id for n in t.nodes if n.kind is NodeKind.POD]
    # per-pod budget summed over the optical cores
    for p in pods:
        assert sum(g.budgets[p] for g in t.groups) == 2


def test_spine_leaf_bipartite():
    t = build_topology("spine-leaf", spines=3, leaves=4)
    leaves = [n.id for n in t.nodes if n.label.startswith("leaf") and "." not in n.label]
    spines = [n.id for n in t.nodes if n.label.startswith("spine")]
    pairs = {frozenset((l.a, l.b)) for l in t.links}
    assert all(frozenset((a, b)) in pairs for a in leaves for b in spines)


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_all_generated_valid(arch):
    t = build_topology(arch)
    assert validate_topology(t) == []


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_arc_expansion_exact(arch):
    t = build_topology(arch)
    arcs = t.arcs()
    assert len(arcs) == 2 * len(t.links)
    for fwd, rev in zip(arcs[::2], arcs[1::2]):
        assert (fwd.tail, fwd.head) == (rev.head, rev.tail)
        assert fwd.capacity == rev.capacity and fwd.link == rev.link


@pytest.mark.parametrize(
    "arch,params,match",
    [
        ("fat-tree", {"k": 3}, "even"),
        ("fat-tree", {"k": 0}, "even"),
        ("bcube", {"n": 1}, "n must"),
        ("bcube", {"level": -1}, "level"),
        ("dcell", {"n": 1}, "n must"),
        ("spine-leaf", {"spines": 0}, "spines"),
        ("fat-tree", {"bogus": 1}, "bogus"),
        ("nope", {}, "unknown architecture"),
    ],
)
def test_bad_params(arch, params, match):
    with pytest.raises(ParameterError, match=match):
        build_topology(arch, params)


def test_validate_zero_capacity():
    t = build_topology("fat-tree", k=4)
    links = list(t.links)
    links[3] = replace(links[3], capacity=0.0)
    report = validate_topology(replace(t, links=tuple(links)))
    assert any("capacity > 0" in v for v in report)


def test_validate_isolated_server():
    t = custom_topology("ssws", [(0, 2), (1, 2)])
    assert any("connected" in v for v in validate_topology(t))


def test_validate_power_and_ids():
    t = custom_topology("sws", [(0, 1), (1, 2)])
    nodes = list(t.nodes)
    nodes[1] = replace(nodes[1], power_idle=500.0)
    assert validate_topology(replace(t, nodes=tuple(nodes)))
    links = (Link(0, 0, 1, 1000.0), Link(5, 1, 2, 1000.0))
    assert validate_topology(replace(t, links=links))


def test_validate_passive_must_be_zero():
    t = custom_topology("sps", [(0, 1), (1, 2)], power={1: (5.0, 0.0)})
    assert validate_topology(t)


@pytest.mark.parametrize("arch", ARCHITECTURES)
def test_round_trip(arch):
    t = build_topology(arch)
    back = load_topology(save_topology(t))
    assert back == t
    assert save_topology(back) == save_topology(t)


def test_save_deterministic_field_order():
    doc = json.loads(save_topology(build_topology("spine-leaf")))
    assert list(doc) == ["arch_tag", "server_rate_cap_mbps", "nodes", "links", "groups"]
    assert list(doc["links"][0])[:4] == ["id", "a", "b", "capacity_mbps"]


def test_missing_capacity_named():
    doc = topology_to_document(build_topology("spine-leaf"))
    del doc["links"][2]["capacity_mbps"]
    with pytest.raises(TopologyParseError, match="capacity_mbps"):
        load_topology(json.dumps(doc))


def test_parse_error_has_line():
    with pytest.raises(TopologyParseError, match="line"):
        load_topology('{"nodes": [\n  {"id": 0,,}\n]}')


def test_load_invalid_semantics():
    doc = topology_to_document(build_topology("spine-leaf"))
    doc["links"][0]["capacity_mbps"] = -1
    with pytest.raises(TopologyValidationError) as info:
        load_topology(json.dumps(doc))
    assert any("capacity" in v for v in info.value.violations)


def test_shipped_pon_document(data_dir):
    t = load_topology((data_dir / "topologies" / "pon-servercentric.json").read_text())
    assert t.arch_tag == "pon-servercentric"
    assert validate_topology(t) == []
    assert len({n.label.split(".")[0] for n in t.servers()}) == 4


def test_find_link_both_orientations():
    t = build_topology("spine-leaf")
    l = t.find_link("leaf0--spine0")
    assert t.find_link("spine0--leaf0") == l
    assert t.find_link(l.id) == l
    with pytest.raises(KeyError):
        t.find_link("leaf0--spine9")


def test_capacity_override_and_power():
    t = build_topology("spine-leaf", capacity_overrides={"leaf0--spine0": 250}, power={"tor": (300, 150)})
    assert t.find_link("leaf0--spine0").capacity == 250
    assert t.find_node("leaf0").power_active == 300
