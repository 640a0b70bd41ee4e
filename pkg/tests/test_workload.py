from __future__ import annotations

import math

import pytest

from dcnshuffle.errors import PlacementError
from dcnshuffle.topology import build_topology
from dcnshuffle.workload import (
    Placement,
    default_placement,
    make_graysort_demands,
    placement_from_document,
    placement_to_document,
    validate_placement,
)


@pytest.fixture
def fat_tree():
    return build_topology("fat-tree", k=4)


def test_uniform_split(fat_tree):
    d = make_graysort_demands(6000.0, default_placement(fat_tree), fat_tree)
    assert len(d.demands) == 60
    assert all(x.volume == 100.0 for x in d.demands)
    assert d.total_volume == 6000.0


def test_zero_volume(fat_tree):
    d = make_graysort_demands(0.0, default_placement(fat_tree), fat_tree)
    assert len(d.demands) == 60
    assert all(x.volume == 0 for x in d.demands)
    assert d.positive() == []


def test_twenty_gb_total(fat_tree):
    d = make_graysort_demands(20_000.0, default_placement(fat_tree), fat_tree)
    assert math.isclose(math.fsum(x.volume for x in d.demands), 20_000.0, rel_tol=1e-12)


def test_mapper_major_ids(fat_tree):
    p = default_placement(fat_tree)
    d = make_graysort_demands(60.0, p, fat_tree)
    for x in d.demands:
        i, j = divmod(x.id, 6)
        assert x.source == p.mappers[i] and x.sink == p.reducers[j]


def test_negative_volume_rejected(fat_tree):
    with pytest.raises(PlacementError):
        make_graysort_demands(-1.0, default_placement(fat_tree), fat_tree)


def test_non_server_rejected(fat_tree):
    switch = next(n.id for n in fat_tree.nodes if n.kind.is_switch)
    p = Placement((switch,), (0,))
    assert validate_placement(fat_tree, p)
    with pytest.raises(PlacementError):
        make_graysort_demands(10.0, p, fat_tree)


def test_validate_placement_cases(fat_tree):
    servers = [n.id for n in fat_tree.servers()]
    assert validate_placement(fat_tree, Placement(tuple(servers[:10]), tuple(servers[10:16]))) == []
    assert validate_placement(fat_tree, Placement((servers[0], servers[0]), (servers[1],)))
    assert validate_placement(fat_tree, Placement((), (servers[1],)))


def test_colocated_allowed_across_roles(fat_tree):
    s = [n.id for n in fat_tree.servers()]
    p = Placement((s[0], s[1]), (s[0],))
    assert validate_placement(fat_tree, p) == []
    d = make_graysort_demands(10.0, p, fat_tree)
    assert d.demands[0].colocated and not d.demands[1].colocated
    assert [x.id for x in d.positive()] == [1]


def test_weights(fat_tree):
    s = [n.id for n in fat_tree.servers()]
    p = Placement((s[0], s[1]), (s[2],))
    d = make_graysort_demands(90.0, p, fat_tree, weights=[[2], [1]])
    assert [x.volume for x in d.demands] == [60.0, 30.0]
    with pytest.raises(PlacementError):
        make_graysort_demands(90.0, p, fat_tree, weights=[[1, 1]])


def test_scaled(fat_tree):
    d = make_graysort_demands(600.0, default_placement(fat_tree), fat_tree)
    e = d.scaled(3.0)
    assert e.total_volume == 1800.0
    assert all(b.volume == 3 * a.volume for a, b in zip(d.demands, e.demands))


def test_placement_document_round_trip(fat_tree):
    p = default_placement(fat_tree)
    doc = placement_to_document(fat_tree, p)
    assert doc["mappers"][0] == "pod0.edge0.server0"
    assert placement_from_document(fat_tree, doc) == p


def test_placement_document_unknown_label(fat_tree):
    with pytest.raises(PlacementError, match="unknown"):
        placement_from_document(fat_tree, {"mappers": ["nope"], "reducers": ["pod0.edge0.server0"]})


@pytest.mark.parametrize("arch", ["spine-leaf", "fat-tree", "bcube", "dcell", "c-through", "helios", "pon-servercentric"])
def test_shipped_placements(arch, data_dir):
    t = build_topology(arch)
    p = placement_from_document(t, (data_dir / "placements" / f"{arch}.json").read_text())
    assert len(p.mappers) == 10 and len(p.reducers) == 6
    assert not set(p.mappers) & set(p.reducers)
