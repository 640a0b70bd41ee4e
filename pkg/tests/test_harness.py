from __future__ import annotations

import csv
import json
import math

import pytest

from dcnshuffle.errors import DcnShuffleError
from dcnshuffle.harness import (
    REPORT_COLUMNS,
    ExperimentConfig,
    emit_report,
    load_config,
    run_experiment,
    solve_instance,
    suite_from_document,
)
from dcnshuffle.topology import build_topology
from dcnshuffle.workload import default_placement, make_graysort_demands

VOLUMES = tuple(float(v) for v in range(1, 21))


def test_fat_tree_sweep_linear():
    r = run_experiment(ExperimentConfig("fat-tree", {"arch": "fat-tree", "params": {"k": 4}}, volumes_gb=VOLUMES))
    assert len(r.rows) == 20
    assert {x.scenario for x in r.rows} == {"none"}
    ratio = r.rows[0].t_fail_s / r.rows[0].volume_gb
    for x in r.rows:
        assert x.t_fail_s / x.volume_gb == pytest.approx(ratio, rel=1e-6)
        assert x.degradation_pct == 0.0


def test_homogeneity_shortcut_matches_full_solves():
    base = dict(name="sl", topology={"arch": "spine-leaf", "params": {"spines": 3}}, volumes_gb=(1.0, 3.0, 7.5),
                scenarios=[{"name": "a", "failed_links": ["leaf0--spine0"]}])
    fast = run_experiment(ExperimentConfig(**base))
    slow = run_experiment(ExperimentConfig(**base, exploit_homogeneity=False))
    for a, b in zip(fast.rows, slow.rows):
        assert (a.scenario, a.volume_gb) == (b.scenario, b.volume_gb)
        assert a.t_fail_s == pytest.approx(b.t_fail_s, rel=1e-9)
        assert a.energy_j == pytest.approx(b.energy_j, rel=1e-9)
        assert a.degradation_pct == pytest.approx(b.degradation_pct, abs=1e-6)


def test_spine_leaf_three_vs_one_reducer(data_dir):
    cfg = ExperimentConfig(
        "spine-leaf",
        {"arch": "spine-leaf", "params": {"spines": 3}},
        placement=str(data_dir / "placements" / "spine-leaf.json"),
        scenarios=[
            {"name": "three", "failed_links": ["leaf0--spine0"]},
            {"name": "one", "failed_links": ["leaf1--spine0"]},
        ],
        volumes_gb=(1.0,),
    )
    r = run_experiment(cfg)
    three = r.select(scenario="three")[0].degradation_pct
    one = r.select(scenario="one")[0].degradation_pct
    assert three >= one
    assert three > 0


def test_fatal_row(tmp_path):
    t = build_topology("fat-tree")
    mapper = t.nodes[default_placement(t).mappers[0]].label
    cfg = ExperimentConfig(
        "fat-tree", {"arch": "fat-tree"},
        scenarios=[{"name": "spof", "failed_links": [f"{mapper}--pod0.edge0"]}], volumes_gb=(1.0, 2.0),
    )
    r = run_experiment(cfg)
    rows = r.select(scenario="spof")
    assert len(rows) == 2
    assert all(x.fatal and x.fatal_demands == 6 and math.isnan(x.t_fail_s) for x in rows)
    emit_report(r, tmp_path)
    with open(tmp_path / "results.csv") as fh:
        data = list(csv.DictReader(fh))
    fatal = [d for d in data if d["scenario"] == "spof"]
    assert fatal[0]["fatality"] == "fatal"
    assert fatal[0]["t_fail_s"] == "" and fatal[0]["degradation_pct"] == "" and fatal[0]["energy_j"] == ""


def test_emit_shapes(tmp_path):
    cfg = ExperimentConfig(
        "sl", {"arch": "spine-leaf"}, volumes_gb=VOLUMES,
        scenarios=[{"name": "a", "failed_links": ["leaf0--spine0"]}],
    )
    r = run_experiment(cfg)
    paths = emit_report(r, tmp_path)
    assert [p.name for p in paths] == ["results.csv", "fig2_series.csv", "fig3_stacked.csv"]
    lines = (tmp_path / "results.csv").read_text().splitlines()
    assert lines[0] == ",".join(REPORT_COLUMNS)
    assert len(lines) == 1 + 40
    fig3 = list(csv.DictReader(open(tmp_path / "fig3_stacked.csv")))
    assert [row["scenario"] for row in fig3] == ["none", "a"]
    for row in fig3:
        assert row["volume_gb"] == "20"
        full = r.select(scenario=row["scenario"])[-1].t_fail_s
        assert float(row["base_s"]) + float(row["extra_s"]) == pytest.approx(full, rel=1e-9)
    fig2 = list(csv.DictReader(open(tmp_path / "fig2_series.csv")))
    assert len(fig2) == 40


def test_emit_json(tmp_path):
    r = run_experiment(ExperimentConfig("sl", {"arch": "spine-leaf"}, volumes_gb=(1.0,)))
    emit_report(r, tmp_path, "json")
    rows = json.loads((tmp_path / "results.json").read_text())
    assert rows[0]["scenario"] == "none" and rows[0]["t_fail_s"] > 0


def test_emit_unwritable(tmp_path):
    r = run_experiment(ExperimentConfig("sl", {"arch": "spine-leaf"}, volumes_gb=(1.0,)))
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(DcnShuffleError, match=str(blocker)):
        emit_report(r, blocker / "sub")


def test_parallel_equals_serial(monkeypatch):
    base = dict(name="sl", topology={"arch": "spine-leaf"}, volumes_gb=(1.0, 2.0),
                scenarios=[{"name": "a", "failed_links": ["leaf0--spine0"]},
                           {"name": "b", "failed_links": ["leaf1--spine1"]}],
                exploit_homogeneity=False)
    serial = run_experiment(ExperimentConfig(**base))
    monkeypatch.setenv("DCNSHUFFLE_WORKERS", "2")
    parallel = run_experiment(ExperimentConfig(**base))
    assert serial.rows == parallel.rows


@pytest.mark.parametrize(
    "kwargs",
    [{"volumes_gb": ()}, {"volumes_gb": (1.0, 0.0)}, {"parallelism": 0}, {"epsilon": -1.0}],
)
def test_config_invariants(kwargs):
    with pytest.raises(DcnShuffleError):
        ExperimentConfig("x", {"arch": "spine-leaf"}, **kwargs)


def test_unknown_config_key():
    with pytest.raises(DcnShuffleError, match="unknown config key"):
        suite_from_document({"experiments": [{"name": "x", "topology": {"arch": "bcube"}, "volume": 3}]})


def test_random_placement_seeded():
    cfg = ExperimentConfig("b", {"arch": "bcube"}, placement={"random": {"mappers": 10, "reducers": 6}}, seed=7)
    t = cfg.load_topology()
    assert cfg.load_placement(t) == cfg.load_placement(t)
    other = ExperimentConfig("b", {"arch": "bcube"}, placement={"random": {}}, seed=8)
    assert other.load_placement(t) != cfg.load_placement(t)


def test_zero_volume_short_circuit():
    t = build_topology("fat-tree")
    res = solve_instance(t, make_graysort_demands(0.0, default_placement(t), t))
    assert res.completion_time == 0.0 and res.energy == 0.0


def test_budget_starved_scenario_is_fatal():
    # every ToR loses its core link: circuits alone cannot reach all racks
    cfg = ExperimentConfig(
        "ct", {"arch": "c-through"}, volumes_gb=(1.0,),
        scenarios=[{"name": "cut", "failed_links": [f"tor{i}--core0" for i in range(4)]}],
    )
    row = run_experiment(cfg).select(scenario="cut")[0]
    assert row.fatal and row.fatal_demands > 0


def test_shipped_config_loads(suite_config_path):
    suite = load_config(suite_config_path)
    assert [e.name for e in suite.experiments] == [
        "spine-leaf", "fat-tree", "bcube", "dcell", "c-through", "helios", "pon-servercentric",
    ]
    for cfg in suite.experiments:
        t = cfg.load_topology()
        assert t.server_rate_cap == 1000.0
        p = cfg.load_placement(t)
        assert (len(p.mappers), len(p.reducers)) == (10, 6)
        assert 2 <= len(cfg.load_scenarios(t)) <= 4
        assert cfg.volumes_gb == VOLUMES
