"""Walk through one failure scenario on a spine-and-leaf fabric.

Run with ``python demos/failure_walkthrough.py``.
"""

from __future__ import annotations

import json
from importlib import resources

from dcnshuffle.failures import NO_FAILURE, scenario_from_document
from dcnshuffle.harness import solve_instance
from dcnshuffle.metrics import degradation
from dcnshuffle.topology import build_topology
from dcnshuffle.workload import make_graysort_demands, placement_from_document


def main() -> None:
    t = build_topology("spine-leaf", spines=3)
    # shipped placement: leaf0 hosts three reducers, leaf1 hosts one
    doc = json.loads((resources.files("dcnshuffle") / "data" / "placements" / "spine-leaf.json").read_text())
    placement = placement_from_document(t, doc)
    demands = make_graysort_demands(5000.0, placement, t)  # 5 GB shuffle
    print(f"{len(t.servers())} servers, {len(t.links)} links, {len(demands.demands)} demands")

    base = solve_instance(t, demands, NO_FAILURE)
    print(f"no failure:   T* = {base.completion_time:.3f} s, energy = {base.energy:.1f} J")

    for label in ("leaf0--spine0", "leaf1--spine0"):
        s = scenario_from_document(t, {"name": label, "failed_links": [label]})
        res = solve_instance(t, demands, s)
        if res.fatality.fatal:
            print(f"{label}: fatal, {len(res.fatality.demands)} demands cut off")
            continue
        pct = degradation(res.completion_time, base.completion_time)
        print(
            f"{label}: T* = {res.completion_time:.3f} s (+{pct:.1f}%), "
            f"{len(res.active_nodes)} switches on, energy = {res.energy:.1f} J"
        )


if __name__ == "__main__":
    main()
