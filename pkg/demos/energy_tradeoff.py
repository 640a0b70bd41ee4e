"""Trade completion time for switch power by relaxing the throughput pin.

Run with ``python demos/energy_tradeoff.py``.
"""

from __future__ import annotations

from dcnshuffle.harness import solve_instance
from dcnshuffle.topology import build_topology
from dcnshuffle.workload import default_placement, make_graysort_demands


def main() -> None:
    t = build_topology("fat-tree", k=4)
    demands = make_graysort_demands(10000.0, default_placement(t), t)  # 10 GB shuffle
    # active power falls as the pin loosens, but idle power accrues for longer
    print(f"{'epsilon':>8} {'T (s)':>8} {'active W':>9} {'energy J':>10} switches")
    for eps in (0.0, 0.25, 0.5, 1.0, 2.0):
        r = solve_instance(t, demands, epsilon=eps)
        print(
            f"{eps:8.2f} {r.schedule_time:8.2f} {r.active_power:9.0f} {r.energy:10.0f} "
            f"{len(r.active_nodes)}"
        )


if __name__ == "__main__":
    main()
