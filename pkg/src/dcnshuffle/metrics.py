"""Completion-time degradation and network energy from solved models."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ModelError
from .failures import NON_FATAL, Fatality
from .topology import NodeKind, Topology

# u values above this count as "on"
ACTIVE_THRESHOLD = 0.5


@dataclass(frozen=True)
class EnergyFields:
    active_power: float  # W drawn by elements carrying traffic
    idle_power: float  # W drawn by powered elements left idle
    energy: float  # J, (active + idle) * T
    energy_active_only: float  # J, active * T
    active_nodes: tuple[int, ...]


@dataclass(frozen=True)
class RunMetrics:
    completion_time: float
    baseline_time: float
    extra_delay: float
    degradation_pct: float
    active_power: float
    idle_power: float
    energy: float
    fatality: Fatality = NON_FATAL


def _check_times(t_fail: float, t_base: float) -> None:
    if not t_base > 0:
        raise ValueError(f"baseline time must be > 0, got {t_base}")
    if t_fail < t_base - 1e-9 * max(1.0, t_base):
        raise ValueError(f"failure time {t_fail} is below baseline {t_base}")


def degradation(t_fail: float, t_base: float) -> float:
    """Percentage increase of ``t_fail`` over ``t_base``."""
    _check_times(t_fail, t_base)
    return 100.0 * (t_fail - t_base) / t_base


def overall_completion(t_base: float, t_fail: float) -> tuple[float, float]:
    """Split a failure-run time into (failure-free time, extra delay)."""
    _check_times(t_fail, t_base)
    return t_base, t_fail - t_base


def energy(t: Topology, stage2, T: float, model, include_servers: bool = False) -> EnergyFields:
    """Network power and energy of a solved stage-2 model over a shuffle of ``T`` seconds.

    Passive PON components draw nothing. With ``include_servers`` every
    server NIC is counted as active for the whole shuffle.

    Raises:
        ModelError: If a powered element has no activation variable in ``model``.
    """
    if not T > 0:
        raise ValueError("T must be > 0")
    activation = model.metadata.get("activation")
    if activation is None:
        raise ModelError("model carries no activation variables (not a stage-2 model)")
    active = idle = 0.0
    on = []
    for node in t.nodes:
        if node.kind is NodeKind.SERVER:
            if include_servers:
                active += node.power_active
            continue
        if node.kind is NodeKind.PON:
            continue
        if node.id not in activation:
            raise ModelError(f"no activation variable for powered node {node.id} ({node.label})")
        if stage2.value(activation[node.id]) > ACTIVE_THRESHOLD:
            active += node.power_active
            on.append(node.id)
        else:
            idle += node.power_idle
    return EnergyFields(active, idle, (active + idle) * T, active * T, tuple(on))
