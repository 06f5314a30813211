"""Comparison strategies sharing the channel, objective and BO machinery."""

from __future__ import annotations

import enum
import math

import numpy as np

from .bo import BoConfig, BoTrace, run_bo
from .channel import ChannelSimulator, ScenarioParams
from .gp import Dataset
from .nested import placement_box
from .objective import average_throughput

__all__ = [
    "StrategyKind",
    "regular_hex_layout",
    "run_placement_only",
    "run_regular_power",
    "run_pure_joint",
    "run_random_search",
]

_HEX_RINGS = {1: 0, 7: 1, 19: 2}


class StrategyKind(str, enum.Enum):
    NESTED = "nested"
    PLACEMENT_ONLY = "placement_only"
    REGULAR_POWER = "regular_power"
    PURE_JOINT = "pure_joint"
    RANDOM_SEARCH = "random_search"


def regular_hex_layout(params: ScenarioParams) -> np.ndarray:
    """Hexagonal-lattice sites centred on the area, for 1, 7 or 19 transmitters.

    The pitch ``area_side / (2 * rings + 1)`` keeps the outermost ring
    inside the area. Sites are sorted by radius, then by angle in [0, 360).
    """
    if params.n_tx not in _HEX_RINGS:
        raise ValueError(f"hexagonal layout needs n_tx in {sorted(_HEX_RINGS)}, got {params.n_tx}")
    rings = _HEX_RINGS[params.n_tx]
    pitch = params.area_side / (2 * rings + 1)
    v1 = np.array([pitch, 0.0])
    v2 = np.array([pitch / 2.0, pitch * math.sqrt(3.0) / 2.0])
    sites = []
    for a in range(-rings, rings + 1):
        for b in range(-rings, rings + 1):
            if max(abs(a), abs(b), abs(a + b)) <= rings:
                p = a * v1 + b * v2
                r = math.hypot(*p)
                ang = math.atan2(p[1], p[0]) % (2.0 * math.pi) if r > 0 else 0.0
                sites.append((round(r, 6), round(ang, 9), p))
    sites.sort(key=lambda s: (s[0], s[1]))
    centre = params.area_side / 2.0
    return np.array([s[2] for s in sites]) + centre


def _joint_box(params):
    return np.vstack([placement_box(params), [(0.0, params.p_max)] * params.n_tx])


def run_placement_only(params, simulator: ChannelSimulator, cfg: BoConfig) -> BoTrace:
    """BO over placements with every transmitter at full power."""
    full = np.full(params.n_tx, params.p_max)

    def objective(v):
        maps = simulator.simulate(np.reshape(v, (-1, 2)))
        return average_throughput(params, maps, full)

    return run_bo(objective, cfg.with_(bounds=placement_box(params)))


def run_regular_power(params, simulator: ChannelSimulator, cfg: BoConfig) -> BoTrace:
    """BO over powers on the fixed hexagonal layout.

    Every observation re-runs the simulation, so each one carries a fresh
    simulation error.
    """
    layout = regular_hex_layout(params)

    def objective(p):
        maps = simulator.simulate(layout, check_strips=False)
        return average_throughput(params, maps, p)

    return run_bo(objective, cfg.with_(bounds=[(0.0, params.p_max)] * params.n_tx))


def run_pure_joint(params, simulator: ChannelSimulator, cfg: BoConfig) -> BoTrace:
    """Single BO over the 3 n_tx-dimensional joint (placement, power) box."""
    n2 = 2 * params.n_tx

    def objective(v):
        maps = simulator.simulate(np.reshape(v[:n2], (-1, 2)))
        return average_throughput(params, maps, v[n2:])

    return run_bo(objective, cfg.with_(bounds=_joint_box(params)))


def run_random_search(params, simulator: ChannelSimulator, cfg: BoConfig) -> BoTrace:
    """``n_init + t_max`` uniform joint designs, one simulation each."""
    box = _joint_box(params)
    n2 = 2 * params.n_tx
    rng = np.random.default_rng(cfg.seed)
    data = Dataset(box)
    error = None
    try:
        for _ in range(cfg.n_init + cfg.t_max):
            v = rng.uniform(box[:, 0], box[:, 1])
            maps = simulator.simulate(v[:n2].reshape(-1, 2))
            data.append(v, average_throughput(params, maps, v[n2:]))
    except Exception as exc:  # noqa: BLE001 - reported on the trace
        error = f"{type(exc).__name__}: {exc}"
    y = data.outputs
    best = np.maximum.accumulate(y) if len(y) else np.array([])
    return BoTrace(data, best, int(np.argmax(y)) if len(y) else -1, cfg.n_init, error)
