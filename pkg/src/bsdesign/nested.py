"""Nested BO: an outer search over placements, an inner search over powers.

Every outer evaluation costs exactly one channel simulation. The inner
power search then runs an ordinary BO loop on the already simulated gain
maps, so it never triggers another simulation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bo import BoConfig, run_bo
from .channel import ChannelSimulator, GainMapSet, ScenarioParams, build_shadowing_field
from .gp import MleConfig
from .objective import DesignPoint, Placement, PowerVector, average_throughput

__all__ = [
    "NestedConfig",
    "NestedTrace",
    "OuterRecord",
    "placement_to_vector",
    "vector_to_placement",
    "placement_box",
    "optimize_powers",
    "run_nested",
    "write_nested_csv",
]


def placement_box(params: ScenarioParams) -> np.ndarray:
    """Raw per-coordinate bounds (x0, y0, x1, y1, ...), shape (2 n_tx, 2)."""
    rows = []
    for i in range(params.n_tx):
        rows.append((0.0, params.area_side))
        rows.append(params.strip_bounds(i))
    return np.array(rows)


def placement_to_vector(positions, params: ScenarioParams) -> np.ndarray:
    """Flatten positions and rescale each coordinate to [0, 1] within its strip."""
    pos = np.asarray(getattr(positions, "positions", positions), dtype=float).reshape(-1)
    box = placement_box(params)
    return (pos - box[:, 0]) / (box[:, 1] - box[:, 0])


def vector_to_placement(vec, params: ScenarioParams) -> np.ndarray:
    box = placement_box(params)
    pos = box[:, 0] + np.asarray(vec, dtype=float) * (box[:, 1] - box[:, 0])
    return pos.reshape(-1, 2)


@dataclass(frozen=True)
class NestedConfig:
    """Settings for one nested run.

    ``outer.bounds`` and ``inner.bounds`` are filled in from the scenario.
    The inner budget (8 + 30) is a free choice; the outer one mirrors the
    usual 8 initial points and 256 candidates.
    """

    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    outer: BoConfig = field(default_factory=lambda: BoConfig(n_init=8, n_test=256, t_max=50))
    inner: BoConfig = field(
        default_factory=lambda: BoConfig(n_init=8, n_test=256, t_max=30, mle=MleConfig(n_starts=2))
    )
    shadowing_mode: str = "midpoint-2d"
    field_seed: int | None = 0
    noise_seed: int | None = 1
    inner_seed: int | None = 2


@dataclass
class OuterRecord:
    placement: np.ndarray
    powers: np.ndarray
    sim_index: int
    y: float


@dataclass
class NestedTrace:
    records: list
    best_so_far: np.ndarray
    t_best: int
    n_init: int
    simulation_count: int
    error: str | None = None

    @property
    def incumbent(self) -> DesignPoint:
        r = self.records[self.t_best]
        return DesignPoint(Placement(r.placement), PowerVector(r.powers))

    @property
    def y_best(self) -> float:
        return self.records[self.t_best].y

    def incumbent_curve(self) -> np.ndarray:
        return self.best_so_far[self.n_init - 1 :]


def optimize_powers(gain_maps: GainMapSet, scenario: ScenarioParams, inner_cfg: BoConfig):
    """Best power vector for fixed gain maps, found with BO over [0, p_max]^n.

    Returns ``(powers, y)`` where ``y`` is the throughput of ``powers`` on
    these maps. Errors inside the inner loop are re-raised.
    """
    bounds = [(0.0, scenario.p_max)] * scenario.n_tx
    cfg = inner_cfg.with_(bounds=bounds)
    trace = run_bo(lambda p: average_throughput(scenario, gain_maps, p), cfg)
    if trace.error is not None:
        raise RuntimeError(f"inner power search failed: {trace.error}")
    return trace.x_best, trace.y_best


def run_nested(cfg: NestedConfig, simulator: ChannelSimulator | None = None) -> NestedTrace:
    """Outer BO over normalised placement vectors with an inner power BO.

    ``simulator`` defaults to a fresh one built from the config seeds.
    """
    scenario = cfg.scenario
    if simulator is None:
        shadow = build_shadowing_field(scenario, cfg.shadowing_mode, cfg.field_seed)
        simulator = ChannelSimulator(scenario, shadow, cfg.noise_seed)
    inner_rng = np.random.default_rng(cfg.inner_seed)
    records = []
    sims_before = simulator.count

    def evaluate(vec):
        positions = vector_to_placement(vec, scenario)
        maps = simulator.simulate(positions)
        inner = cfg.inner.with_(seed=int(inner_rng.integers(2**63)))
        powers, y = optimize_powers(maps, scenario, inner)
        records.append(OuterRecord(positions, np.asarray(powers), simulator.count - sims_before, y))
        return y

    outer = cfg.outer.with_(bounds=[(0.0, 1.0)] * (2 * scenario.n_tx))
    trace = run_bo(evaluate, outer)
    ys = np.array([r.y for r in records])
    return NestedTrace(
        records=records,
        best_so_far=trace.best_so_far,
        t_best=int(np.argmax(ys)) if len(ys) else -1,
        n_init=trace.n_init,
        simulation_count=simulator.count - sims_before,
        error=trace.error,
    )


def write_nested_csv(trace: NestedTrace, path) -> None:
    """``t,y,best_so_far,sim_count`` followed by placement and power columns."""
    n = len(trace.records[0].powers) if trace.records else 0
    cols = [f"{a}{i}" for i in range(n) for a in ("x", "y")] + [f"p{i}" for i in range(n)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "best_so_far", "sim_count", *cols])
        for t, (r, b) in enumerate(zip(trace.records, trace.best_so_far), start=1):
            vals = [*r.placement.ravel(), *r.powers]
            w.writerow([t, f"{r.y:.9g}", f"{b:.9g}", r.sim_index, *(f"{v:.9g}" for v in vals)])
