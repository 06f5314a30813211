"""SINR, Shannon capacity and the area-averaged throughput objective."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import GainMapSet, ScenarioParams, _placement_violations

__all__ = [
    "Placement",
    "PowerVector",
    "DesignPoint",
    "Violation",
    "FeasibilityReport",
    "capacity_at_cell",
    "cell_capacities",
    "average_throughput",
    "check_feasible",
]


@dataclass(frozen=True, eq=False)
class Placement:
    positions: np.ndarray  # (n_tx, 2) metres

    def __post_init__(self):
        object.__setattr__(self, "positions", np.asarray(self.positions, dtype=float).reshape(-1, 2))

    @property
    def n_tx(self):
        return len(self.positions)


@dataclass(frozen=True, eq=False)
class PowerVector:
    powers: np.ndarray  # (n_tx,) mW

    def __post_init__(self):
        object.__setattr__(self, "powers", np.asarray(self.powers, dtype=float).ravel())


@dataclass(frozen=True, eq=False)
class DesignPoint:
    placement: Placement
    powers: PowerVector


@dataclass(frozen=True)
class Violation:
    kind: str  # "power", "strip", "area" or "shape"
    tx: int
    message: str


@dataclass(frozen=True)
class FeasibilityReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _linear_gains(gains_db):
    return 10.0 ** (np.asarray(gains_db, dtype=float) / 10.0)


def capacity_at_cell(params: ScenarioParams, gains_db_at_cell, powers, i: int) -> float:
    """Capacity (bps) of transmitter ``i`` at one receiver location."""
    p = np.asarray(getattr(powers, "powers", powers), dtype=float)
    if p[i] == 0:
        return 0.0
    rx = p * _linear_gains(gains_db_at_cell)
    interference = rx.sum() - rx[i]
    sinr = rx[i] / (interference + params.noise_mw)
    return float(params.bandwidth * np.log2(1.0 + sinr))


def cell_capacities(params: ScenarioParams, gain_maps: GainMapSet, powers) -> np.ndarray:
    """Capacity of every transmitter at every cell, shape (n_tx, n_cells)."""
    p = np.asarray(getattr(powers, "powers", powers), dtype=float)
    rx = p[:, None] * gain_maps.linear
    total = rx.sum(axis=0)
    sinr = rx / (total[None, :] - rx + params.noise_mw)
    return params.bandwidth * np.log2(1.0 + sinr)


def average_throughput(params: ScenarioParams, gain_maps: GainMapSet, powers) -> float:
    """Spatial mean over grid cells of the summed capacities, in bps."""
    return float(cell_capacities(params, gain_maps, powers).sum(axis=0).mean())


def check_feasible(params: ScenarioParams, point: DesignPoint) -> FeasibilityReport:
    """Validate power limits and per-strip placement constraints.

    Every violated constraint is listed; an empty report means feasible.
    """
    violations = []
    positions = np.asarray(point.placement.positions, dtype=float)
    powers = np.asarray(point.powers.powers, dtype=float)
    if positions.shape != (params.n_tx, 2) or powers.shape != (params.n_tx,):
        violations.append(Violation("shape", -1, f"expected {params.n_tx} transmitters"))
        return FeasibilityReport(violations)
    for i, p in enumerate(powers):
        if not (0.0 <= p <= params.p_max):
            violations.append(
                Violation("power", i, f"transmitter {i} power {p:g} mW outside [0, {params.p_max:g}]")
            )
    for kind, i, msg in _placement_violations(params, positions, check_strips=True):
        violations.append(Violation(kind, i, msg))
    return FeasibilityReport(violations)
