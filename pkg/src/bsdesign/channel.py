"""Statistical propagation simulator.

Path loss plus spatially correlated log-normal shadowing. The shadowing
field is a Poisson point process whose points carry i.i.d. Gaussian dB
values; a link's shadowing is the value of the nearest point to a query key
built from the two link endpoints. A "channel simulation" produces, for each
transmitter, a gain map in dB over the receiver grid, optionally perturbed
by an i.i.d. simulation error.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gamma

__all__ = [
    "ScenarioParams",
    "ShadowingMode",
    "ShadowingField",
    "GainMapSet",
    "ChannelSimulator",
    "ConstraintViolation",
    "ppp_intensity",
    "build_shadowing_field",
    "query_shadow_db",
    "channel_gain_db",
    "simulate_gain_maps",
    "write_gain_map_csv",
]


class ConstraintViolation(ValueError):
    """A design point breaks the power or placement constraints."""

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass(frozen=True)
class ScenarioParams:
    """Physical constants of the deployment scenario.

    Units: metres, dB, mW, dBm/Hz and Hz. ``sigma_eps_m`` is the standard
    deviation (dB) of the per-cell simulation error added to gain maps.
    """

    area_side: float = 1000.0
    grid_step: float = 20.0
    eta: float = 4.0
    d_cor: float = 200.0
    sigma_s: float = 6.0
    p_max: float = 10.0
    n0_dbm_hz: float = -174.0
    bandwidth: float = 2.0e7
    n_tx: int = 7
    sigma_eps_m: float = 0.0

    def __post_init__(self):
        if not self.area_side > 0 or not self.grid_step > 0:
            raise ValueError("area_side and grid_step must be positive")
        ratio = self.area_side / self.grid_step
        if abs(ratio - round(ratio)) > 1e-9:
            raise ValueError("area_side must be divisible by grid_step")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not self.d_cor > 0:
            raise ValueError("d_cor must be positive")
        if self.sigma_s < 0 or self.sigma_eps_m < 0:
            raise ValueError("standard deviations must be non-negative")
        if not self.p_max > 0 or not self.bandwidth > 0:
            raise ValueError("p_max and bandwidth must be positive")
        if int(self.n_tx) != self.n_tx or self.n_tx < 1:
            raise ValueError("n_tx must be a positive integer")

    @property
    def cells_per_side(self) -> int:
        return int(round(self.area_side / self.grid_step))

    @property
    def n_cells(self) -> int:
        return self.cells_per_side**2

    @property
    def d_min(self) -> float:
        """Distance clamp used to keep gains finite on a cell centre."""
        return self.grid_step / 2.0

    @property
    def noise_mw(self) -> float:
        """Noise power B*N0 in mW."""
        return 10.0 ** ((self.n0_dbm_hz + 10.0 * math.log10(self.bandwidth)) / 10.0)

    @cached_property
    def cell_centers(self) -> np.ndarray:
        """Cell-centre coordinates, shape (n_cells, 2), row-major (y outer)."""
        c = (np.arange(self.cells_per_side) + 0.5) * self.grid_step
        yy, xx = np.meshgrid(c, c, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel()])

    def strip_bounds(self, i: int) -> tuple[float, float]:
        """y-range of the strip assigned to transmitter ``i`` (0-based)."""
        h = self.area_side / self.n_tx
        return h * i, h * (i + 1)


class ShadowingMode(str, enum.Enum):
    """Which key is used for the nearest-neighbour shadowing lookup."""

    MIDPOINT_2D = "midpoint-2d"
    RECEIVER_2D = "receiver-2d"
    ENDPOINT_4D = "endpoint-4d"

    @property
    def dim(self) -> int:
        return 4 if self is ShadowingMode.ENDPOINT_4D else 2


def ppp_intensity(mode, d_cor: float) -> float:
    """PPP intensity whose mean nearest-neighbour distance equals ``d_cor``.

    For a homogeneous PPP in k dimensions with unit-ball volume c_k,
    E[r] = Gamma(1 + 1/k) / (lambda * c_k) ** (1/k).
    """
    mode = ShadowingMode(mode)
    k = mode.dim
    c_k = math.pi ** (k / 2) / gamma(k / 2 + 1)
    return float((gamma(1.0 + 1.0 / k) / d_cor) ** k / c_k)


@dataclass(frozen=True, eq=False)
class ShadowingField:
    """Immutable PPP shadowing realisation.

    ``points`` has shape (n, 2) or (n, 4) depending on ``mode``; ``values``
    holds the shadowing of each point in dB.
    """

    points: np.ndarray
    values: np.ndarray
    mode: ShadowingMode
    rng_seed: int | None = None
    area_side: float = 1000.0
    n_redraws: int = 0
    p_empty: float = 0.0
    _tree: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        values = np.array(self.values, dtype=float).ravel()
        if points.ndim != 2 or points.shape[1] != ShadowingMode(self.mode).dim:
            raise ValueError("points have the wrong dimension for this mode")
        if len(points) == 0 or len(points) != len(values):
            raise ValueError("a shadowing field needs at least one point")
        points.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mode", ShadowingMode(self.mode))
        object.__setattr__(self, "_tree", cKDTree(points))

    def __len__(self):
        return len(self.values)

    def keys(self, tx, rx) -> np.ndarray:
        """Map link endpoints to query-space keys (broadcasts over leading axes)."""
        tx = np.asarray(tx, dtype=float)
        rx = np.asarray(rx, dtype=float)
        tx, rx = np.broadcast_arrays(tx, rx)
        if self.mode is ShadowingMode.MIDPOINT_2D:
            return 0.5 * (tx + rx)
        if self.mode is ShadowingMode.RECEIVER_2D:
            return rx.copy()
        # order the endpoints lexicographically so that w(a, b) == w(b, a)
        swap = (tx[..., 0] > rx[..., 0]) | (
            (tx[..., 0] == rx[..., 0]) & (tx[..., 1] > rx[..., 1])
        )
        first = np.where(swap[..., None], rx, tx)
        second = np.where(swap[..., None], tx, rx)
        return np.concatenate([first, second], axis=-1)

    def query(self, tx, rx):
        """Shadowing in dB for the link(s) tx -> rx."""
        keys = self.keys(tx, rx)
        flat = keys.reshape(-1, keys.shape[-1])
        _, idx = self._tree.query(flat)
        out = self.values[idx].reshape(keys.shape[:-1])
        return float(out) if out.ndim == 0 else out


def build_shadowing_field(params: ScenarioParams, mode="midpoint-2d", seed=None) -> ShadowingField:
    """Draw a PPP shadowing field over the area (or area x area for 4-d keys).

    An empty realisation is redrawn; the number of redraws and the
    probability of an empty draw are stored on the field.
    """
    mode = ShadowingMode(mode)
    rng = np.random.default_rng(seed)
    lam = ppp_intensity(mode, params.d_cor)
    volume = params.area_side**mode.dim
    mean_count = lam * volume
    n_redraws = -1
    n = 0
    while n == 0:
        n = int(rng.poisson(mean_count))
        n_redraws += 1
    points = rng.uniform(0.0, params.area_side, size=(n, mode.dim))
    values = rng.normal(0.0, params.sigma_s, size=n)
    return ShadowingField(
        points,
        values,
        mode,
        rng_seed=seed,
        area_side=params.area_side,
        n_redraws=n_redraws,
        p_empty=math.exp(-mean_count),
    )


def query_shadow_db(field: ShadowingField, tx, rx):
    return field.query(tx, rx)


def channel_gain_db(params: ScenarioParams, field: ShadowingField, tx, rx, d_min=None):
    """Path loss plus shadowing in dB, excluding transmit power.

    Distances below ``d_min`` (default ``params.d_min``) are clamped.
    """
    if d_min is None:
        d_min = params.d_min
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    d = np.linalg.norm(tx - rx, axis=-1)
    d = np.maximum(d, d_min)
    g = -10.0 * params.eta * np.log10(d) + field.query(tx, rx)
    return float(g) if np.ndim(g) == 0 else g


@dataclass(frozen=True, eq=False)
class GainMapSet:
    """Per-transmitter gain maps in dB, shape (n_tx, n_cells)."""

    maps: np.ndarray
    tx_positions: np.ndarray

    def __post_init__(self):
        maps = np.array(self.maps, dtype=float)
        pos = np.array(self.tx_positions, dtype=float)
        if maps.ndim != 2 or pos.shape != (maps.shape[0], 2):
            raise ValueError("maps must be (n_tx, n_cells) and positions (n_tx, 2)")
        if not np.all(np.isfinite(maps)):
            raise ValueError("gain maps must be finite")
        maps.setflags(write=False)
        pos.setflags(write=False)
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "tx_positions", pos)

    @property
    def n_tx(self) -> int:
        return self.maps.shape[0]

    @cached_property
    def linear(self) -> np.ndarray:
        """Gains converted to linear mW/mW."""
        return 10.0 ** (self.maps / 10.0)


def _placement_violations(params, positions, check_strips=True):
    out = []
    eps = 1e-9 * params.area_side
    for i, (x, y) in enumerate(positions):
        if not (-eps <= x <= params.area_side + eps and -eps <= y <= params.area_side + eps):
            out.append(("area", i, f"transmitter {i} at ({x:g}, {y:g}) lies outside the area"))
        elif check_strips:
            lo, hi = params.strip_bounds(i)
            if not (lo - eps <= y <= hi + eps):
                out.append(
                    ("strip", i, f"transmitter {i} has y={y:g} outside its strip [{lo:g}, {hi:g}]")
                )
    return out


def simulate_gain_maps(params, field, placements, seed=None, check_strips=True) -> GainMapSet:
    """Run one channel simulation for all transmitters.

    Each cell gets ``channel_gain_db`` plus an independent
    N(0, sigma_eps_m^2) error; with ``sigma_eps_m == 0`` no random numbers
    are drawn and the map is the noiseless one.
    """
    positions = np.asarray(getattr(placements, "positions", placements), dtype=float)
    if positions.shape != (params.n_tx, 2):
        raise ValueError(f"expected {params.n_tx} positions, got shape {positions.shape}")
    bad = _placement_violations(params, positions, check_strips)
    if bad:
        raise ConstraintViolation("; ".join(m for _, _, m in bad), bad)
    cells = params.cell_centers
    maps = channel_gain_db(params, field, positions[:, None, :], cells[None, :, :])
    if params.sigma_eps_m > 0:
        rng = np.random.default_rng(seed)
        maps = maps + rng.normal(0.0, params.sigma_eps_m, size=maps.shape)
    return GainMapSet(maps, positions)


class ChannelSimulator:
    """Counts simulations and feeds each one a fresh simulation-error seed.

    Strategies only touch the channel through this object, which makes the
    simulation budget observable.
    """

    def __init__(self, params: ScenarioParams, field: ShadowingField, seed=None):
        self.params = params
        self.field = field
        self.count = 0
        self._rng = np.random.default_rng(seed)

    def simulate(self, positions, check_strips=True) -> GainMapSet:
        sub_seed = int(self._rng.integers(2**63))
        maps = simulate_gain_maps(self.params, self.field, positions, sub_seed, check_strips)
        self.count += 1
        return maps


def write_gain_map_csv(params: ScenarioParams, gain_maps: GainMapSet, tx_index: int, path) -> None:
    """Dump one transmitter's gain map as ``x_m,y_m,gain_db`` rows."""
    cells = params.cell_centers
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_m", "y_m", "gain_db"])
        for (x, y), g in zip(cells, gain_maps.maps[tx_index]):
            w.writerow([f"{x:.9g}", f"{y:.9g}", f"{g:.9g}"])
