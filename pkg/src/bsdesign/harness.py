"""Experiment orchestration: seeding, paired trials, aggregation, CSV output.

Seed splitting
--------------
Every random stream of a trial is seeded from
``(master_seed, trial_index, label)``: the label is hashed with CRC-32 and
the pair ``(trial_index, crc)`` becomes the spawn key of a
``numpy.random.SeedSequence`` whose first 64 bits are the stream seed.
Labels in use:

``shadowing``            the PPP field; shared by all strategies of a trial
``noise/<strategy>``     per-simulation error draws
``bo/<strategy>``        initial design, candidates and MLE starts
``inner/<strategy>``     seeds of the inner power searches (nested only)

The simulation-error level is deliberately not part of any label, so a
trial at sigma = 0 is identical whether it comes from a plain run or from a
noise sweep.
"""

from __future__ import annotations

import csv
import dataclasses
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .baselines import (
    StrategyKind,
    regular_hex_layout,
    run_placement_only,
    run_pure_joint,
    run_random_search,
    run_regular_power,
)
from .bo import BoConfig
from .channel import ChannelSimulator, ScenarioParams, ShadowingMode, build_shadowing_field, simulate_gain_maps
from .gp import MleConfig
from .nested import NestedConfig, run_nested
from .objective import average_throughput

__all__ = [
    "ConfigError",
    "ExperimentSpec",
    "TrialResult",
    "CurveStats",
    "NoiseRow",
    "AggregateResult",
    "derive_seed",
    "load_config",
    "parse_config",
    "run_trial",
    "run_experiment",
    "sweep_noise",
    "emit_plot_data",
    "ALL_STRATEGIES",
]

ALL_STRATEGIES = tuple(s.value for s in StrategyKind)
_BASELINES = {
    StrategyKind.PLACEMENT_ONLY: run_placement_only,
    StrategyKind.REGULAR_POWER: run_regular_power,
    StrategyKind.PURE_JOINT: run_pure_joint,
    StrategyKind.RANDOM_SEARCH: run_random_search,
}


class ConfigError(ValueError):
    pass


def derive_seed(master_seed: int, trial: int, label: str) -> int:
    """64-bit stream seed for ``label`` in trial ``trial``."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(trial), zlib.crc32(label.encode())))
    lo, hi = ss.generate_state(2, np.uint32)
    return (int(hi) << 32) | int(lo)


@dataclass(frozen=True)
class ExperimentSpec:
    scenario: ScenarioParams = field(default_factory=ScenarioParams)
    strategies: tuple = ALL_STRATEGIES
    n_trials: int = 20
    t_max: int = 50
    sigma_sweep: tuple = ()
    master_seed: int = 0
    out_dir: str | None = None
    shadowing_mode: str = "midpoint-2d"
    n_init: int = 8
    n_test: int = 256
    mle_n_starts: int = 8
    inner_t_max: int = 30
    inner_n_starts: int = 2
    n_workers: int = 1

    def __post_init__(self):
        if self.n_trials < 1:
            raise ConfigError("n_trials must be >= 1")
        if self.t_max < 0 or self.inner_t_max < 0:
            raise ConfigError("iteration counts must be >= 0")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        try:
            strategies = tuple(StrategyKind(s).value for s in self.strategies)
            ShadowingMode(self.shadowing_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if any(s < 0 for s in self.sigma_sweep):
            raise ConfigError("sigma_sweep values must be >= 0")
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "sigma_sweep", tuple(float(s) for s in self.sigma_sweep))


_SCENARIO_KEYS = {f.name: f.type for f in dataclasses.fields(ScenarioParams)}
_SPEC_KEYS = {f.name for f in dataclasses.fields(ExperimentSpec)} - {"scenario"}
_INT_KEYS = {
    "n_tx",
    "n_trials",
    "t_max",
    "master_seed",
    "n_init",
    "n_test",
    "mle_n_starts",
    "inner_t_max",
    "inner_n_starts",
    "n_workers",
}


def parse_config(text: str, base: ExperimentSpec | None = None) -> ExperimentSpec:
    """Parse flat ``key = value`` lines; ``#`` starts a comment.

    Keys are the field names of ScenarioParams and ExperimentSpec; lists
    (``strategies``, ``sigma_sweep``) are comma separated. Unknown keys
    raise ConfigError.
    """
    base = base or ExperimentSpec()
    scen, spec = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        try:
            if key in _SCENARIO_KEYS:
                scen[key] = int(value) if key in _INT_KEYS else float(value)
            elif key in ("strategies",):
                spec[key] = tuple(v.strip() for v in value.split(",") if v.strip())
            elif key == "sigma_sweep":
                spec[key] = tuple(float(v) for v in value.split(",") if v.strip())
            elif key in ("out_dir", "shadowing_mode"):
                spec[key] = value
            elif key in _SPEC_KEYS:
                spec[key] = int(value)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from None
    try:
        scenario = replace(base.scenario, **scen)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return replace(base, scenario=scenario, **spec)


def load_config(path, base: ExperimentSpec | None = None) -> ExperimentSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return parse_config(text, base)


@dataclass
class TrialResult:
    strategy: str
    trial: int
    sigma_db: float
    curve: np.ndarray  # incumbent at t = 0..t_max
    simulation_count: int
    error: str | None = None
    # noiseless throughput of the final incumbent design; diagnostic only,
    # never seen by the optimiser and not counted as a simulation
    noiseless_final: float = float("nan")

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final(self) -> float:
        return float(self.curve[-1])


def run_trial(spec: ExperimentSpec, strategy: str, trial: int, sigma_db: float = 0.0) -> TrialResult:
    """Run one strategy on one trial's shadowing field."""
    kind = StrategyKind(strategy)
    scenario = replace(spec.scenario, sigma_eps_m=float(sigma_db))

    def seed(label):
        return derive_seed(spec.master_seed, trial, label)

    shadow = build_shadowing_field(scenario, spec.shadowing_mode, seed("shadowing"))
    sim = ChannelSimulator(scenario, shadow, seed(f"noise/{kind.value}"))
    bo_cfg = BoConfig(
        n_init=spec.n_init,
        n_test=spec.n_test,
        t_max=spec.t_max,
        seed=seed(f"bo/{kind.value}"),
        mle=MleConfig(n_starts=spec.mle_n_starts),
    )
    try:
        if kind is StrategyKind.NESTED:
            inner = BoConfig(
                n_init=spec.n_init,
                n_test=spec.n_test,
                t_max=spec.inner_t_max,
                mle=MleConfig(n_starts=spec.inner_n_starts),
            )
            cfg = NestedConfig(
                scenario=scenario,
                outer=bo_cfg,
                inner=inner,
                shadowing_mode=spec.shadowing_mode,
                inner_seed=seed(f"inner/{kind.value}"),
            )
            trace = run_nested(cfg, sim)
        else:
            trace = _BASELINES[kind](scenario, sim, bo_cfg)
        curve = np.asarray(trace.incumbent_curve(), dtype=float)
        error = trace.error
        if error is None and len(curve) != spec.t_max + 1:
            error = "incomplete trace"
        noiseless = _noiseless_value(kind, scenario, shadow, trace) if error is None else float("nan")
    except Exception as exc:  # noqa: BLE001 - a failed trial is recorded, not fatal
        curve, error, noiseless = np.array([]), f"{type(exc).__name__}: {exc}", float("nan")
    return TrialResult(kind.value, trial, float(sigma_db), curve, sim.count, error, noiseless)


def _incumbent_design(kind, scenario, trace):
    """(positions, powers) of a trace's best observed design."""
    n = scenario.n_tx
    if kind is StrategyKind.NESTED:
        d = trace.incumbent
        return d.placement.positions, d.powers.powers
    x = np.asarray(trace.x_best, dtype=float)
    if kind is StrategyKind.PLACEMENT_ONLY:
        return x.reshape(-1, 2), np.full(n, scenario.p_max)
    if kind is StrategyKind.REGULAR_POWER:
        return regular_hex_layout(scenario), x
    return x[: 2 * n].reshape(-1, 2), x[2 * n :]


def _noiseless_value(kind, scenario, shadow, trace) -> float:
    positions, powers = _incumbent_design(kind, scenario, trace)
    clean = replace(scenario, sigma_eps_m=0.0)
    maps = simulate_gain_maps(clean, shadow, positions, check_strips=kind is not StrategyKind.REGULAR_POWER)
    return float(average_throughput(clean, maps, powers))


def _run_trial_args(args):
    return run_trial(*args)


@dataclass(frozen=True)
class CurveStats:
    mean: np.ndarray
    std: np.ndarray
    n: int


@dataclass(frozen=True)
class NoiseRow:
    strategy: str
    sigma_db: float
    mean_bps: float
    std_bps: float
    n: int


@dataclass
class AggregateResult:
    curves: dict
    noise: list
    trials: list
    reference: str = StrategyKind.REGULAR_POWER.value

    @property
    def n_failed(self) -> int:
        return sum(not t.ok for t in self.trials)

    def final_mean(self, strategy: str, sigma_db: float | None = None) -> float:
        if sigma_db is None:
            return float(self.curves[strategy].mean[-1])
        for row in self.noise:
            if row.strategy == strategy and row.sigma_db == sigma_db:
                return row.mean_bps
        raise KeyError((strategy, sigma_db))

    def improvement(self, sigma_db: float | None = None) -> dict:
        """(mean_A - mean_ref) / mean_ref against the reference strategy."""
        ref = self.final_mean(self.reference, sigma_db)
        names = list(self.curves) if sigma_db is None else list(dict.fromkeys(r.strategy for r in self.noise))
        return {s: (self.final_mean(s, sigma_db) - ref) / ref for s in names}


def _std(a, axis=0):
    a = np.asarray(a, dtype=float)
    return a.std(axis=axis, ddof=1) if a.shape[axis] > 1 else np.zeros(a.shape[1:] if axis == 0 else ())


def _aggregate_curves(trials):
    curves = {}
    for s in dict.fromkeys(t.strategy for t in trials):
        ok = [t.curve for t in trials if t.strategy == s and t.ok]
        if ok:
            arr = np.vstack(ok)
            curves[s] = CurveStats(arr.mean(axis=0), _std(arr), len(ok))
    return curves


def _execute(spec, jobs):
    if spec.n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=spec.n_workers) as pool:
            # map preserves submission order, so output never depends on scheduling
            return list(pool.map(_run_trial_args, jobs))
    return [run_trial(*job) for job in jobs]


def run_experiment(spec: ExperimentSpec, sigma_db: float | None = None, write=True) -> AggregateResult:
    """All requested strategies over ``spec.n_trials`` paired trials."""
    sigma = spec.scenario.sigma_eps_m if sigma_db is None else float(sigma_db)
    jobs = [(spec, s, k, sigma) for k in range(spec.n_trials) for s in spec.strategies]
    trials = _execute(spec, jobs)
    curves = _aggregate_curves(trials)
    noise = [
        NoiseRow(s, sigma, float(c.mean[-1]), float(c.std[-1]), c.n) for s, c in curves.items()
    ]
    result = AggregateResult(curves, noise, trials)
    if write and spec.out_dir:
        emit_plot_data(result, spec.out_dir, include_noise=False)
    return result


def sweep_noise(spec: ExperimentSpec, write=True) -> AggregateResult:
    """Final-incumbent statistics for every simulation-error level in the sweep.

    ``curves`` are taken from the first sweep value.
    """
    curves, noise, trials = {}, [], []
    for i, sigma in enumerate(spec.sigma_sweep):
        res = run_experiment(spec, sigma, write=False)
        if i == 0:
            curves = res.curves
        noise.extend(res.noise)
        trials.extend(res.trials)
    result = AggregateResult(curves, noise, trials)
    if write and spec.out_dir:
        emit_plot_data(result, spec.out_dir)
    return result


def _fmt(v) -> str:
    return f"{v:.9g}"


def emit_plot_data(result: AggregateResult, path, include_noise=True) -> list:
    """Write ``curves.csv``, ``noise.csv`` and per-trial ``trials.csv`` into ``path``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    with open(out / "curves.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "t", "mean_bps", "std_bps"])
        for s, c in result.curves.items():
            for t, (m, sd) in enumerate(zip(c.mean, c.std)):
                w.writerow([s, t, _fmt(m), _fmt(sd)])
    written.append(out / "curves.csv")
    with open(out / "noise.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "sigma_db", "mean_bps", "std_bps"])
        if include_noise:
            for r in result.noise:
                w.writerow([r.strategy, _fmt(r.sigma_db), _fmt(r.mean_bps), _fmt(r.std_bps)])
    written.append(out / "noise.csv")
    with open(out / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["strategy", "sigma_db", "trial", "sim_count", "status", "t", "best_bps"])
        for tr in result.trials:
            status = "ok" if tr.ok else "failed"
            for t, v in enumerate(tr.curve):
                w.writerow([tr.strategy, _fmt(tr.sigma_db), tr.trial, tr.simulation_count, status, t, _fmt(v)])
            if not len(tr.curve):
                w.writerow([tr.strategy, _fmt(tr.sigma_db), tr.trial, tr.simulation_count, status, "", ""])
    written.append(out / "trials.csv")
    return written


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
