"""Bayesian optimisation with expected improvement over random candidates."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import erfcx, ndtr

from .gp import Dataset, GPModel, MleConfig, fit_mle

__all__ = [
    "BoConfig",
    "BoTrace",
    "expected_improvement",
    "propose_next",
    "run_bo",
    "write_trace_csv",
]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class BoConfig:
    """Budget and search box for one BO run.

    ``bounds`` is a sequence of (lo, hi) pairs. ``t_max`` counts
    iterations after the ``n_init`` random evaluations.
    """

    bounds: tuple = ()
    n_init: int = 8
    n_test: int = 256
    t_max: int = 50
    seed: int | None = None
    mle: MleConfig = field(default_factory=MleConfig)

    def __post_init__(self):
        if self.n_init < 1 or self.n_test < 1 or self.t_max < 0:
            raise ValueError("need n_init >= 1, n_test >= 1, t_max >= 0")
        if len(self.bounds):
            b = np.asarray(self.bounds, dtype=float)
            if b.ndim != 2 or b.shape[1] != 2 or np.any(b[:, 0] >= b[:, 1]):
                raise ValueError("bounds must be (lo, hi) pairs with lo < hi")
            object.__setattr__(self, "bounds", tuple(map(tuple, b.tolist())))

    def with_(self, **kw) -> "BoConfig":
        return replace(self, **kw)


@dataclass
class BoTrace:
    dataset: Dataset
    best_so_far: np.ndarray
    t_best: int
    n_init: int
    error: str | None = None

    @property
    def x_best(self):
        return self.dataset.inputs[self.t_best]

    @property
    def y_best(self) -> float:
        return float(self.dataset.outputs[self.t_best])

    def incumbent_curve(self) -> np.ndarray:
        """Incumbent after the initial design (t=0) and after each iteration."""
        return self.best_so_far[self.n_init - 1 :]


def expected_improvement(mean, variance, y_plus):
    """E[max(Y - y_plus, 0)] for Y ~ N(mean, variance).

    Uses a scaled complementary error function for z < 0 so that far-tail
    values stay accurate instead of cancelling to zero or going negative.
    """
    scalar = np.ndim(mean) == 0 and np.ndim(variance) == 0
    mean, variance = np.broadcast_arrays(
        np.atleast_1d(np.asarray(mean, dtype=float)), np.atleast_1d(np.asarray(variance, dtype=float))
    )
    sigma = np.sqrt(np.maximum(variance, 0.0))
    diff = mean - y_plus
    out = np.maximum(diff, 0.0)
    pos = sigma > 0
    d, s = diff[pos], sigma[pos]
    z = d / s
    zn = np.minimum(z, 0.0)
    # z < 0: s * phi(z) * (1 + z * Phi(z) / phi(z)) with Phi/phi via erfcx
    upper = d * ndtr(z) + s * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    lower = s * np.exp(-0.5 * zn * zn) * (_INV_SQRT_2PI + 0.5 * zn * erfcx(-zn / math.sqrt(2.0)))
    out[pos] = np.where(z >= 0, upper, lower)
    out = np.maximum(out, 0.0)
    return float(out[0]) if scalar else out


def propose_next(model: GPModel, dataset: Dataset, n_test: int, rng, y_plus=None):
    """Draw ``n_test`` uniform candidates in the box and return the EI argmax.

    ``model`` must be fitted on ``dataset.unit_inputs`` and
    ``dataset.standardized_outputs``. Ties go to the lowest index.
    Returns ``(x, ei_values, candidates)`` with ``x`` in raw units.
    """
    cand_unit = rng.uniform(0.0, 1.0, size=(n_test, dataset.dim))
    post = model.predict(cand_unit)
    if y_plus is None:
        y_plus = float(model.y.max())
    ei = expected_improvement(post.mean, post.variance, y_plus)
    k = int(np.argmax(ei))
    return dataset.from_unit(cand_unit[k]), ei, dataset.from_unit(cand_unit)


def run_bo(objective, cfg: BoConfig, initial=None) -> BoTrace:
    """Maximise a black-box ``objective`` over the box ``cfg.bounds``.

    Random initial design of ``cfg.n_init`` points (or ``initial``), then
    ``cfg.t_max`` rounds of MLE refit, EI proposal and observation. An
    exception from the objective ends the run and is recorded on the trace.
    """
    bounds = np.asarray(cfg.bounds, dtype=float)
    if bounds.size == 0:
        raise ValueError("BoConfig.bounds is empty")
    rng = np.random.default_rng(cfg.seed)
    data = Dataset(bounds)
    error = None

    def observe(x):
        data.append(x, float(objective(x)))

    try:
        if initial is None:
            initial = data.from_unit(rng.uniform(0.0, 1.0, size=(cfg.n_init, data.dim)))
        for x in initial:
            observe(x)
        for _ in range(cfg.t_max):
            u, ys = data.unit_inputs, data.standardized_outputs
            mle = fit_mle(u, ys, cfg.mle, seed=int(rng.integers(2**63)))
            model = GPModel(u, ys, mle.hp)
            x_next, _, _ = propose_next(model, data, cfg.n_test, rng)
            observe(x_next)
    except Exception as exc:  # noqa: BLE001 - reported on the trace
        error = f"{type(exc).__name__}: {exc}"

    y = data.outputs
    best = np.maximum.accumulate(y) if len(y) else np.array([])
    t_best = int(np.argmax(y)) if len(y) else -1
    return BoTrace(data, best, t_best, min(cfg.n_init, max(len(y), 1)), error)


def write_trace_csv(trace: BoTrace, path, names=None) -> None:
    """Write ``t,y,best_so_far`` plus one column per input dimension."""
    X = trace.dataset.inputs
    names = list(names) if names is not None else [f"x{k}" for k in range(X.shape[1])]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "best_so_far", *names])
        for t, (x, y, b) in enumerate(zip(X, trace.dataset.outputs, trace.best_so_far), start=1):
            w.writerow([t, f"{y:.9g}", f"{b:.9g}", *(f"{v:.9g}" for v in x)])
