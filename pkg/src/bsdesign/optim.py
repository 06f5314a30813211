"""Bounded Nelder-Mead maximiser with random multi-start."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["NmConfig", "nelder_mead", "multi_start"]


@dataclass(frozen=True)
class NmConfig:
    """Simplex coefficients, stopping rule and search box.

    ``max_iters`` of ``None`` means ``200 * d``.
    """

    bounds: tuple = ()
    reflect: float = 1.0
    expand: float = 2.0
    contract: float = 0.5
    shrink: float = 0.5
    max_iters: int | None = None
    f_tol: float = 1e-8
    n_starts: int = 8

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float)
        if b.ndim != 2 or b.shape[1] != 2 or len(b) == 0:
            raise ValueError("bounds must be a non-empty sequence of (lo, hi) pairs")
        if np.any(b[:, 0] >= b[:, 1]):
            raise ValueError("each bound needs lo < hi")
        if min(self.reflect, self.expand, self.contract, self.shrink) <= 0:
            raise ValueError("simplex coefficients must be positive")
        if self.n_starts < 1:
            raise ValueError("n_starts must be >= 1")
        object.__setattr__(self, "bounds", tuple(map(tuple, b.tolist())))

    @property
    def lo(self):
        return np.array([b[0] for b in self.bounds])

    @property
    def hi(self):
        return np.array([b[1] for b in self.bounds])


def _safe(f, x):
    v = f(x)
    v = float(v)
    return v if np.isfinite(v) else -np.inf


def nelder_mead(f, x0, cfg: NmConfig, callback=None):
    """Maximise ``f`` from ``x0`` with the simplex method.

    Proposals are clipped into the box; non-finite values count as -inf.
    Stops when the spread of simplex values falls below ``cfg.f_tol`` or
    after ``cfg.max_iters`` iterations. ``callback(x_best, f_best)`` is
    called once per iteration. Returns ``(x_best, f_best)``.
    """
    lo, hi = cfg.lo, cfg.hi
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    d = x0.size
    if x0.shape != lo.shape:
        raise ValueError("x0 does not match the bounds dimension")
    max_iters = 200 * d if cfg.max_iters is None else cfg.max_iters

    simplex = np.empty((d + 1, d))
    simplex[0] = x0
    step = 0.05 * (hi - lo)
    for k in range(d):
        v = x0.copy()
        v[k] = v[k] + step[k] if v[k] + step[k] <= hi[k] else v[k] - step[k]
        simplex[k + 1] = v
    fs = np.array([_safe(f, v) for v in simplex])

    for _ in range(max_iters):
        order = np.argsort(-fs, kind="stable")
        simplex, fs = simplex[order], fs[order]
        if callback is not None:
            callback(simplex[0], fs[0])
        # fs[0] == -inf means every vertex was rejected
        if not np.isfinite(fs[0]) or fs[0] - fs[-1] < cfg.f_tol:
            break
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        xr = np.clip(centroid + cfg.reflect * (centroid - worst), lo, hi)
        fr = _safe(f, xr)
        if fr > fs[0]:
            xe = np.clip(centroid + cfg.expand * (xr - centroid), lo, hi)
            fe = _safe(f, xe)
            if fe > fr:
                simplex[-1], fs[-1] = xe, fe
            else:
                simplex[-1], fs[-1] = xr, fr
            continue
        if fr > fs[-2]:
            simplex[-1], fs[-1] = xr, fr
            continue
        if fr > fs[-1]:
            xc = centroid + cfg.contract * (xr - centroid)
        else:
            xc = centroid + cfg.contract * (worst - centroid)
        fc = _safe(f, xc)
        if fc > max(fr, fs[-1]):
            simplex[-1], fs[-1] = xc, fc
            continue
        for k in range(1, d + 1):
            simplex[k] = simplex[0] + cfg.shrink * (simplex[k] - simplex[0])
            fs[k] = _safe(f, simplex[k])

    b = int(np.argmax(fs))
    return simplex[b].copy(), float(fs[b])


def multi_start(f, cfg: NmConfig, seed=None, starts=None):
    """Best of ``cfg.n_starts`` Nelder-Mead runs from seeded uniform starts.

    ``starts`` may supply explicit starting points instead.
    """
    if starts is None:
        rng = np.random.default_rng(seed)
        starts = rng.uniform(cfg.lo, cfg.hi, size=(cfg.n_starts, len(cfg.bounds)))
    best_x, best_f = None, -np.inf
    for x0 in np.atleast_2d(starts):
        x, fx = nelder_mead(f, x0, cfg)
        if best_x is None or fx > best_f:
            best_x, best_f = x, fx
    return best_x, best_f
