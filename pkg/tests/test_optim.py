import numpy as np
import pytest

from bsdesign.optim import NmConfig, multi_start, nelder_mead


def test_interior_quadratic():
    c = np.array([0.3, -1.2, 2.0])
    cfg = NmConfig(bounds=[(-5, 5)] * 3, f_tol=1e-14, max_iters=2000)
    x, fx = nelder_mead(lambda x: -np.sum((x - c) ** 2), np.zeros(3), cfg)
    assert np.allclose(x, c, atol=1e-4)
    assert fx == pytest.approx(0.0, abs=1e-8)


def test_constant_function_stops_immediately():
    calls = []

    def f(x):
        calls.append(1)
        return 1.0

    cfg = NmConfig(bounds=[(0, 1)] * 2)
    x, fx = nelder_mead(f, [0.4, 0.6], cfg)
    assert fx == 1.0
    assert len(calls) == 3  # the initial simplex only
    assert np.allclose(x, [0.4, 0.6], atol=0.05 + 1e-12)


def test_boundary_optimum():
    cfg = NmConfig(bounds=[(0, 1)], f_tol=1e-12)
    x, fx = nelder_mead(lambda x: x[0], [0.2], cfg)
    assert x[0] == pytest.approx(1.0, abs=1e-4)


def test_non_finite_rejected():
    cfg = NmConfig(bounds=[(-2, 2)] * 2, f_tol=1e-12)

    def f(x):
        return np.nan if x[0] > 1 else -np.sum((x - [0.7, 0.3]) ** 2)

    x, fx = nelder_mead(f, [0.0, 0.0], cfg)
    assert np.isfinite(fx)
    assert np.allclose(x, [0.7, 0.3], atol=1e-4)


def test_best_value_never_decreases():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(4, 4))
    cfg = NmConfig(bounds=[(-3, 3)] * 4)
    seen = []
    nelder_mead(lambda x: -np.sum((A @ x - 1) ** 2) - np.sin(5 * x).sum(), np.zeros(4), cfg,
                callback=lambda x, f: seen.append(f))
    assert len(seen) > 10
    assert np.all(np.diff(seen) >= 0)


def test_stays_in_bounds():
    cfg = NmConfig(bounds=[(0, 1), (-1, 0)])
    xs = []

    def f(x):
        xs.append(x.copy())
        return x[0] - x[1]

    x, _ = multi_start(f, cfg, seed=1)
    xs = np.array(xs)
    assert np.all(xs[:, 0] >= 0) and np.all(xs[:, 0] <= 1)
    assert np.all(xs[:, 1] >= -1) and np.all(xs[:, 1] <= 0)


def test_single_start_equals_nelder_mead():
    cfg = NmConfig(bounds=[(-2, 2)] * 2, n_starts=1)
    f = lambda x: -np.sum((x - 0.3) ** 2) + 0.1 * np.cos(7 * x[0])
    x0 = np.random.default_rng(5).uniform(cfg.lo, cfg.hi, size=(1, 2))
    a = multi_start(f, cfg, seed=5)
    b = nelder_mead(f, x0[0], cfg)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def bimodal(x):
    # higher peak at 0.8, lower (wider) one at 0.2
    return 1.0 * np.exp(-((x[0] - 0.8) ** 2) / 0.005) + 0.7 * np.exp(-((x[0] - 0.2) ** 2) / 0.02)


def test_bimodal_grid_oracle():
    grid = np.linspace(0, 1, 100001)
    vals = np.array([bimodal([g]) for g in grid[::10]])
    x_star = grid[::10][np.argmax(vals)]
    cfg = NmConfig(bounds=[(0, 1)], n_starts=16, f_tol=1e-12)
    hits = 0
    for seed in range(100):
        x, _ = multi_start(bimodal, cfg, seed=seed)
        hits += abs(x[0] - x_star) < 1e-3
    assert hits >= 95


def test_max_over_runs():
    cfg = NmConfig(bounds=[(0, 1)], n_starts=6)
    starts = np.random.default_rng(2).uniform(0, 1, (6, 1))
    runs = [nelder_mead(bimodal, s, cfg)[1] for s in starts]
    _, best = multi_start(bimodal, cfg, starts=starts)
    assert best == max(runs)


def test_reproducible():
    cfg = NmConfig(bounds=[(-1, 1)] * 3)
    f = lambda x: -np.sum(x**2) + np.sin(3 * x).sum()
    a = multi_start(f, cfg, seed=42)
    b = multi_start(f, cfg, seed=42)
    assert np.array_equal(a[0], b[0]) and a[1] == b[1]


@pytest.mark.parametrize(
    "kw",
    [dict(bounds=[]), dict(bounds=[(1, 0)]), dict(bounds=[(0, 1)], reflect=0), dict(bounds=[(0, 1)], n_starts=0)],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        NmConfig(**kw)
