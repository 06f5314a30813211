import csv

import numpy as np
import pytest

from bsdesign.bo import BoConfig
from bsdesign.channel import ChannelSimulator, ScenarioParams, build_shadowing_field
from bsdesign.gp import MleConfig
from bsdesign.nested import (
    NestedConfig,
    optimize_powers,
    placement_box,
    placement_to_vector,
    run_nested,
    vector_to_placement,
    write_nested_csv,
)
from bsdesign.objective import average_throughput, check_feasible

SMALL = ScenarioParams(grid_step=50.0, n_tx=3)
FAST_INNER = BoConfig(n_init=4, n_test=64, t_max=4, mle=MleConfig(n_starts=1))
FAST_OUTER = BoConfig(n_init=3, n_test=64, t_max=2, mle=MleConfig(n_starts=2))


class CountingSimulator(ChannelSimulator):
    def __init__(self, *a, **kw):
        super().__init__(*a, **kw)
        self.calls = []

    def simulate(self, positions, check_strips=True):
        self.calls.append(np.array(positions))
        return super().simulate(positions, check_strips)


def make_sim(params=SMALL, seed=0):
    return CountingSimulator(params, build_shadowing_field(params, "midpoint-2d", seed), seed + 1)


class TestPlacementVector:
    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for n in (1, 3, 7):
            p = ScenarioParams(n_tx=n)
            v = rng.uniform(size=2 * n)
            assert np.allclose(placement_to_vector(vector_to_placement(v, p), p), v, atol=1e-12)

    def test_corner_and_centre(self):
        p = ScenarioParams(n_tx=7)
        strip = 1000.0 / 7
        pos = vector_to_placement(np.zeros(14), p)
        assert np.allclose(pos[:, 0], 0) and np.allclose(pos[:, 1], strip * np.arange(7))
        pos = vector_to_placement(np.full(14, 0.5), p)
        assert np.allclose(pos[:, 0], 500) and np.allclose(pos[:, 1], strip * (np.arange(7) + 0.5))

    def test_any_unit_vector_is_feasible(self):
        p = ScenarioParams(n_tx=7)
        box = placement_box(p)
        for v in np.random.default_rng(1).uniform(size=(50, 14)):
            pos = vector_to_placement(v, p).ravel()
            assert np.all(pos >= box[:, 0]) and np.all(pos <= box[:, 1])


class TestOptimizePowers:
    def test_single_tx_reaches_full_power(self):
        p = ScenarioParams(n_tx=1, grid_step=50.0)
        maps = make_sim(p).simulate([[500.0, 500.0]])
        powers, y = optimize_powers(maps, p, NestedConfig().inner.with_(seed=0))
        # throughput is increasing in power, so p_max is optimal
        assert y >= 0.98 * average_throughput(p, maps, [p.p_max])
        assert 0 <= powers[0] <= p.p_max

    def test_init_only(self):
        maps = make_sim().simulate(vector_to_placement(np.full(6, 0.5), SMALL))
        powers, y = optimize_powers(maps, SMALL, FAST_INNER.with_(t_max=0, seed=1))
        assert y == pytest.approx(average_throughput(SMALL, maps, powers), rel=1e-12)

    def test_y_matches_powers(self):
        maps = make_sim().simulate(vector_to_placement(np.full(6, 0.3), SMALL))
        powers, y = optimize_powers(maps, SMALL, FAST_INNER.with_(seed=2))
        assert len(powers) == 3 and np.all((powers >= 0) & (powers <= SMALL.p_max))
        assert y == average_throughput(SMALL, maps, powers)


def nested_cfg(t_max=2):
    return NestedConfig(scenario=SMALL, outer=FAST_OUTER.with_(t_max=t_max, seed=5), inner=FAST_INNER)


class TestRunNested:
    def test_budget(self):
        for t in (0, 2):
            sim = make_sim()
            tr = run_nested(nested_cfg(t), sim)
            assert tr.simulation_count == 3 + t == sim.count == len(sim.calls)
            assert [r.sim_index for r in tr.records] == list(range(1, 4 + t))
            assert len(tr.incumbent_curve()) == t + 1

    def test_inner_loop_simulates_nothing(self):
        sim = make_sim()
        tr = run_nested(nested_cfg(), sim)
        # one call per outer record, with that record's placement
        assert len(sim.calls) == len(tr.records)
        for call, r in zip(sim.calls, tr.records):
            assert np.array_equal(call, r.placement)

    def test_incumbent(self):
        tr = run_nested(nested_cfg(), make_sim())
        assert tr.error is None
        assert tr.y_best == max(r.y for r in tr.records) == tr.best_so_far[-1]
        assert np.all(np.diff(tr.best_so_far) >= 0)
        assert check_feasible(SMALL, tr.incumbent).ok

    def test_deterministic(self):
        a = run_nested(nested_cfg())
        b = run_nested(nested_cfg())
        assert np.array_equal(a.best_so_far, b.best_so_far)
        assert all(np.array_equal(r.powers, s.powers) for r, s in zip(a.records, b.records))

    def test_csv(self, tmp_path):
        tr = run_nested(nested_cfg(), make_sim())
        path = tmp_path / "nested.csv"
        write_nested_csv(tr, path)
        rows = list(csv.reader(open(path)))
        assert rows[0][:4] == ["t", "y", "best_so_far", "sim_count"]
        assert len(rows[0]) == 4 + 3 * 3
        assert [int(r[3]) for r in rows[1:]] == [1, 2, 3, 4, 5]
