import csv
from dataclasses import replace

import numpy as np
import pytest

from bsdesign import cli
from bsdesign.channel import ScenarioParams
from bsdesign.harness import (
    ALL_STRATEGIES,
    ConfigError,
    ExperimentSpec,
    derive_seed,
    emit_plot_data,
    parse_config,
    run_experiment,
    run_trial,
    sweep_noise,
)

TINY = ExperimentSpec(
    scenario=ScenarioParams(grid_step=100.0, n_tx=7),
    n_trials=2,
    t_max=2,
    n_init=3,
    n_test=32,
    mle_n_starts=2,
    inner_t_max=2,
    inner_n_starts=1,
)

TINY_CONFIG = """\
# small and quick
grid_step = 100
n_tx = 7
n_trials = 2
t_max = 2
n_init = 3
n_test = 32
mle_n_starts = 2
inner_t_max = 2
inner_n_starts = 1
"""


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestSeeds:
    def test_stable_and_distinct(self):
        assert derive_seed(0, 0, "shadowing") == derive_seed(0, 0, "shadowing")
        seeds = {derive_seed(m, k, lab) for m in (0, 1) for k in range(5) for lab in ("shadowing", "bo/nested")}
        assert len(seeds) == 20
        assert 0 <= derive_seed(7, 3, "noise/nested") < 2**64

    def test_paired_fields(self):
        # every strategy's trial k is run on the same PPP field
        from bsdesign.channel import build_shadowing_field

        s = derive_seed(0, 4, "shadowing")
        a = build_shadowing_field(TINY.scenario, "midpoint-2d", s)
        b = build_shadowing_field(TINY.scenario, "midpoint-2d", s)
        assert np.array_equal(a.points, b.points) and np.array_equal(a.values, b.values)


class TestConfig:
    def test_parse(self):
        spec = parse_config("n_tx = 19\nsigma_s=4.5\nstrategies = nested, random_search\nsigma_sweep=0,10\n")
        assert spec.scenario.n_tx == 19 and spec.scenario.sigma_s == 4.5
        assert spec.strategies == ("nested", "random_search")
        assert spec.sigma_sweep == (0.0, 10.0)

    def test_round_trip_defaults(self):
        assert parse_config("") == ExperimentSpec()

    @pytest.mark.parametrize(
        "text",
        [
            "colour = blue",
            "n_tx = seven",
            "n_trials = 0",
            "strategies = simulated_annealing",
            "sigma_sweep = 0, -1",
            "grid_step = 33",
            "just some words",
            "shadowing_mode = 3d",
        ],
    )
    def test_errors(self, text):
        with pytest.raises(ConfigError):
            parse_config(text)


class TestRun:
    def test_random_search_init_only(self):
        spec = replace(TINY, n_trials=1, t_max=0, n_init=8, strategies=("random_search",))
        res = run_experiment(spec, write=False)
        c = res.curves["random_search"]
        assert c.n == 1 and len(c.mean) == 1
        tr = res.trials[0]
        assert tr.simulation_count == 8
        assert c.mean[0] == tr.curve[0]

    def test_budget_every_strategy(self):
        for s in ALL_STRATEGIES:
            tr = run_trial(TINY, s, 0)
            assert tr.ok, tr.error
            assert tr.simulation_count == TINY.n_init + TINY.t_max
            assert len(tr.curve) == TINY.t_max + 1

    def test_failed_trial_recorded(self):
        # the hexagonal layout has no 5-site version, so regular_power fails
        spec = replace(TINY, scenario=replace(TINY.scenario, n_tx=5), strategies=("regular_power", "random_search"))
        res = run_experiment(spec, write=False)
        assert res.n_failed == 2
        assert res.curves["random_search"].n == 2

    def test_aggregates_match_trials_csv(self, tmp_path):
        spec = replace(TINY, strategies=("placement_only", "random_search"), n_trials=3, out_dir=str(tmp_path))
        res = run_experiment(spec)
        rows = read_csv(tmp_path / "trials.csv")
        curves = read_csv(tmp_path / "curves.csv")
        for s in spec.strategies:
            for t in range(spec.t_max + 1):
                per_trial = [float(r["best_bps"]) for r in rows if r["strategy"] == s and int(r["t"]) == t]
                assert len(per_trial) == 3
                agg = next(float(r["mean_bps"]) for r in curves if r["strategy"] == s and int(r["t"]) == t)
                assert agg == pytest.approx(np.mean(per_trial), rel=1e-8)
                assert float(f"{res.curves[s].mean[t]:.9g}") == agg

    def test_improvement(self):
        res = run_experiment(replace(TINY, strategies=("regular_power", "random_search")), write=False)
        imp = res.improvement()
        assert imp["regular_power"] == 0.0
        ref = res.final_mean("regular_power")
        assert imp["random_search"] == pytest.approx((res.final_mean("random_search") - ref) / ref)


class TestOutput:
    def test_curve_rows(self, tmp_path):
        spec = replace(TINY, n_trials=1, strategies=("random_search",), out_dir=str(tmp_path))
        run_experiment(spec)
        rows = read_csv(tmp_path / "curves.csv")
        assert [int(r["t"]) for r in rows] == [0, 1, 2]

    def test_empty_sweep_header_only(self, tmp_path):
        spec = replace(TINY, n_trials=1, strategies=("random_search",), out_dir=str(tmp_path))
        sweep_noise(spec)
        assert (tmp_path / "noise.csv").read_text() == "strategy,sigma_db,mean_bps,std_bps\n"

    def test_sweep_zero_equals_run(self, tmp_path):
        spec = replace(TINY, strategies=("nested", "regular_power"), sigma_sweep=(0.0,))
        a = run_experiment(spec, write=False)
        b = sweep_noise(spec, write=False)
        for s in spec.strategies:
            assert np.array_equal(a.curves[s].mean, b.curves[s].mean)
            assert np.array_equal(a.curves[s].std, b.curves[s].std)
        assert a.noise == b.noise

    def test_noise_table(self, tmp_path):
        spec = replace(TINY, strategies=("random_search",), sigma_sweep=(0.0, 5.0), out_dir=str(tmp_path))
        res = sweep_noise(spec)
        rows = read_csv(tmp_path / "noise.csv")
        assert [(r["strategy"], float(r["sigma_db"])) for r in rows] == [("random_search", 0.0), ("random_search", 5.0)]
        for r, n in zip(rows, res.noise):
            assert float(r["mean_bps"]) == float(f"{n.mean_bps:.9g}")
            assert float(r["std_bps"]) == float(f"{n.std_bps:.9g}")

    def test_emit_is_deterministic(self, tmp_path):
        spec = replace(TINY, strategies=("placement_only",))
        res = run_experiment(spec, write=False)
        emit_plot_data(res, tmp_path / "a")
        emit_plot_data(res, tmp_path / "b")
        for name in ("curves.csv", "noise.csv", "trials.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


class TestCli:
    @pytest.fixture
    def config(self, tmp_path):
        path = tmp_path / "tiny.cfg"
        path.write_text(TINY_CONFIG)
        return str(path)

    def test_run_byte_identical(self, tmp_path, config):
        args = ["--config", config, "--seed", "3", "--trials", "1"]
        assert cli.main(["run", *args, "--out", str(tmp_path / "a")]) == 0
        assert cli.main(["run", *args, "--out", str(tmp_path / "b")]) == 0
        for name in ("curves.csv", "trials.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_bad_config_exit_code(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("n_tx = 7\nwarp_speed = 9\n")
        assert cli.main(["run", "--config", str(path)]) == 1
        assert cli.main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
        assert cli.main(["run", "--trials", "0"]) == 1

    def test_runtime_failure_exit_code(self, tmp_path):
        path = tmp_path / "five.cfg"
        path.write_text(TINY_CONFIG.replace("n_tx = 7", "n_tx = 5") + "strategies = regular_power, random_search\n")
        out = tmp_path / "out"
        assert cli.main(["run", "--config", str(path), "--out", str(out)]) == 2
        # partial results are still written
        rows = read_csv(out / "trials.csv")
        assert {r["status"] for r in rows} == {"ok", "failed"}

    def test_dump_gainmap(self, tmp_path, config):
        out = tmp_path / "maps"
        assert cli.main(["dump-gainmap", "--config", config, "--out", str(out), "--tx", "2"]) == 0
        rows = list(csv.reader(open(out / "gainmap_tx2.csv")))
        assert rows[0] == ["x_m", "y_m", "gain_db"]
        assert len(rows) == 1 + 100
        first = (out / "gainmap_tx2.csv").read_bytes()
        assert cli.main(["dump-gainmap", "--config", config, "--out", str(out), "--tx", "2"]) == 0
        assert (out / "gainmap_tx2.csv").read_bytes() == first


def test_noiseless_final_matches_observed_without_noise():
    for s in ALL_STRATEGIES:
        tr = run_trial(TINY, s, 1)
        assert tr.noiseless_final == pytest.approx(tr.final, rel=1e-12)


def test_noiseless_final_is_finite_with_noise():
    tr = run_trial(TINY, "nested", 0, sigma_db=10.0)
    assert tr.ok and np.isfinite(tr.noiseless_final)
    assert tr.simulation_count == TINY.n_init + TINY.t_max
