"""Command-line entry point.

Subcommands: ``run``, ``sweep-iterations``, ``sweep-noise``, ``compare`` and
``dump-gainmap``. Exit codes: 0 success, 1 configuration error, 2 runtime
failure (partial results are still written).
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness
from .baselines import regular_hex_layout
from .channel import ChannelSimulator, build_shadowing_field, write_gain_map_csv
from .nested import placement_box

log = logging.getLogger("bsdesign")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _spec_from_args(args) -> harness.ExperimentSpec:
    spec = harness.ExperimentSpec()
    if args.config:
        spec = harness.load_config(args.config, spec)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["n_trials"] = args.trials
    if args.out is not None:
        overrides["out_dir"] = args.out
    if getattr(args, "workers", None) is not None:
        overrides["n_workers"] = args.workers
    return replace(spec, **overrides)


def _report(result: harness.AggregateResult) -> int:
    for s, c in result.curves.items():
        log.info("%-15s final mean %.4g bps over %d trials", s, c.mean[-1], c.n)
    if result.n_failed:
        log.error("%d trial(s) failed", result.n_failed)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_run(args, spec):
    return _report(harness.run_experiment(spec))


def cmd_compare(args, spec):
    return _report(harness.run_experiment(replace(spec, strategies=harness.ALL_STRATEGIES)))


def cmd_sweep_noise(args, spec):
    if not spec.sigma_sweep:
        spec = replace(spec, sigma_sweep=(0.0, 5.0, 10.0))
    return _report(harness.sweep_noise(spec))


def cmd_dump_gainmap(args, spec):
    scenario = spec.scenario
    seed = harness.derive_seed(spec.master_seed, 0, "shadowing")
    shadow = build_shadowing_field(scenario, spec.shadowing_mode, seed)
    sim = ChannelSimulator(scenario, shadow, harness.derive_seed(spec.master_seed, 0, "noise/dump"))
    if args.layout == "hex":
        positions = regular_hex_layout(scenario)
    else:
        rng = np.random.default_rng(harness.derive_seed(spec.master_seed, 0, "layout/dump"))
        box = placement_box(scenario)
        positions = rng.uniform(box[:, 0], box[:, 1]).reshape(-1, 2)
    maps = sim.simulate(positions, check_strips=args.layout != "hex")
    out = Path(spec.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    for i in range(scenario.n_tx) if args.tx is None else [args.tx]:
        write_gain_map_csv(scenario, maps, i, out / f"gainmap_tx{i}.csv")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "sweep-iterations": cmd_run,
    "sweep-noise": cmd_sweep_noise,
    "compare": cmd_compare,
    "dump-gainmap": cmd_dump_gainmap,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--trials", type=int, help="number of paired trials")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes for trials")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="bsdesign", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the configured strategies")
    sub.add_parser("sweep-iterations", parents=[common], help="incumbent-vs-iteration curves")
    sub.add_parser("sweep-noise", parents=[common], help="final throughput vs simulation error")
    sub.add_parser("compare", parents=[common], help="run all five strategies")
    dump = sub.add_parser("dump-gainmap", parents=[common], help="write gain maps as CSV")
    dump.add_argument("--layout", choices=["hex", "random"], default="hex")
    dump.add_argument("--tx", type=int, help="only this transmitter")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    try:
        spec = _spec_from_args(args)
    except harness.ConfigError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    try:
        return COMMANDS[args.command](args, spec)
    except Exception as exc:  # noqa: BLE001
        log.error("run failed: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
