"""
A small paired comparison through the harness
=============================================

Writes curves.csv, noise.csv and trials.csv into ./demo_out. The same
thing from the shell: ``python -m bsdesign compare --config cfg --out demo_out``.
"""

from bsdesign.channel import ScenarioParams
from bsdesign.harness import ExperimentSpec, sweep_noise

spec = ExperimentSpec(
    scenario=ScenarioParams(grid_step=50.0, n_tx=7),
    n_trials=3,
    t_max=5,
    sigma_sweep=(0.0, 10.0),
    out_dir="demo_out",
)
res = sweep_noise(spec)

for s, c in res.curves.items():
    print(f"{s:<15} final {c.mean[-1] / 1e6:6.2f} Mbps (std {c.std[-1] / 1e6:.2f}, {c.n} trials)")
for row in res.noise:
    print(f"{row.strategy:<15} sigma {row.sigma_db:>4} dB  {row.mean_bps / 1e6:6.2f} Mbps")
print("relative to regular_power at 0 dB:", {k: round(v, 3) for k, v in res.improvement(0.0).items()})
