"""
One nested run against the hexagonal baseline
=============================================

Both strategies get the same budget of 8 + T channel simulations on the
same shadowing field. A coarser grid keeps this quick.
"""

import numpy as np

from bsdesign.baselines import regular_hex_layout, run_regular_power
from bsdesign.bo import BoConfig
from bsdesign.channel import ChannelSimulator, ScenarioParams, build_shadowing_field
from bsdesign.nested import NestedConfig, run_nested

params = ScenarioParams(grid_step=40.0, n_tx=7)
T = 15

field = build_shadowing_field(params, "midpoint-2d", seed=3)

sim = ChannelSimulator(params, field, seed=4)
nested = run_nested(NestedConfig(scenario=params, outer=BoConfig(t_max=T, seed=5)), sim)
print("nested: simulations", nested.simulation_count, "best", round(nested.y_best / 1e6, 2), "Mbps")

sim = ChannelSimulator(params, field, seed=4)
regular = run_regular_power(params, sim, BoConfig(t_max=T, seed=5))
print("regular: simulations", sim.count, "best", round(regular.y_best / 1e6, 2), "Mbps")

# incumbent after the initial design and after each iteration
for t, (a, b) in enumerate(zip(nested.incumbent_curve(), regular.incumbent_curve())):
    print(f"t={t:>2}  nested {a / 1e6:6.2f}  regular {b / 1e6:6.2f}")

best = nested.incumbent
print("hex sites:\n", np.round(regular_hex_layout(params), 1))
print("nested placement:\n", np.round(best.placement.positions, 1))
print("nested powers (mW):", np.round(best.powers.powers, 2))
