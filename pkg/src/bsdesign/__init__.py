"""Bayesian-optimisation design of base-station placement and transmit power.

Modules
-------
channel    shadowing field, path loss, gain-map simulation
objective  SINR, capacity, area-averaged throughput, feasibility
optim      bounded multi-start Nelder-Mead
gp         exact GP regression and hyperparameter MLE
bo         expected-improvement BO loop
nested     outer placement BO with inner power BO
baselines  comparison strategies and the hexagonal reference layout
harness    paired-trial experiments, aggregation, CSV output
"""

from .bo import BoConfig, BoTrace, expected_improvement, propose_next, run_bo
from .channel import (
    ChannelSimulator,
    ConstraintViolation,
    GainMapSet,
    ScenarioParams,
    ShadowingField,
    ShadowingMode,
    build_shadowing_field,
    channel_gain_db,
    query_shadow_db,
    simulate_gain_maps,
)
from .gp import Dataset, GPModel, Hyperparams, MleConfig, fit_mle, log_marginal_likelihood, predict
from .nested import NestedConfig, NestedTrace, optimize_powers, run_nested
from .objective import (
    DesignPoint,
    Placement,
    PowerVector,
    average_throughput,
    capacity_at_cell,
    check_feasible,
)

__version__ = "0.1.0"
