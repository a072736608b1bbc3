"""Feature allocation samplers and benchmark harness."""

import json

from . import _core
from ._core import (
    ContractViolation,
    ValidationError,
    bcubed,
    fbb_log_pmf,
    friedman_test,
    ibp_log_pmf,
    left_order_form,
    mean_ranks,
    nemenyi_posthoc,
    relative_log_density,
)

__all__ = [
    "ContractViolation",
    "ValidationError",
    "bcubed",
    "compare",
    "default_sim_spec",
    "fbb_log_pmf",
    "friedman_test",
    "ibp_log_pmf",
    "left_order_form",
    "mean_ranks",
    "nemenyi_posthoc",
    "relative_log_density",
    "run_experiment",
    "simulate",
]


def default_sim_spec():
    return json.loads(_core.default_sim_spec())


def simulate(spec=None):
    """Simulated dataset document (dict) for a simulation spec (dict)."""
    return json.loads(_core.simulate(json.dumps(spec or {})))


def run_experiment(config, workers=1):
    """Runs every chain of an experiment config (dict); one trace dict per chain."""
    return _core.run_experiment(json.dumps(config), workers)


def compare(methods, checkpoints, metric="rel_log_density", alpha=0.001):
    """Report dict comparing {method: traces} at the given checkpoints."""
    return json.loads(_core.compare(methods, list(checkpoints), metric, alpha))
