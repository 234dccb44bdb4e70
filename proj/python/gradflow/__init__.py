"""Minimizing movements and EVI checks for lambda-convex gradient flows."""

import json

from ._gradflow import (
    Error,
    InputError,
    PreconditionError,
    SchemeError,
    barenblatt_quantiles,
    check_feasibility,
    e_lambda,
    exact_quadratic_flow,
    gaussian_quantiles,
    isotonic_projection,
    moments,
    quadratic_resolvent,
    run_cli,
    w2,
)
from ._gradflow import simulate as _simulate

SCHEMA = "gradflow.config/1"


def simulate(config, seed=None):
    """Run a config (dict or JSON text) and return times, points, energy, lambda and failure."""
    if isinstance(config, dict):
        config = dict(config)
        config.setdefault("schema", SCHEMA)
        config = json.dumps(config)
    return _simulate(config, seed)


__all__ = [
    "Error",
    "InputError",
    "PreconditionError",
    "SchemeError",
    "SCHEMA",
    "barenblatt_quantiles",
    "check_feasibility",
    "e_lambda",
    "exact_quadratic_flow",
    "gaussian_quantiles",
    "isotonic_projection",
    "moments",
    "quadratic_resolvent",
    "run_cli",
    "simulate",
    "w2",
]
