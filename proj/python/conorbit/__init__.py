"""Connecting orbits of Tonelli Lagrangians on surfaces."""

import json

from ._core import (
    Model,
    discrete_action,
    list_models,
    make_model,
    optimal_time,
    scenario_names,
    torus_backward_loop,
)
from ._core import reproduce as _reproduce
from ._core import run_config as _run_config


def run_config(text):
    """Run a key = value config; returns (exit_code, verdict dict, files dict)."""
    r = _run_config(text)
    return r["exit_code"], json.loads(r["verdict"] or "null"), r["files"]


def reproduce(name="", seed=1):
    r = _reproduce(name, seed)
    return r["exit_code"], json.loads(r["verdict"] or "null"), r["files"]


__all__ = [
    "Model",
    "discrete_action",
    "list_models",
    "make_model",
    "optimal_time",
    "reproduce",
    "run_config",
    "scenario_names",
    "torus_backward_loop",
]
