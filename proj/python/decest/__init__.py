"""Decentralized multi-robot estimation simulator."""

import json

from . import _core
from ._core import ConfigError, nees_envelope, se2_exp, se2_log, se23_exp, se23_log

__version__ = _core.__version__

__all__ = [
    "ConfigError",
    "bench_message_size",
    "config_hash",
    "monte_carlo",
    "nees_envelope",
    "observability",
    "scenario",
    "se2_exp",
    "se2_log",
    "se23_exp",
    "se23_log",
    "sweep_share_rate",
    "trace_csv",
    "validate",
]


def _dump(config):
    return config if isinstance(config, str) else json.dumps(config)


def scenario(name, n_robots=2):
    """Built-in scenario config ("toy", "ground" or "quad") as a dict."""
    return json.loads(_core.scenario(name, n_robots))


def validate(config):
    """Parse and validate a config; returns it with defaults filled in."""
    return json.loads(_core.validate(_dump(config)))


def config_hash(config):
    return _core.config_hash(_dump(config))


def monte_carlo(config, trials=1, variants=("proposed",), threads=0):
    """Runs the trials and returns the summary dict."""
    return json.loads(_core.monte_carlo(_dump(config), trials, list(variants), threads))


def trace_csv(config, trial=0, variants=("proposed",)):
    return _core.trace_csv(_dump(config), trial, list(variants))


def observability(config, steps=20, stride=10, landmarks=True, pseudomeasurements=True):
    return json.loads(
        _core.observability(_dump(config), steps, stride, landmarks, pseudomeasurements)
    )


def sweep_share_rate(config, rates, trials=1, threads=0):
    """List of (rate, per-robot own position RMSE)."""
    return _core.sweep_share_rate(_dump(config), list(rates), trials, threads)


def bench_message_size(config, lengths=(1, 10, 100, 1000)):
    """List of (steps, rmi_bytes, raw_input_bytes)."""
    return _core.bench_message_size(_dump(config), list(lengths))
