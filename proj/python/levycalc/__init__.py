"""Malliavin calculus experiments on the canonical Levy space."""

import json

from ._core import (
    AssertionRecord,
    ConfigError,
    ExperimentConfig,
    RunReport,
    Status,
    experiment_kinds,
    preset,
    preset_names,
    run,
    write_artifacts,
)

__all__ = [
    "AssertionRecord",
    "ConfigError",
    "ExperimentConfig",
    "RunReport",
    "Status",
    "config_from_dict",
    "experiment_kinds",
    "preset",
    "preset_names",
    "run",
    "write_artifacts",
]


def config_from_dict(document):
    """Validate a config given as a plain dict."""
    return ExperimentConfig.from_json_text(json.dumps(document))


def config_document(config):
    """The config as a plain dict."""
    return json.loads(config.canonical())


__all__.append("config_document")
