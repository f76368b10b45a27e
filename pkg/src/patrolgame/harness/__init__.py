"""Experiment harness: configs, grid runners and the command line."""

from .config import ExperimentConfig, build_generator, generator_from_json, load_config, parse_config
from .runner import frontier, payoff_sweep, scalability

__all__ = [
    "ExperimentConfig",
    "build_generator",
    "frontier",
    "generator_from_json",
    "load_config",
    "parse_config",
    "payoff_sweep",
    "scalability",
]
