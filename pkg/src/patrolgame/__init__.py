"""Adversarial patrolling games: instances, Markov-chain analysis, randomized patrol
schedules and empirical attacker best responses."""

from .errors import PatrolGameError
from .instance import GraphInstance, PolyUtility, Site, UtilitySpec, generate_random_instance, load_instance, load_sites_csv
from .oracle import attack_payoff, best_response_empirical, bgt_zeta
from .report import PayoffReport, Visibility, normalize
from .schedule import ScheduleGenerator, ScheduleTrace, emr_estimate, entropy_rate_estimate, sample_trace
from .tours import bgt_generator, bgt_plan, tsp_tour

__version__ = "0.1.0"

__all__ = [
    "GraphInstance",
    "PatrolGameError",
    "PayoffReport",
    "PolyUtility",
    "ScheduleGenerator",
    "ScheduleTrace",
    "Site",
    "UtilitySpec",
    "Visibility",
    "attack_payoff",
    "best_response_empirical",
    "bgt_generator",
    "bgt_plan",
    "bgt_zeta",
    "emr_estimate",
    "entropy_rate_estimate",
    "generate_random_instance",
    "load_instance",
    "load_sites_csv",
    "normalize",
    "sample_trace",
    "tsp_tour",
]
