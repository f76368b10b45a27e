"""Randomized schedule generators: TSP-b, Bwalk, SG and plain Markov walks."""

from .bwalk import (
    BwalkGenerator,
    bwalk_generator,
    bwalk_random_spanning_tree,
    bwalk_round,
    bwalk_transition,
    tree_preorder,
)
from .markovwalk import MarkovChainGenerator
from .stategraph import (
    SgRandomGenerator,
    SgSchedule,
    StateGraph,
    StateNode,
    default_cap,
    minimax_closure,
    sg_build,
    sg_optimal_deterministic,
    sg_random_generator,
)
from .tspb import TspbGenerator, expected_rounds_beta, tspb_generator, tspb_next_distribution

__all__ = [
    "BwalkGenerator",
    "MarkovChainGenerator",
    "SgRandomGenerator",
    "SgSchedule",
    "StateGraph",
    "StateNode",
    "TspbGenerator",
    "bwalk_generator",
    "bwalk_random_spanning_tree",
    "bwalk_round",
    "bwalk_transition",
    "default_cap",
    "expected_rounds_beta",
    "minimax_closure",
    "sg_build",
    "sg_optimal_deterministic",
    "sg_random_generator",
    "tree_preorder",
    "tspb_generator",
    "tspb_next_distribution",
]
