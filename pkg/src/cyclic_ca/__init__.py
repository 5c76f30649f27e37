"""Cyclic cellular automata, their height-walk encoding, and exact and Monte Carlo experiments."""

from .automata import (
    Cyclic,
    OneSidedCyclic3,
    ProbabilisticCyclic,
    TournamentRule,
    iterate,
    iterate_column,
    parse_rule,
    space_time,
    step,
)
from .core import BernoulliParams, Configuration, sample_configuration
from .seeding import SeedSpec
from .tournaments import Tournament, bundled, enumerate_mpp, is_max_path_preserving
from .walks import Walk, embed, encode_walk, flip_tail, max_oracle, sample_walk

__all__ = [
    "BernoulliParams",
    "Configuration",
    "Cyclic",
    "OneSidedCyclic3",
    "ProbabilisticCyclic",
    "SeedSpec",
    "Tournament",
    "TournamentRule",
    "Walk",
    "bundled",
    "embed",
    "encode_walk",
    "enumerate_mpp",
    "flip_tail",
    "is_max_path_preserving",
    "iterate",
    "iterate_column",
    "max_oracle",
    "parse_rule",
    "sample_configuration",
    "sample_walk",
    "space_time",
    "step",
]
__version__ = "0.1.0"
