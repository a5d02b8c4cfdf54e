"""Simulator and protocol library for actively dynamic networks."""

from .model import TemporalSnapshot, RoundActions, UsageError, neighbors_1, neighbors_2, resolve_round
from .engine import Engine, run, replay, MetricsLedger, Trace, NonTermination, ProtocolBug
from .subroutines import (
    AsyncLineToCBT,
    AsyncLineToPolylogTree,
    LineToCBT,
    LineToTree,
    TreeToStar,
)
from .graph_to_star import GraphToStar, run_graph_to_star
from .graph_to_wreath import GraphToWreath, run_graph_to_wreath
from .graph_to_thinwreath import GraphToThinWreath, run_graph_to_thinwreath
from .centralized import cut_in_half, euler_ring_then_cut, track_potential
from .generators import InstanceSpec, generate
from .validators import validate_depth_d_tree, validate_token_dissemination, disseminate

__all__ = [
    "TemporalSnapshot",
    "RoundActions",
    "UsageError",
    "neighbors_1",
    "neighbors_2",
    "resolve_round",
    "Engine",
    "run",
    "replay",
    "MetricsLedger",
    "Trace",
    "NonTermination",
    "ProtocolBug",
    "TreeToStar",
    "LineToTree",
    "LineToCBT",
    "AsyncLineToCBT",
    "AsyncLineToPolylogTree",
    "GraphToStar",
    "run_graph_to_star",
    "GraphToWreath",
    "run_graph_to_wreath",
    "GraphToThinWreath",
    "run_graph_to_thinwreath",
    "cut_in_half",
    "euler_ring_then_cut",
    "track_potential",
    "InstanceSpec",
    "generate",
    "validate_depth_d_tree",
    "validate_token_dissemination",
    "disseminate",
]
