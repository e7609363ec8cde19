"""Semi-hypercube construction, validation, routing and pruning."""

from .core import (SemiHypercube, VertexTrie, build_from_matchings, build_hypercube_style,
                   build_random_shc)
from .validate import Tau, validate
from .route import greedy_path, sample_path
from .prune import BatchedPruner, ReferencePruner, SelfPruner
from .balance import LoadBalancer
from .dynroute import DynDetRouter
from .embed import PruneOblivRouter, PruneRouter
from .lowerbound import build_hard_instance, hard_demand

__version__ = "0.1.0"

__all__ = [
    "SemiHypercube", "VertexTrie", "build_from_matchings", "build_hypercube_style",
    "build_random_shc", "Tau", "validate", "greedy_path", "sample_path",
    "BatchedPruner", "ReferencePruner", "SelfPruner", "LoadBalancer", "DynDetRouter",
    "PruneOblivRouter", "PruneRouter", "build_hard_instance", "hard_demand",
]
