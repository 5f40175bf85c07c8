"""Local PageRank-type solvers with offline and online edge subsampling,
online node labeling and seeded clustering, plus dense and Monte-Carlo
reference checks."""

from .appr import ApprParams, ApprResult, appr_solve, appr_solve_rhs, push, residual_exact
from .clustering import UNREACHED, ClusterAssignment, assign_clusters, cluster, purity_score, select_seeds
from .errors import (
    IsolatedNodeError,
    NonTerminationError,
    NumericalGuardError,
    ParseError,
    SizeError,
    SubapprError,
    ValidationError,
)
from .graph import DegreeStats, Graph, LabelSet, degree_stats, load_edge_list, load_labels
from .onl import OnlConfig, RegretTrace, baseline_run, onl_run, waterfill
from .random_appr import SamplerConfig, dual_correct, push_appr, random_appr, sampler
from .solvers import SolverSpec
from .sparsify import Influencer, Resistive, Uniform, edge_ratio, resistive_distances, sparsify_offline

__version__ = "0.1.0"

__all__ = [
    "ApprParams",
    "ApprResult",
    "ClusterAssignment",
    "DegreeStats",
    "Graph",
    "Influencer",
    "IsolatedNodeError",
    "LabelSet",
    "NonTerminationError",
    "NumericalGuardError",
    "OnlConfig",
    "ParseError",
    "RegretTrace",
    "Resistive",
    "SamplerConfig",
    "SizeError",
    "SolverSpec",
    "SubapprError",
    "UNREACHED",
    "Uniform",
    "ValidationError",
    "appr_solve",
    "appr_solve_rhs",
    "assign_clusters",
    "baseline_run",
    "cluster",
    "degree_stats",
    "dual_correct",
    "edge_ratio",
    "load_edge_list",
    "load_labels",
    "onl_run",
    "purity_score",
    "push",
    "push_appr",
    "random_appr",
    "residual_exact",
    "resistive_distances",
    "sampler",
    "select_seeds",
    "sparsify_offline",
    "waterfill",
]
