"""Clustering by argmax over PageRank-style embedding columns.

Each seed ``j`` contributes the column ``Z e_j`` of

    Z = (L + beta I)^{-1} = (1 + beta)^{-1} (I - beta' S)^{-1},
    L = I - beta_L S,  beta' = beta_L / (1 + beta),

and every node joins the seed whose column is largest at that node.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import IsolatedNodeError, ValidationError
from .graph import Graph, LabelSet, SparseVec
from .solvers import DiscountedInverse, SolverSpec

UNREACHED = -1


@dataclass
class ClusterAssignment:
    """``assignment[u]`` is the seed node of ``u``'s cluster, or
    ``UNREACHED`` when every seed column is zero at ``u``."""

    seeds: list[int]
    assignment: np.ndarray
    score: float | None = None
    nodes_queried: int = 0

    @property
    def unreached_count(self) -> int:
        return int(np.sum(self.assignment == UNREACHED))


def select_seeds(g: Graph, count: int) -> list[int]:
    """The ``count`` highest-degree nodes, ties broken by smaller id."""
    if count < 1:
        raise ValidationError("need at least one seed")
    if count > g.n:
        raise ValidationError(f"cannot pick {count} seeds from {g.n} nodes")
    order = np.lexsort((np.arange(g.n), -g.degrees))
    return [int(u) for u in order[:count]]


def embed_columns(
    g: Graph,
    seeds: list[int],
    beta: float = 0.15,
    solver: SolverSpec | None = None,
    laplacian_beta: float = 1.0,
) -> tuple[dict[int, SparseVec], int]:
    """Columns ``Z e_j`` for each seed and the total nodes queried."""
    solver = solver or SolverSpec()
    if beta <= 0:
        raise ValidationError("beta must be positive")
    for j in seeds:
        if g.deg[j] <= 0:
            raise IsolatedNodeError(j, "clustering seed")
    inv = DiscountedInverse(g, laplacian_beta / (1.0 + beta), solver)
    scale = 1.0 / (1.0 + beta)
    cols: dict[int, SparseVec] = {}
    for j in seeds:
        idx, vals = inv.column(j)
        cols[j] = dict(zip(idx.tolist(), (vals * scale).tolist()))
    return cols, inv.nodes_queried


def assign_clusters(columns: dict[int, SparseVec], n: int) -> ClusterAssignment:
    """Assign each node to the seed with the largest column entry; ties
    go to the smallest seed id."""
    if not columns:
        raise ValidationError("no seeds")
    seeds_by_id = sorted(columns)
    z = np.zeros((n, len(seeds_by_id)))
    for c, j in enumerate(seeds_by_id):
        col = columns[j]
        if col:
            idx = np.fromiter(col.keys(), dtype=np.int64, count=len(col))
            z[idx, c] = np.fromiter(col.values(), dtype=float, count=len(col))
    best = np.argmax(z, axis=1)
    reached = np.any(z != 0.0, axis=1)
    assignment = np.where(reached, np.asarray(seeds_by_id)[best], UNREACHED)
    return ClusterAssignment(list(columns), assignment)


def purity_score(assignment: ClusterAssignment, labels: LabelSet) -> float:
    """Sum over clusters of the majority-label count, divided by n.
    Unreached nodes contribute nothing."""
    a = assignment.assignment
    if len(a) != labels.n:
        raise ValidationError("assignment and labels differ in length")
    total = 0
    for s in np.unique(a):
        if s == UNREACHED:
            continue
        total += int(np.bincount(labels.labels[a == s], minlength=labels.k).max())
    return total / len(a)


def cluster(
    g: Graph,
    count: int | None = None,
    beta: float = 0.15,
    solver: SolverSpec | None = None,
    labels: LabelSet | None = None,
    seeds: list[int] | None = None,
) -> ClusterAssignment:
    """Seed selection, embedding, assignment and (with labels) scoring."""
    if seeds is None:
        if count is None:
            if labels is None:
                raise ValidationError("give a seed count or labels")
            count = int(len(np.unique(labels.labels)))
        seeds = select_seeds(g, count)
    cols, queried = embed_columns(g, seeds, beta, solver)
    out = assign_clusters(cols, g.n)
    out.seeds = list(seeds)
    out.nodes_queried = queried
    if labels is not None:
        out.score = purity_score(out, labels)
    return out
