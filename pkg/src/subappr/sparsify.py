"""Offline edge sparsification with 1/p reweighting and its diagnostics."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import SizeError, ValidationError
from .graph import DENSE_CAP, Graph, LabelSet, laplacian_quadratic
from .rng import SPARSIFY, stream_uniforms


@dataclass(frozen=True)
class Uniform:
    keep_prob: float

    def __post_init__(self):
        if not 0.0 < self.keep_prob <= 1.0:
            raise ValidationError(f"keep_prob must be in (0,1], got {self.keep_prob}")


@dataclass(frozen=True)
class Influencer:
    """Edges touching a node of degree above ``q_bar`` are thinned."""

    q_bar: float

    def __post_init__(self):
        if not self.q_bar > 0:
            raise ValidationError(f"q_bar must be positive, got {self.q_bar}")


@dataclass(frozen=True)
class Resistive:
    scale: float

    def __post_init__(self):
        if not self.scale > 0:
            raise ValidationError(f"scale must be positive, got {self.scale}")


EdgeProbabilityScheme = Union[Uniform, Influencer, Resistive]


def resistive_distances(g: Graph, cap: int = DENSE_CAP) -> np.ndarray:
    """Effective resistance between every pair of nodes.

    Uses the pseudoinverse of ``D - A``.  Pairs in different connected
    components are infinitely far apart and get ``inf``.
    """
    if g.n > cap:
        raise SizeError(
            f"resistive distances need a dense pseudoinverse; n={g.n} exceeds the cap {cap}. "
            "Use the influencer scheme for large graphs."
        )
    lap = np.diag(g.degrees) - g.adjacency().toarray()
    lp = np.linalg.pinv(lap, hermitian=True)
    diag = np.diag(lp)
    r = diag[:, None] + diag[None, :] - 2.0 * lp
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 0.0)
    np.maximum(r, 0.0, out=r)
    from scipy.sparse.csgraph import connected_components

    _, comp = connected_components(g.adjacency(), directed=False)
    r[comp[:, None] != comp[None, :]] = np.inf
    return r


def edge_probabilities(
    g: Graph, scheme: EdgeProbabilityScheme, resistance: np.ndarray | None = None
) -> np.ndarray:
    """Keep probability of every undirected edge, in ``g.edges()`` order."""
    u, v, w = g.edges()
    if isinstance(scheme, Uniform):
        p = np.full(len(u), scheme.keep_prob)
    elif isinstance(scheme, Influencer):
        dmax = np.maximum(g.degrees[u], g.degrees[v])
        p = np.minimum(1.0, scheme.q_bar / dmax)
    elif isinstance(scheme, Resistive):
        if resistance is None:
            resistance = resistive_distances(g)
        p = np.minimum(1.0, scheme.scale * w * resistance[u, v])
    else:
        raise ValidationError(f"unknown scheme {scheme!r}")
    if len(p) and not (np.all(p > 0) and np.all(p <= 1)):
        raise ValidationError("edge probabilities must lie in (0,1]")
    return p


def sparsify_offline(
    g: Graph,
    scheme: EdgeProbabilityScheme,
    seed: int,
    resistance: np.ndarray | None = None,
) -> Graph:
    """Keep each undirected edge independently with its probability p and
    reweight kept edges to ``w/p``; edges with ``p = 1`` are untouched.

    Edge ``e`` (in ``g.edges()`` order) uses the ``e``-th double of the
    stream keyed by ``seed``, so the result depends only on the seed.
    """
    u, v, w = g.edges()
    p = edge_probabilities(g, scheme, resistance)
    draws = stream_uniforms(seed, SPARSIFY, 0, len(u))
    keep = draws < p
    new_w = np.where(p < 1.0, w / p, w)
    return g.with_weights(u[keep], v[keep], new_w[keep])


def expected_kept_edges(g: Graph, scheme: EdgeProbabilityScheme, resistance=None) -> float:
    return float(edge_probabilities(g, scheme, resistance).sum())


def calibrate_resistive_scale(
    g: Graph, target_ratio: float, resistance: np.ndarray | None = None, tol: float = 1e-10
) -> float:
    """Scale such that the expected fraction of kept edges is ``target_ratio``."""
    if not 0.0 < target_ratio <= 1.0:
        raise ValidationError("target_ratio must be in (0,1]")
    if resistance is None:
        resistance = resistive_distances(g)
    u, v, w = g.edges()
    wr = w * resistance[u, v]
    m = len(u)

    def frac(scale: float) -> float:
        return float(np.minimum(1.0, scale * wr).sum() / m)

    if target_ratio >= 1.0:
        return float(1.0 / wr.min())
    lo, hi = 0.0, 1.0
    while frac(hi) < target_ratio:
        hi *= 2.0
    while hi - lo > tol * hi:
        mid = 0.5 * (lo + hi)
        if frac(mid) < target_ratio:
            lo = mid
        else:
            hi = mid
    return hi


def edge_ratio(g: Graph, labels: LabelSet) -> float:
    """Cross-label edge weight over same-label edge weight."""
    u, v, w = g.edges()
    same = labels.labels[u] == labels.labels[v]
    s = float(w[same].sum())
    c = float(w[~same].sum())
    if s == 0.0:
        warnings.warn("no same-label edges; edge ratio is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return c / s


def quadratic_form_deviation(g: Graph, g_sparse: Graph, x: np.ndarray, beta: float) -> float:
    """``x^T L~ x - x^T L x`` with both Laplacians normalized by the
    original graph's degrees."""
    if g_sparse.n != g.n or len(x) != g.n:
        raise ValidationError("dimension mismatch between graphs and vector")
    return laplacian_quadratic(g_sparse, x, beta, degrees=g.degrees) - laplacian_quadratic(
        g, x, beta
    )


def influencer_entries(g: Graph, q_bar: float) -> int:
    """Ordered adjacency entries (i, j) with ``d_i >= q_bar`` or ``d_j >= q_bar``."""
    u, v, _ = g.edges()
    touch = (g.degrees[u] >= q_bar) | (g.degrees[v] >= q_bar)
    return 2 * int(touch.sum())


def degree_resistance_pairs(g: Graph, resistance: np.ndarray | None = None):
    """Per-edge (max endpoint degree, inverse resistance) pairs."""
    if resistance is None:
        resistance = resistive_distances(g)
    u, v, _ = g.edges()
    return np.maximum(g.degrees[u], g.degrees[v]), 1.0 / resistance[u, v]
