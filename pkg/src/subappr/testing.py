"""Small synthetic graphs used by the test suite and ``verify``.

These exist to exercise the solvers; they are not meant as a general
graph-generation library.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import Graph, LabelSet


def star(k: int) -> Graph:
    """Center 0 joined to leaves 1..k."""
    return Graph.from_edges(k + 1, [0] * k, range(1, k + 1))


def path(n: int) -> Graph:
    return Graph.from_edges(n, range(n - 1), range(1, n))


def complete(n: int) -> Graph:
    u, v = np.triu_indices(n, 1)
    return Graph.from_edges(n, u, v)


def edgeless(n: int) -> Graph:
    return Graph.from_edges(n, [], [])


def barbell(k: int = 3) -> tuple[Graph, LabelSet]:
    """Two k-cliques joined by the edge (k-1, k); labels are the sides."""
    u, v = np.triu_indices(k, 1)
    src = np.concatenate([u, u + k, [k - 1]])
    dst = np.concatenate([v, v + k, [k]])
    labels = LabelSet(np.repeat([0, 1], k), 2)
    return Graph.from_edges(2 * k, src, dst), labels


def k3_chain(count: int) -> Graph:
    """``count`` triangles, consecutive ones joined by a single edge."""
    src, dst = [], []
    for c in range(count):
        a = 3 * c
        src += [a, a, a + 1]
        dst += [a + 1, a + 2, a + 2]
        if c:
            src.append(a - 1)
            dst.append(a)
    return Graph.from_edges(3 * count, src, dst)


def disjoint_union(*graphs: Graph) -> Graph:
    src, dst, wts = [], [], []
    offset = 0
    for g in graphs:
        u, v, w = g.edges()
        src.append(u + offset)
        dst.append(v + offset)
        wts.append(w)
        offset += g.n
    return Graph.from_edges(offset, np.concatenate(src), np.concatenate(dst), np.concatenate(wts))


def erdos_renyi(n: int, p: float, seed: int = 0, weighted: bool = False) -> Graph:
    rng = np.random.default_rng(seed)
    u, v = np.triu_indices(n, 1)
    keep = rng.random(len(u)) < p
    w = rng.uniform(0.5, 2.0, keep.sum()) if weighted else None
    return Graph.from_edges(n, u[keep], v[keep], w)


def _connect(n, src, dst, rng) -> tuple[np.ndarray, np.ndarray]:
    """Attach every non-giant component to the giant one by one edge,
    choosing the giant-side endpoint with probability proportional to
    degree (plus one)."""
    g = Graph.from_edges(n, src, dst)
    ncomp, comp = connected_components(g.adjacency(), directed=False)
    if ncomp == 1:
        return src, dst
    big = np.argmax(np.bincount(comp))
    giant = np.flatnonzero(comp == big)
    weight = g.degrees[giant] + 1.0
    weight /= weight.sum()
    extra_u, extra_v = [], []
    for c in range(ncomp):
        if c == big:
            continue
        members = np.flatnonzero(comp == c)
        extra_u.append(int(members[0]))
        extra_v.append(int(rng.choice(giant, p=weight)))
    return np.concatenate([src, extra_u]), np.concatenate([dst, extra_v])


def power_law(n: int, avg_degree: float = 4.0, exponent: float = 2.5, seed: int = 0) -> Graph:
    """Connected Chung-Lu graph with a power-law expected degree sequence.

    Expected degrees follow ``w_i ∝ (i + i0)^{-1/(exponent-1)}`` scaled to
    the requested mean; isolated pieces are then attached to the giant
    component so the result has exactly ``n`` nodes and is connected.
    """
    rng = np.random.default_rng(seed)
    i = np.arange(n, dtype=float)
    w = (i + 1.0) ** (-1.0 / (exponent - 1.0))
    w *= avg_degree * n / w.sum()
    total = w.sum()
    u, v = np.triu_indices(n, 1)
    p = np.minimum(1.0, w[u] * w[v] / total)
    keep = rng.random(len(u)) < p
    src, dst = _connect(n, u[keep], v[keep], rng)
    perm = rng.permutation(n)
    return Graph.from_edges(n, perm[src], perm[dst])


def planted_partition(
    n: int, k: int = 2, p_in: float = 0.05, p_out: float = 0.005, seed: int = 0
) -> tuple[Graph, LabelSet]:
    """Stochastic block model with ``k`` equal blocks, made connected."""
    rng = np.random.default_rng(seed)
    labels = np.arange(n) % k
    u, v = np.triu_indices(n, 1)
    p = np.where(labels[u] == labels[v], p_in, p_out)
    keep = rng.random(len(u)) < p
    src, dst = _connect(n, u[keep], v[keep], rng)
    return Graph.from_edges(n, src, dst), LabelSet(labels, k)


def random_small_graph(rng: np.random.Generator, n_max: int = 200, weighted: bool | None = None) -> Graph:
    """Random connected graph of varying shape for randomized suites."""
    n = int(rng.integers(3, n_max + 1))
    kind = rng.integers(4)
    seed = int(rng.integers(2**31))
    if weighted is None:
        weighted = bool(rng.integers(2))
    if kind == 0:
        g = power_law(n, avg_degree=float(rng.uniform(2, 8)), seed=seed)
    elif kind == 1:
        p = float(rng.uniform(2.0 / n, min(1.0, 12.0 / n)))
        src = np.arange(n - 1)
        # a random spanning path keeps it connected
        perm = np.random.default_rng(seed).permutation(n)
        er = erdos_renyi(n, p, seed)
        eu, ev, _ = er.edges()
        g = Graph.from_edges(n, np.concatenate([perm[src], eu]), np.concatenate([perm[src + 1], ev]))
    elif kind == 2:
        g = planted_partition(n, int(rng.integers(2, 5)), 0.2, 0.02, seed)[0]
    else:
        g = power_law(n, avg_degree=float(rng.uniform(1.5, 3)), exponent=2.1, seed=seed)
    if weighted:
        u, v, _ = g.edges()
        w = np.random.default_rng(seed + 1).uniform(0.25, 4.0, len(u))
        g = Graph.from_edges(g.n, u, v, w)
    return g
