"""Immutable CSR graph, file ingestion, degree statistics and the
matrix-free operators shared by the solvers.

Throughout the package a *sparse vector* is a plain ``dict[int, float]``
mapping node index to value; absent keys are zero.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .errors import IsolatedNodeError, ParseError, SizeError, ValidationError

SparseVec = dict[int, float]

DENSE_CAP = 5000


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def _row_sums(indptr: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """Correctly rounded row sums, so a degree never depends on the order
    in which its edges were summed.  Integer weights sum exactly anyway."""
    n = len(indptr) - 1
    if np.all(vals == np.round(vals)) and (len(vals) == 0 or np.abs(vals).max() < 2**40):
        return np.bincount(np.repeat(np.arange(n), np.diff(indptr)), weights=vals, minlength=n).astype(float)
    return np.array([math.fsum(vals[indptr[u] : indptr[u + 1]]) for u in range(n)])


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected weighted graph in CSR form.

    ``indices[indptr[u]:indptr[u+1]]`` are the neighbors of ``u`` sorted
    ascending and ``weights`` the matching edge weights.  Every edge is
    stored in both directions with the same weight.  ``node_ids`` maps the
    dense index back to the id used in the source file, when there was one.
    """

    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray
    node_ids: np.ndarray | None = None

    @property
    def n(self) -> int:
        return len(self.indptr) - 1

    node_count = n

    @property
    def m(self) -> int:
        """Number of undirected edges."""
        return len(self.indices) // 2

    @property
    def nnz(self) -> int:
        """Number of stored (directed) adjacency entries, i.e. 2m."""
        return len(self.indices)

    @cached_property
    def deg(self) -> list[float]:
        """Degrees as a Python list (fast scalar access inside push loops)."""
        return self.degrees.tolist()

    @cached_property
    def sqrt_deg(self) -> list[float]:
        return [math.sqrt(d) for d in self.deg]

    @cached_property
    def is_unweighted(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def neighbor_weights(self, u: int) -> np.ndarray:
        return self.weights[self.indptr[u] : self.indptr[u + 1]]

    def degree_count(self, u: int) -> int:
        """Number of neighbors of ``u`` (differs from d_u on weighted graphs)."""
        return int(self.indptr[u + 1] - self.indptr[u])

    @cached_property
    def max_neighbor_count(self) -> int:
        return int(np.diff(self.indptr).max()) if self.n else 0

    def adjacency(self) -> sp.csr_matrix:
        return sp.csr_matrix(
            (self.weights, self.indices, self.indptr), shape=(self.n, self.n)
        )

    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Undirected edges as (u, v, w) arrays with u < v, in CSR order."""
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        keep = rows < self.indices
        return rows[keep], self.indices[keep], self.weights[keep]

    # ------------------------------------------------------------------
    @classmethod
    def from_edges(
        cls,
        n: int,
        src: Iterable[int],
        dst: Iterable[int],
        weight: Iterable[float] | None = None,
        node_ids: np.ndarray | None = None,
    ) -> "Graph":
        """Build a graph from an undirected edge list.

        Self-loops are dropped, duplicates keep the last weight, and the
        result is symmetrized.
        """
        src = np.asarray(list(src) if not isinstance(src, np.ndarray) else src, dtype=np.int64)
        dst = np.asarray(list(dst) if not isinstance(dst, np.ndarray) else dst, dtype=np.int64)
        if weight is None:
            w = np.ones(len(src))
        else:
            w = np.asarray(
                list(weight) if not isinstance(weight, np.ndarray) else weight,
                dtype=float,
            )
        if not (len(src) == len(dst) == len(w)):
            raise ValidationError("edge arrays differ in length")
        if n < 0:
            raise ValidationError("node count must be nonnegative")
        if len(src) and (src.min() < 0 or dst.min() < 0 or max(src.max(), dst.max()) >= n):
            raise ValidationError("edge endpoint outside 0..n-1")
        if not np.all(np.isfinite(w)):
            raise ValidationError("edge weights must be finite")
        if np.any(w < 0):
            raise ValidationError("negative edge weight")

        loops = src == dst
        src, dst, w = src[~loops], dst[~loops], w[~loops]
        lo = np.minimum(src, dst)
        hi = np.maximum(src, dst)
        key = lo * max(n, 1) + hi
        # keep the last occurrence of each undirected pair
        _, first_rev = np.unique(key[::-1], return_index=True)
        last = len(key) - 1 - first_rev
        lo, hi, w = lo[last], hi[last], w[last]
        if np.any(w == 0):
            raise ValidationError("edge weights must be strictly positive")

        rows = np.concatenate([lo, hi])
        cols = np.concatenate([hi, lo])
        vals = np.concatenate([w, w])
        order = np.lexsort((cols, rows))
        rows, cols, vals = rows[order], cols[order], vals[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
        degrees = _row_sums(indptr, vals)
        ids = None if node_ids is None else _readonly(np.asarray(node_ids, dtype=np.int64))
        return cls(
            _readonly(indptr),
            _readonly(cols.astype(np.int64)),
            _readonly(vals.astype(float)),
            _readonly(degrees),
            ids,
        )

    @classmethod
    def from_scipy(cls, a: sp.spmatrix) -> "Graph":
        """Build from a symmetric sparse adjacency (upper triangle is used)."""
        coo = sp.triu(sp.coo_matrix(a), k=1)
        return cls.from_edges(a.shape[0], coo.row, coo.col, coo.data)

    def with_weights(self, u: np.ndarray, v: np.ndarray, w: np.ndarray) -> "Graph":
        """Same node set, new undirected edge list (used by the sparsifier)."""
        return Graph.from_edges(self.n, u, v, w, node_ids=self.node_ids)


# ----------------------------------------------------------------------
# ingestion


def _parse_lines(path: Path, ncols_max: int):
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 2 or len(parts) > ncols_max:
                raise ParseError(f"expected {2}..{ncols_max} columns, got {len(parts)}", lineno)
            yield lineno, parts


def load_edge_list(path: str | Path, weighted: bool = False) -> Graph:
    """Read a whitespace-separated ``u v [w]`` edge list.

    Node ids may be sparse; they are remapped to ``0..n-1`` in ascending
    order of the original id and kept in ``Graph.node_ids``.  Without
    ``weighted`` a third column is ignored and every edge gets weight 1.
    """
    src: list[int] = []
    dst: list[int] = []
    wts: list[float] = []
    for lineno, parts in _parse_lines(Path(path), 3):
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer node id in {' '.join(parts)!r}", lineno) from None
        if u < 0 or v < 0:
            raise ParseError("node ids must be nonnegative", lineno)
        w = 1.0
        if weighted and len(parts) == 3:
            try:
                w = float(parts[2])
            except ValueError:
                raise ParseError(f"bad weight {parts[2]!r}", lineno) from None
            if not math.isfinite(w):
                raise ParseError(f"non-finite weight {parts[2]!r}", lineno)
            if w < 0:
                raise ValidationError(f"line {lineno}: negative weight {w}")
        src.append(u)
        dst.append(v)
        wts.append(w)
    raw = np.asarray(src + dst, dtype=np.int64)
    ids = np.unique(raw)
    s = np.searchsorted(ids, np.asarray(src, dtype=np.int64))
    d = np.searchsorted(ids, np.asarray(dst, dtype=np.int64))
    w = np.asarray(wts, dtype=float)
    # zero weights are treated like absent edges rather than errors
    nz = w > 0
    return Graph.from_edges(len(ids), s[nz], d[nz], w[nz], node_ids=ids)


def save_id_map(g: Graph, path: str | Path) -> None:
    """Persist the dense-index to original-id map as a two-column CSV."""
    ids = g.node_ids if g.node_ids is not None else np.arange(g.n)
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["node", "original_id"])
        for i, orig in enumerate(ids.tolist()):
            wr.writerow([i, orig])


def write_edge_list(g: Graph, path: str | Path, weighted: bool = True) -> None:
    ids = g.node_ids if g.node_ids is not None else np.arange(g.n)
    u, v, w = g.edges()
    with open(path, "w") as fh:
        for a, b, c in zip(ids[u].tolist(), ids[v].tolist(), w.tolist()):
            fh.write(f"{a} {b} {c!r}\n" if weighted else f"{a} {b}\n")


@dataclass(frozen=True)
class LabelSet:
    """Class id per node in ``0..k-1``."""

    labels: np.ndarray
    k: int
    classes: tuple = ()

    def __post_init__(self):
        lab = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", _readonly(lab))
        if self.k < 2:
            raise ValidationError("a label set needs at least two classes")
        if lab.size and (lab.min() < 0 or lab.max() >= self.k):
            raise ValidationError("label outside 0..k-1")

    @property
    def n(self) -> int:
        return len(self.labels)

    @classmethod
    def from_values(cls, values: Iterable, k: int | None = None) -> "LabelSet":
        """Encode arbitrary hashable label values as dense class ids."""
        vals = list(values)
        classes = tuple(sorted(set(vals)))
        index = {c: i for i, c in enumerate(classes)}
        lab = np.array([index[v] for v in vals], dtype=np.int64)
        return cls(lab, max(k or 0, len(classes), 2), classes)

    def one_hot(self) -> np.ndarray:
        y = np.zeros((self.n, self.k))
        y[np.arange(self.n), self.labels] = 1.0
        return y


def load_labels(path: str | Path, g: Graph) -> LabelSet:
    """Read ``node_id label`` lines; ids refer to the original file ids."""
    ids = g.node_ids if g.node_ids is not None else np.arange(g.n)
    pos = {int(o): i for i, o in enumerate(ids.tolist())}
    values: list = [None] * g.n
    for lineno, parts in _parse_lines(Path(path), 2):
        try:
            node = int(parts[0])
        except ValueError:
            raise ParseError(f"non-integer node id {parts[0]!r}", lineno) from None
        if node in pos:
            values[pos[node]] = parts[1]
    missing = [i for i, v in enumerate(values) if v is None]
    if missing:
        raise ValidationError(f"{len(missing)} nodes have no label (first: {int(ids[missing[0]])})")
    # numeric labels sort numerically
    try:
        values = [int(v) for v in values]
    except ValueError:
        pass
    return LabelSet.from_values(values)


# ----------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class DegreeStats:
    n: int
    m: int
    nnz: int
    avg_degree: float
    median_degree: float
    max_degree: float
    min_degree: float
    max_over_n: float
    max_over_avg: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def degree_stats(g: Graph) -> DegreeStats:
    """Degree summary.  ``avg_degree`` is the mean of the degree vector
    (2m/n when unweighted); the median is the lower median."""
    if g.n < 1:
        raise ValidationError("degree statistics need n >= 1")
    d = np.sort(g.degrees)
    avg = float(d.sum() / g.n)
    med = float(d[(g.n - 1) // 2])
    mx = float(d[-1])
    return DegreeStats(
        n=g.n,
        m=g.m,
        nnz=g.nnz,
        avg_degree=avg,
        median_degree=med,
        max_degree=mx,
        min_degree=float(d[0]),
        max_over_n=mx / g.n,
        max_over_avg=mx / avg if avg > 0 else math.inf,
    )


def degree_histogram(g: Graph) -> list[tuple[float, int]]:
    vals, counts = np.unique(g.degrees, return_counts=True)
    return list(zip(vals.tolist(), counts.tolist()))


def volume(g: Graph, nodes: Iterable[int]) -> float:
    return float(sum(g.deg[u] for u in set(nodes)))


def largest_component(g: Graph) -> Graph:
    """Induced subgraph on the largest connected component."""
    _, comp = connected_components(g.adjacency(), directed=False)
    big = np.argmax(np.bincount(comp))
    keep = np.flatnonzero(comp == big)
    remap = -np.ones(g.n, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    u, v, w = g.edges()
    sel = (comp[u] == big) & (comp[v] == big)
    ids = keep if g.node_ids is None else g.node_ids[keep]
    return Graph.from_edges(len(keep), remap[u[sel]], remap[v[sel]], w[sel], node_ids=ids)


# ----------------------------------------------------------------------
# operators


def transition_column(g: Graph, u: int) -> SparseVec:
    """Column ``A D^{-1} e_u`` as a sparse vector."""
    du = g.deg[u]
    if du <= 0:
        raise IsolatedNodeError(u, "transition_column")
    return {int(v): float(w) / du for v, w in zip(g.neighbors(u), g.neighbor_weights(u))}


def _inv_sqrt(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d, dtype=float)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def normalized_adjacency(g: Graph, degrees: np.ndarray | None = None) -> sp.csr_matrix:
    """``D^{-1/2} A D^{-1/2}``; zero rows for isolated nodes.  ``degrees``
    overrides the normalizing D (e.g. the original graph's D for a
    sparsified graph)."""
    d = g.degrees if degrees is None else np.asarray(degrees, dtype=float)
    s = _inv_sqrt(d)
    a = g.adjacency()
    return sp.csr_matrix(sp.diags(s) @ a @ sp.diags(s))


def laplacian_quadratic(
    g: Graph, x: np.ndarray, beta: float, degrees: np.ndarray | None = None
) -> float:
    """``x^T (I - beta D^{-1/2} A D^{-1/2}) x``."""
    x = np.asarray(x, dtype=float)
    if x.shape != (g.n,):
        raise ValidationError(f"vector length {x.shape} does not match n={g.n}")
    d = g.degrees if degrees is None else np.asarray(degrees, dtype=float)
    y = x * _inv_sqrt(d)
    rows = np.repeat(np.arange(g.n), np.diff(g.indptr))
    return float(x @ x - beta * np.dot(y[rows] * g.weights, y[g.indices]))


def dense_laplacian(
    g: Graph, beta: float = 1.0, degrees: np.ndarray | None = None, cap: int = DENSE_CAP
) -> np.ndarray:
    """Dense ``I - beta D^{-1/2} A D^{-1/2}``."""
    check_dense(g.n, cap)
    return np.eye(g.n) - beta * normalized_adjacency(g, degrees).toarray()


def check_dense(n: int, cap: int = DENSE_CAP) -> None:
    if n > cap:
        raise SizeError(f"dense computation on n={n} exceeds the cap of {cap} nodes")


def to_dense(v: Mapping[int, float], n: int) -> np.ndarray:
    out = np.zeros(n)
    if v:
        idx = np.fromiter(v.keys(), dtype=np.int64, count=len(v))
        out[idx] = np.fromiter(v.values(), dtype=float, count=len(v))
    return out


def warn_once(msg: str) -> None:
    warnings.warn(msg, RuntimeWarning, stacklevel=3)
