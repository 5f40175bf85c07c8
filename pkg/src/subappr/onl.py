"""Online node labeling: the relaxation and regularization learners,
weighted-majority baselines, and regret accounting.

The learners share the kernel

    M = (L/(2 gamma) + I/(2n))^{-1} = (2 gamma/(1 + gamma/n)) (I - beta' S)^{-1},

with ``L = I - beta S``, ``S = D^{-1/2} A D^{-1/2}`` and
``beta' = beta/(1 + gamma/n)``; the inverse on the right is a discounted
PageRank system, so its columns come from any solver in :mod:`solvers`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import IsolatedNodeError, NumericalGuardError, ValidationError
from .graph import Graph, LabelSet, check_dense, normalized_adjacency
from .solvers import DiscountedInverse, SolverSpec

METHODS = ("relaxation", "regularize")


@dataclass(frozen=True)
class OnlConfig:
    """``gamma=None`` uses the measured label smoothness; ``d_const=None``
    uses the class count; ``beta`` is the Laplacian discount."""

    gamma: float | None = None
    method: str = "relaxation"
    solver: SolverSpec = field(default_factory=SolverSpec)
    d_const: float | None = None
    k_classes: int | None = None
    beta: float = 1.0
    argmax: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError(f"method must be one of {METHODS}")
        if self.gamma is not None and not self.gamma > 0:
            raise ValidationError("gamma must be positive")
        if not 0.0 < self.beta <= 1.0:
            raise ValidationError("beta must be in (0,1]")
        if self.d_const is not None and not self.d_const > 0:
            raise ValidationError("d_const must be positive")
        if self.k_classes is not None and self.k_classes < 2:
            raise ValidationError("need at least two classes")


class Kernel:
    """Column access to ``M`` for a given graph, gamma, beta and solver.

    ``degrees`` overrides the normalizing degrees (exact solver only); used
    for a sparsified graph normalized by the original graph's degrees.
    """

    def __init__(
        self,
        g: Graph,
        gamma: float,
        beta: float,
        solver: SolverSpec,
        degrees: np.ndarray | None = None,
    ):
        if not gamma > 0:
            raise ValidationError(f"gamma must be positive, got {gamma}")
        n = g.n
        self.g = g
        self.gamma = gamma
        self.scale = 2.0 * gamma / (1.0 + gamma / n)
        self.beta_prime = beta / (1.0 + gamma / n)
        self.inverse = DiscountedInverse(g, self.beta_prime, solver)
        if degrees is not None:
            if solver.kind != "exact":
                raise ValidationError("custom degrees are only supported by the exact solver")
            check_dense(n, solver.dense_cap)
            s = normalized_adjacency(g, degrees).toarray()
            inv = np.linalg.inv(np.eye(n) - self.beta_prime * s)
            self.inverse._dense = 0.5 * (inv + inv.T)

    @property
    def nodes_queried(self) -> int:
        return self.inverse.nodes_queried

    def column(self, t: int) -> tuple[np.ndarray, np.ndarray]:
        idx, vals = self.inverse.column(t)
        return idx, vals * self.scale

    def dense(self) -> np.ndarray:
        return self.inverse.dense() * self.scale

    def trace(self) -> float:
        return float(np.trace(self.dense()))


def kernel_column(
    g: Graph, t: int, gamma: float, solver: SolverSpec, beta: float = 1.0
) -> np.ndarray:
    """``M e_t`` as a dense vector."""
    idx, vals = Kernel(g, gamma, beta, solver).column(t)
    out = np.zeros(g.n)
    out[idx] = vals
    return out


def waterfill(z: Sequence[float], return_tau: bool = False):
    """Euclidean projection onto the simplex: ``max(0, z - tau)`` with
    ``tau`` chosen so the result sums to one."""
    z = np.asarray(z, dtype=float)
    if z.ndim != 1 or len(z) == 0:
        raise ValidationError("waterfill needs a nonempty vector")
    srt = np.sort(z)[::-1]
    css = np.cumsum(srt)
    j = np.arange(1, len(z) + 1)
    cand = (css - 1.0) / j
    rho = np.flatnonzero(srt - cand > 0)[-1]
    tau = float(cand[rho])
    out = np.maximum(z - tau, 0.0)
    out /= out.sum()  # removes rounding drift; the sum is already 1 analytically
    return (out, tau) if return_tau else out


@dataclass
class RegretTrace:
    method: str
    order: np.ndarray
    predictions: np.ndarray
    truths: np.ndarray
    losses: np.ndarray
    cumulative_loss: np.ndarray
    scores: np.ndarray
    comparator_loss: float = 0.0
    regret_bound: float = math.nan
    regret_bound_rho: float = math.nan
    gamma: float = math.nan
    rho: float = math.nan
    nodes_queried: int = 0

    @property
    def mistakes(self) -> int:
        return int(self.cumulative_loss[-1]) if len(self.cumulative_loss) else 0

    @property
    def mistake_rate(self) -> float:
        return self.mistakes / max(len(self.losses), 1)

    @property
    def regret(self) -> np.ndarray:
        return self.cumulative_loss - self.comparator_loss


def smoothness(g: Graph, labels: LabelSet, beta: float = 1.0) -> float:
    """``tr(Y^T L Y)`` for the one-hot label matrix ``Y``."""
    y = labels.one_hot()
    s = normalized_adjacency(g)
    return float(np.sum(y * y) - beta * np.sum(y * (s @ y)))


def rho_of(n: int, gamma: float) -> float:
    return math.log(gamma) / math.log(n) if n > 1 else 0.0


def regret_bound_sparsified(
    n: int,
    gamma: float,
    epsilon: float,
    beta: float,
    d_const: float,
    rho: float | None = None,
) -> float:
    """``D sqrt(2 n^{1+rho}) + sqrt(epsilon n/(1-beta))``."""
    if beta >= 1.0:
        raise ValidationError("the sparsified bound needs beta < 1")
    if epsilon < 0:
        raise ValidationError("epsilon must be nonnegative")
    if rho is None:
        rho = rho_of(n, gamma)
    return d_const * math.sqrt(2.0 * n ** (1.0 + rho)) + math.sqrt(epsilon * n / (1.0 - beta))


def _check_order(g: Graph, labels: LabelSet, order: Sequence[int]) -> np.ndarray:
    order = np.asarray(order, dtype=np.int64)
    if labels.n != g.n:
        raise ValidationError("labels do not cover the graph")
    if len(order) != g.n or not np.array_equal(np.sort(order), np.arange(g.n)):
        raise ValidationError("visit order must be a permutation of all nodes")
    return order


def _setup(g: Graph, labels: LabelSet, cfg: OnlConfig, kernel: Kernel | None):
    k = cfg.k_classes or labels.k
    if labels.labels.max(initial=0) >= k:
        raise ValidationError("label exceeds k_classes")
    gamma = cfg.gamma if cfg.gamma is not None else smoothness(g, labels, cfg.beta)
    if not gamma > 0:
        raise ValidationError("measured smoothness is zero; pass gamma explicitly")
    if kernel is None:
        kernel = Kernel(g, gamma, cfg.beta, cfg.solver)
    d_const = cfg.d_const if cfg.d_const is not None else float(k)
    return k, gamma, kernel, d_const


def _columns(kernel: Kernel, order: np.ndarray):
    cols = [kernel.column(int(t)) for t in order]
    diag = []
    for t, (idx, vals) in zip(order.tolist(), cols):
        pos = np.searchsorted(idx, t)
        diag.append(float(vals[pos]) if pos < len(idx) and idx[pos] == t else 0.0)
    return cols, np.array(diag)


def _predict(p: np.ndarray, cfg: OnlConfig, rng: np.random.Generator) -> int:
    if cfg.argmax:
        return int(np.argmax(p))
    return int(rng.choice(len(p), p=p))


def _finish(method, order, preds, truths, scores, gamma, d_const, trace_m, n, nq) -> RegretTrace:
    losses = (preds != truths).astype(np.int64)
    rho = rho_of(n, gamma)
    return RegretTrace(
        method=method,
        order=order,
        predictions=preds,
        truths=truths,
        losses=losses,
        cumulative_loss=np.cumsum(losses),
        scores=scores,
        comparator_loss=0.0,
        regret_bound=math.sqrt(trace_m) if trace_m > 0 else math.nan,
        regret_bound_rho=d_const * math.sqrt(2.0 * n ** (1.0 + rho)),
        gamma=gamma,
        rho=rho,
        nodes_queried=nq,
    )


def relaxation_run(
    g: Graph,
    labels: LabelSet,
    cfg: OnlConfig,
    visit_order: Sequence[int],
    kernel: Kernel | None = None,
) -> RegretTrace:
    """Relaxation learner.

    With ``G`` holding past surrogate gradients as columns, node ``t`` gets
    scores ``z = -2 G M_{:,t} / sqrt(a + D^2 tau)``, a prediction drawn
    from the waterfilled distribution ``p``, and contributes the gradient
    ``p - e_y``.  ``a`` tracks ``tr(G M G^T)`` and ``tau`` the part of
    ``tr M`` not yet visited.  ``tr M`` comes from the exact inverse or, for
    push solvers, from the diagonal of the solved columns.
    """
    order = _check_order(g, labels, visit_order)
    k, gamma, kernel, d_const = _setup(g, labels, cfg, kernel)
    cols, diag = _columns(kernel, order)
    tau = kernel.trace() if cfg.solver.kind == "exact" else float(diag.sum())
    trace_m = tau
    a = 0.0
    G = np.zeros((k, g.n))
    rng = np.random.default_rng(cfg.seed)
    preds = np.empty(g.n, dtype=np.int64)
    truths = labels.labels[order]
    scores = np.zeros((g.n, k))
    for step, t in enumerate(order.tolist()):
        idx, vals = cols[step]
        gm = G[:, idx] @ vals
        denom = a + d_const * d_const * tau
        if not denom > 0:
            raise NumericalGuardError(
                "relaxation normalizer is not positive",
                {"step": step, "node": t, "a": a, "tau": tau, "D": d_const},
            )
        z = -2.0 * gm / math.sqrt(denom)
        scores[step] = z
        p = waterfill(z - z.min())
        preds[step] = _predict(p, cfg, rng)
        grad = p.copy()
        grad[truths[step]] -= 1.0
        mtt = diag[step]
        a = a + 2.0 * float(grad @ gm) + mtt * float(grad @ grad)
        G[:, t] = grad
        tau -= mtt
    return _finish("relaxation", order, preds, truths, scores, gamma, d_const, trace_m, g.n, kernel.nodes_queried)


def regularize_run(
    g: Graph,
    labels: LabelSet,
    cfg: OnlConfig,
    visit_order: Sequence[int],
    kernel: Kernel | None = None,
) -> RegretTrace:
    """Regularization learner.

    ``G`` holds the one-hot labels revealed so far; the class scores
    ``2 G M_{:,t}`` (the negation of ``z = -2 G M_{:,t}``) are shifted to be
    nonnegative and waterfilled.
    """
    order = _check_order(g, labels, visit_order)
    k, gamma, kernel, d_const = _setup(g, labels, cfg, kernel)
    cols, diag = _columns(kernel, order)
    trace_m = kernel.trace() if cfg.solver.kind == "exact" else float(diag.sum())
    G = np.zeros((k, g.n))
    rng = np.random.default_rng(cfg.seed)
    preds = np.empty(g.n, dtype=np.int64)
    truths = labels.labels[order]
    scores = np.zeros((g.n, k))
    for step, t in enumerate(order.tolist()):
        idx, vals = cols[step]
        s = 2.0 * (G[:, idx] @ vals)
        scores[step] = -s
        p = waterfill(s - s.min())
        preds[step] = _predict(p, cfg, rng)
        G[truths[step], t] = 1.0
    return _finish("regularize", order, preds, truths, scores, gamma, d_const, trace_m, g.n, kernel.nodes_queried)


def onl_run(g: Graph, labels: LabelSet, cfg: OnlConfig, visit_order, kernel=None) -> RegretTrace:
    run = relaxation_run if cfg.method == "relaxation" else regularize_run
    return run(g, labels, cfg, visit_order, kernel)


# ----------------------------------------------------------------------
# baselines


def _class_matrix(revealed: Mapping[int, int], n: int, k: int) -> np.ndarray:
    y = np.zeros((n, k))
    for v, c in revealed.items():
        y[v, c] = 1.0
    return y


def wma_scores(g: Graph, revealed: Mapping[int, int], t: int, k_classes: int = 2) -> np.ndarray:
    """Per-class neighbor label mass ``sum_i A_{i,t} [y_i = c] / d_t``."""
    du = g.deg[t]
    if du <= 0:
        raise IsolatedNodeError(t, "wma")
    out = np.zeros(k_classes)
    for v, w in zip(g.neighbors(t).tolist(), g.neighbor_weights(t).tolist()):
        c = revealed.get(v)
        if c is not None:
            out[c] += w / du
    return out


def wma_predict(
    g: Graph,
    revealed: Mapping[int, int],
    t: int,
    k_classes: int = 2,
    rng: np.random.Generator | None = None,
) -> int:
    """Weighted-majority vote of revealed neighbors; ties go to the
    smallest class id, isolated nodes get a random class."""
    if g.deg[t] <= 0:
        rng = rng or np.random.default_rng(0)
        return int(rng.integers(k_classes))
    return int(np.argmax(wma_scores(g, revealed, t, k_classes)))


def _wma_star(g, revealed, t, beta, k_hops, k_classes):
    if k_hops < 1:
        raise ValidationError("k_hops must be at least 1")
    if g.deg[t] <= 0:
        raise IsolatedNodeError(t, "wma_star")
    y = _class_matrix(revealed, g.n, k_classes)
    a = g.adjacency()
    d = g.degrees
    counts = np.diff(g.indptr)
    inv_d = np.divide(1.0, d, out=np.zeros_like(d), where=d > 0)
    v = np.zeros(g.n)
    v[t] = 1.0
    out = y.T @ v
    queried = 0
    for _ in range(k_hops):
        queried += int(counts[v != 0].sum())
        v = beta * (a @ (v * inv_d))
        out += y.T @ v
    return out / beta, queried


def wma_star_scores(
    g: Graph,
    revealed: Mapping[int, int],
    t: int,
    beta: float,
    k_hops: int,
    k_classes: int = 2,
) -> np.ndarray:
    """``beta^{-1} sum_{k=0}^{K} y~^T (beta A D^{-1})^k e_t`` per class.

    Walks the column ``T^k e_t``; for ``K = 1`` the scores are ``1/beta``
    times the weighted-majority scores.
    """
    return _wma_star(g, revealed, t, beta, k_hops, k_classes)[0]


def wma_star_predict(
    g: Graph,
    revealed: Mapping[int, int],
    t: int,
    beta: float,
    k_hops: int,
    k_classes: int = 2,
) -> int:
    return int(np.argmax(wma_star_scores(g, revealed, t, beta, k_hops, k_classes)))


def baseline_run(
    g: Graph,
    labels: LabelSet,
    visit_order: Sequence[int],
    method: str = "wma",
    beta: float = 0.9,
    k_hops: int = 3,
    seed: int = 0,
) -> RegretTrace:
    """Online run of a weighted-majority baseline in the given order."""
    order = _check_order(g, labels, visit_order)
    k = labels.k
    rng = np.random.default_rng(seed)
    revealed: dict[int, int] = {}
    preds = np.empty(g.n, dtype=np.int64)
    scores = np.zeros((g.n, k))
    queried = 0
    for step, t in enumerate(order.tolist()):
        if g.deg[t] <= 0:
            preds[step] = int(rng.integers(k))
        else:
            if method == "wma":
                s = wma_scores(g, revealed, t, k)
                queried += g.degree_count(t)
            elif method == "wmastar":
                s, q = _wma_star(g, revealed, t, beta, k_hops, k)
                queried += q
            else:
                raise ValidationError(f"unknown baseline {method!r}")
            scores[step] = s
            preds[step] = int(np.argmax(s))
        revealed[t] = int(labels.labels[t])
    truths = labels.labels[order]
    losses = (preds != truths).astype(np.int64)
    return RegretTrace(
        method=method,
        order=order,
        predictions=preds,
        truths=truths,
        losses=losses,
        cumulative_loss=np.cumsum(losses),
        scores=scores,
        nodes_queried=queried,
    )
