"""Deterministic local push solver for the symmetrized PageRank system

    Q x = b,   Q = I - beta D^{-1/2} A D^{-1/2},   beta = (1-alpha)/(1+alpha),

maintaining the scaled residual ``z = (1+alpha)/(2 alpha) D^{1/2} (b - Q x)``.
For the seed right-hand side ``b = (2 alpha/(1+alpha)) D^{-1/2} e_s`` the
solver starts from ``x = 0, z = e_s``.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import IsolatedNodeError, NonTerminationError, ValidationError
from .graph import Graph, SparseVec


@dataclass(frozen=True)
class ApprParams:
    alpha: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValidationError(f"alpha must be in (0,1), got {self.alpha}")
        if not self.epsilon > 0.0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")

    @property
    def beta(self) -> float:
        return (1.0 - self.alpha) / (1.0 + self.alpha)

    @classmethod
    def from_beta(cls, beta: float, epsilon: float) -> "ApprParams":
        return cls((1.0 - beta) / (1.0 + beta), epsilon)


class ApprState:
    """Mutable solver state: primal ``x``, scaled residual ``z`` and the
    FIFO of active nodes.

    ``threshold`` is the per-degree tolerance; a node is active when
    ``|z_v| >= threshold * d_v`` (or ``>`` when ``strict``).
    """

    def __init__(self, g: Graph, z0: Mapping[int, float], threshold: float, strict: bool = False):
        self.g = g
        self.x: SparseVec = {}
        self.z: SparseVec = {k: float(v) for k, v in z0.items() if v != 0.0}
        self.queue: deque[int] = deque()
        self.queued: set[int] = set()
        self.threshold = threshold
        self.strict = strict
        self.push_count = 0
        self.nodes_queried = 0

    def active(self, v: int, zv: float) -> bool:
        t = self.threshold * self.g.deg[v]
        return abs(zv) > t if self.strict else abs(zv) >= t

    def enqueue(self, v: int) -> None:
        if v not in self.queued:
            self.queued.add(v)
            self.queue.append(v)

    def seed_queue(self) -> None:
        """Enqueue every currently active node, in increasing node order."""
        for v in sorted(self.z):
            if self.z[v] != 0.0 and self.active(v, self.z[v]):
                self.enqueue(v)

    def r(self, alpha: float) -> SparseVec:
        """Unscaled residual ``b - Qx = (2 alpha/(1+alpha)) D^{-1/2} z``."""
        c = 2.0 * alpha / (1.0 + alpha)
        return {v: c * zv / self.g.sqrt_deg[v] for v, zv in self.z.items()}

    def pi(self) -> SparseVec:
        """PageRank-scale vector ``D x``."""
        return {v: self.g.deg[v] * xv for v, xv in self.x.items()}


def push_node(state: ApprState, u: int, alpha: float, subsample=None) -> None:
    """One push at ``u``.

    ``subsample(neighbors, delta) -> (neighbors, delta)`` optionally replaces
    the full neighbor update ``delta = z_u A_{:,u}/d_u`` by an unbiased
    sparse estimate.  Shared by the deterministic and sampled solvers so
    that both perform identical floating-point operations when no
    subsampling happens.
    """
    g = state.g
    z = state.z
    zu = z.get(u, 0.0)
    du = g.deg[u]
    x = state.x
    x[u] = x.get(u, 0.0) + alpha * zu / g.sqrt_deg[u]
    lo, hi = g.indptr[u], g.indptr[u + 1]
    nbrs = g.indices[lo:hi]
    delta = zu * (g.weights[lo:hi] / du)
    if subsample is not None:
        nbrs, delta = subsample(nbrs, delta)
    half = 0.5 * (1.0 - alpha)
    for v, dv in zip(nbrs.tolist(), delta.tolist()):
        zv = z.get(v, 0.0) + half * dv
        z[v] = zv
        if v not in state.queued and zv != 0.0 and state.active(v, zv):
            state.queued.add(v)
            state.queue.append(v)
    zu_new = half * zu
    z[u] = zu_new
    if u not in state.queued and zu_new != 0.0 and state.active(u, zu_new):
        state.queued.add(u)
        state.queue.append(u)
    state.push_count += 1
    state.nodes_queried += len(nbrs)


def push(state: ApprState, g: Graph, u: int, params: ApprParams) -> None:
    """Deterministic push at ``u`` (see :func:`push_node`)."""
    if g.deg[u] <= 0:
        raise IsolatedNodeError(u, "push")
    push_node(state, u, params.alpha)


@dataclass
class ApprResult:
    x: SparseVec
    z: SparseVec
    pushes: int
    nodes_queried: int
    state: ApprState = field(repr=False, default=None)

    def __iter__(self):
        # allows ``x, z, pushes = appr_solve(...)``
        return iter((self.x, self.z, self.pushes))


def default_push_cap(mass: float, alpha: float, epsilon: float, min_deg: float) -> int:
    return int(10.0 * mass / (alpha * epsilon * max(min_deg, 1e-12))) + 10_000


def seed_residual(g: Graph, s: int) -> SparseVec:
    if not 0 <= s < g.n:
        raise ValidationError(f"seed {s} outside 0..{g.n - 1}")
    if g.deg[s] <= 0:
        raise IsolatedNodeError(s, "seed")
    return {s: 1.0}


def rhs_to_residual(g: Graph, b: Mapping[int, float], alpha: float) -> SparseVec:
    """Initial ``z`` for ``x = 0``: ``(1+alpha)/(2 alpha) D^{1/2} b``."""
    c = (1.0 + alpha) / (2.0 * alpha)
    out = {}
    for v, bv in b.items():
        if bv == 0.0:
            continue
        if g.deg[v] <= 0:
            raise IsolatedNodeError(v, "right-hand side support")
        out[int(v)] = c * g.sqrt_deg[v] * float(bv)
    return out


def seed_rhs(g: Graph, s: int, alpha: float) -> SparseVec:
    """``b = (2 alpha/(1+alpha)) D^{-1/2} e_s``."""
    return {s: 2.0 * alpha / (1.0 + alpha) / g.sqrt_deg[s]}


def run_fifo(
    state: ApprState,
    alpha: float,
    max_pushes: int,
    callback: Callable[[ApprState, int], None] | None = None,
) -> None:
    q = state.queue
    while q:
        u = q.popleft()
        state.queued.discard(u)
        zu = state.z.get(u, 0.0)
        if zu == 0.0 or not state.active(u, zu):
            continue  # lazy eviction
        if state.push_count >= max_pushes:
            raise NonTerminationError(
                f"push cap {max_pushes} reached with {len(q) + 1} active nodes",
                trace={"x_support": len(state.x), "z_support": len(state.z)},
                pushes=state.push_count,
            )
        push_node(state, u, alpha)
        if callback is not None:
            callback(state, u)


def appr_solve_residual(
    g: Graph,
    z0: Mapping[int, float],
    params: ApprParams,
    *,
    max_pushes: int | None = None,
    callback: Callable[[ApprState, int], None] | None = None,
) -> ApprResult:
    """Push from an arbitrary initial scaled residual with ``x = 0``."""
    state = ApprState(g, z0, params.epsilon)
    state.seed_queue()
    if max_pushes is None:
        mass = sum(abs(v) for v in state.z.values())
        max_pushes = default_push_cap(mass, params.alpha, params.epsilon, g.degrees.min() if g.n else 1.0)
    run_fifo(state, params.alpha, max_pushes, callback)
    return ApprResult(state.x, state.z, state.push_count, state.nodes_queried, state)


def appr_solve(
    g: Graph,
    s: int,
    params: ApprParams,
    *,
    max_pushes: int | None = None,
    callback: Callable[[ApprState, int], None] | None = None,
) -> ApprResult:
    """Solve from seed ``s`` until ``|z_v| < epsilon d_v`` everywhere."""
    return appr_solve_residual(
        g, seed_residual(g, s), params, max_pushes=max_pushes, callback=callback
    )


def appr_solve_rhs(
    g: Graph,
    b: Mapping[int, float],
    params: ApprParams,
    *,
    max_pushes: int | None = None,
) -> ApprResult:
    """Solve ``Q x = b`` for a general nonnegative sparse ``b``."""
    if any(v < 0 for v in b.values()):
        raise ValidationError("right-hand side must be nonnegative")
    return appr_solve_residual(g, rhs_to_residual(g, b, params.alpha), params, max_pushes=max_pushes)


def apply_q(g: Graph, x: Mapping[int, float], beta: float) -> SparseVec:
    """Matrix-free ``Q x`` on a sparse vector."""
    out: SparseVec = {}
    for u, xu in x.items():
        out[u] = out.get(u, 0.0) + xu
        su = g.sqrt_deg[u]
        if su == 0.0:
            continue
        lo, hi = g.indptr[u], g.indptr[u + 1]
        nbrs = g.indices[lo:hi]
        # Q_{v,u} = -beta A_{vu} / sqrt(d_v d_u)
        vals = (-beta * xu / su) * g.weights[lo:hi] / np.sqrt(g.degrees[nbrs])
        for v, val in zip(nbrs.tolist(), vals.tolist()):
            out[v] = out.get(v, 0.0) + val
    return out


def residual_exact(
    g: Graph, x: Mapping[int, float], b: Mapping[int, float], params: ApprParams
) -> SparseVec:
    """Recompute ``z = (1+alpha)/(2 alpha) D^{1/2} (b - Q x)`` from scratch."""
    for u in x:
        if g.deg[u] <= 0:
            raise IsolatedNodeError(u, "residual_exact")
    qx = apply_q(g, x, params.beta)
    c = (1.0 + params.alpha) / (2.0 * params.alpha)
    out: SparseVec = {}
    for v in set(qx) | set(b):
        out[v] = c * g.sqrt_deg[v] * (b.get(v, 0.0) - qx.get(v, 0.0))
    return out


def l1(v: Mapping[int, float]) -> float:
    return math.fsum(abs(a) for a in v.values())


def sqrt_deg_l1(g: Graph, x: Mapping[int, float]) -> float:
    """``||D^{1/2} x||_1``."""
    return math.fsum(abs(xv) * g.sqrt_deg[v] for v, xv in x.items())
