"""Push solver with online neighbor subsampling, periodic dual correction
and iterative-refinement accumulation.

A push at a node with more than ``q_bar`` neighbors spreads its residual to
a random subset of ``q_bar`` neighbors, reweighted by the inverse inclusion
probability so the update is unbiased.  Because the maintained residual
then drifts away from the true one, every ``correction_period`` epochs the
current primal is folded into an accumulator ``x_bar`` and the residual is
re-estimated (again by sampling, so the cost stays local).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .appr import (
    ApprParams,
    ApprState,
    default_push_cap,
    push_node,
    residual_exact,
    rhs_to_residual,
    seed_residual,
    seed_rhs,
)
from .errors import IsolatedNodeError, NonTerminationError, ValidationError
from .graph import Graph, SparseVec
from .rng import CORRECT, PUSH, KeyedStreams

WEIGHTINGS = ("uniform", "edge", "degree")
_SAMPLER_STREAM = 5


@dataclass(frozen=True)
class SamplerConfig:
    """``q_bar``: neighbors kept per push; ``weighting`` picks the design:
    ``uniform`` (simple random sample), ``edge`` (inclusion proportional to
    the magnitude of the update) or ``degree`` (proportional to the
    receiving node's degree)."""

    q_bar: int
    weighting: str = "uniform"
    rng_seed: int = 0

    def __post_init__(self):
        if int(self.q_bar) != self.q_bar or self.q_bar < 1:
            raise ValidationError(f"q_bar must be an integer >= 1, got {self.q_bar}")
        if self.weighting not in WEIGHTINGS:
            raise ValidationError(f"weighting must be one of {WEIGHTINGS}, got {self.weighting!r}")


# ----------------------------------------------------------------------
# sampling designs


def inclusion_probabilities(pi: np.ndarray, q: int) -> np.ndarray:
    """Probabilities proportional to ``pi`` summing to ``q``, capped at 1.

    Items whose proportional share reaches 1 are taken with certainty and
    the remaining budget is redistributed over the rest, repeatedly.
    """
    pi = np.asarray(pi, dtype=float)
    k = len(pi)
    if q >= k:
        return np.ones(k)
    if np.any(pi <= 0) or not np.all(np.isfinite(pi)):
        raise ValidationError("design weights must be positive and finite")
    capped = np.zeros(k, dtype=bool)
    p = np.ones(k)
    while True:
        free = np.flatnonzero(~capped)
        rem = q - (k - len(free))
        share = rem * pi[free] / pi[free].sum()
        over = share >= 1.0
        if not over.any():
            p[free] = share
            return p
        capped[free[over]] = True


def systematic_select(p: np.ndarray, u: float) -> np.ndarray:
    """Systematic sampling: item ``i`` is taken when the grid ``u + Z``
    hits ``[c_{i-1}, c_i)`` with ``c`` the cumulative sums of ``p``.
    Certain items (``p = 1``) are taken outright."""
    sure = p >= 1.0
    sel = sure.copy()
    free = np.flatnonzero(~sure)
    if len(free):
        cum = np.concatenate(([0.0], np.cumsum(p[free])))
        total = cum[-1]
        top = round(total)
        if abs(total - top) < 1e-9:
            # integer total: exactly ``top`` grid points, whatever the rounding
            points = u + np.arange(top)
        else:
            points = u + np.arange(math.ceil(total))
            points = points[points < total]
        # locate grid points directly; differencing ceil(c - u) loses hits to
        # cancellation when u is within an ulp of 1
        bins = np.searchsorted(cum, points, side="right") - 1
        sel[free[np.clip(bins, 0, len(free) - 1)]] = True
    return np.flatnonzero(sel)


def design_weights(cfg: SamplerConfig, vals: np.ndarray, degrees: np.ndarray | None) -> np.ndarray | None:
    if cfg.weighting == "uniform":
        return None
    if cfg.weighting == "edge":
        return np.abs(vals)
    if degrees is None:
        raise ValidationError("degree weighting needs target-node degrees")
    return np.asarray(degrees, dtype=float)


def draw(
    vals: np.ndarray, cfg: SamplerConfig, gen: np.random.Generator, degrees: np.ndarray | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Positions of the sampled entries (ascending) and the reweighted
    values ``vals[i]/p_i``.  Assumes ``len(vals) > q_bar``."""
    k = len(vals)
    q = cfg.q_bar
    pi = design_weights(cfg, vals, degrees)
    if pi is None:
        keys = gen.random(k)
        sel = np.sort(np.argpartition(keys, q - 1)[:q])
        return sel, vals[sel] * (k / q)
    p = inclusion_probabilities(pi, q)
    sel = systematic_select(p, gen.random())
    return sel, vals[sel] / p[sel]


def sampler(
    w: Mapping[int, float],
    cfg: SamplerConfig,
    key: tuple[int, int, int] = (0, 0, 0),
    degrees: np.ndarray | Mapping[int, float] | None = None,
) -> SparseVec:
    """Unbiased sparsification of ``w`` to at most ``q_bar`` entries.

    ``key`` selects the random stream; ``degrees`` (indexed by the keys of
    ``w``) is required for the degree design.
    """
    items = sorted((int(i), float(v)) for i, v in w.items() if v != 0.0)
    if not items:
        raise ValidationError("sampler needs a nonempty support")
    if len(items) <= cfg.q_bar:
        return dict(items)
    idx = np.array([i for i, _ in items])
    vals = np.array([v for _, v in items])
    deg = None
    if degrees is not None:
        deg = np.array([degrees[i] for i in idx.tolist()], dtype=float)
    gen = KeyedStreams(cfg.rng_seed, _SAMPLER_STREAM).at(*key)
    sel, new = draw(vals, cfg, gen, deg)
    return dict(zip(idx[sel].tolist(), new.tolist()))


# ----------------------------------------------------------------------
# sampled push and correction


class _Subsampler:
    """Callable handed to :func:`push_node` for one sampled push."""

    __slots__ = ("cfg", "gen", "degrees", "noise_sink", "half")

    def __init__(self, cfg, gen, degrees, noise_sink=None, half=0.0):
        self.cfg = cfg
        self.gen = gen
        self.degrees = degrees
        self.noise_sink = noise_sink
        self.half = half

    def __call__(self, nbrs, delta):
        deg = self.degrees[nbrs] if self.cfg.weighting == "degree" else None
        sel, new = draw(delta, self.cfg, self.gen, deg)
        if self.noise_sink is not None:
            noise = -delta.copy()
            noise[sel] += new
            self.noise_sink.append(dict(zip(nbrs.tolist(), (self.half * noise).tolist())))
        return nbrs[sel], new


def _stream_key(stream: int, tag: int) -> int:
    return tag + (stream << 8)


def push_appr(
    g: Graph,
    x: Mapping[int, float],
    z: Mapping[int, float],
    cfg: SamplerConfig,
    active: list[int],
    params: ApprParams,
    *,
    epoch: int = 0,
) -> tuple[SparseVec, SparseVec]:
    """Push every node of ``active`` in order with subsampled neighbor
    updates; returns new ``(x, z)`` without touching the inputs."""
    if not active:
        raise ValidationError("active list is empty")
    state = ApprState(g, z, params.epsilon, strict=True)
    state.x = dict(x)
    streams = KeyedStreams(cfg.rng_seed, PUSH)
    for i, u in enumerate(active):
        if g.deg[u] <= 0:
            raise IsolatedNodeError(u, "push_appr")
        sub = None
        if g.degree_count(u) > cfg.q_bar:
            sub = _Subsampler(cfg, streams.at(u, i, epoch), g.degrees)
        push_node(state, u, params.alpha, sub)
    return state.x, state.z


def _dual_correct(
    g: Graph,
    x: Mapping[int, float],
    cfg: SamplerConfig,
    alpha: float,
    epoch: int,
    streams: KeyedStreams,
) -> tuple[SparseVec, int]:
    c_diag = (1.0 + alpha) / (2.0 * alpha)
    c_off = (1.0 - alpha) / (2.0 * alpha)
    out: SparseVec = {}
    queried = 0
    for pos, u in enumerate(sorted(x)):
        xu = x[u]
        if xu == 0.0:
            continue
        du = g.deg[u]
        if du <= 0:
            raise IsolatedNodeError(u, "dual_correct")
        su = g.sqrt_deg[u]
        out[u] = out.get(u, 0.0) + c_diag * su * xu
        lo, hi = g.indptr[u], g.indptr[u + 1]
        nbrs = g.indices[lo:hi]
        # A_{vu} x_u / sqrt(d_u) written as a transition column times x_u sqrt(d_u)
        vals = (xu * su) * (g.weights[lo:hi] / du)
        if hi - lo > cfg.q_bar:
            gen = streams.at(u, pos // cfg.q_bar, epoch)
            deg = g.degrees[nbrs] if cfg.weighting == "degree" else None
            sel, vals = draw(vals, cfg, gen, deg)
            nbrs = nbrs[sel]
        queried += 1 + len(nbrs)
        for v, wv in zip(nbrs.tolist(), vals.tolist()):
            out[v] = out.get(v, 0.0) - c_off * wv
    return out, queried


def dual_correct(
    g: Graph,
    x: Mapping[int, float],
    cfg: SamplerConfig,
    params: ApprParams,
    *,
    epoch: int = 0,
    stream: int = 0,
) -> SparseVec:
    """Unbiased estimate of ``(1+alpha)/(2 alpha) D^{1/2} Q x``.

    The diagonal part is exact; each node's neighbor part is subsampled
    with the push design.  Nodes are processed in batches of ``q_bar``
    (the batch index enters the random key) until all of ``supp(x)`` is
    covered.
    """
    streams = KeyedStreams(cfg.rng_seed, _stream_key(stream, CORRECT))
    return _dual_correct(g, x, cfg, params.alpha, epoch, streams)[0]


# ----------------------------------------------------------------------
# driver


@dataclass
class EpochStats:
    epoch: int
    pushes: int
    active: int
    nodes_queried: int
    corrected: bool
    support_x: int
    z_linf: float = 0.0
    l1_residual_exact: float = math.nan
    l2_residual_exact: float = math.nan


@dataclass
class RefinementState:
    x_bar: SparseVec = field(default_factory=dict)
    z_bar: SparseVec = field(default_factory=dict)
    epoch: int = 0
    corrections: int = 0


@dataclass
class RandomApprResult:
    x: SparseVec
    trace: list[EpochStats]
    pushes: int
    nodes_queried: int
    corrections: int
    stopped: str
    refinement: RefinementState
    z: SparseVec
    checkpoints: list[tuple[int, SparseVec]] = field(default_factory=list)
    noise: list[tuple[int, int, SparseVec]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.x, self.trace))


def _add_into(acc: SparseVec, v: Mapping[int, float], sign: float = 1.0) -> None:
    for k, a in v.items():
        acc[k] = acc.get(k, 0.0) + sign * a


def _total(ref: RefinementState, x: SparseVec) -> SparseVec:
    if not ref.x_bar:
        return dict(x)
    out = dict(ref.x_bar)
    _add_into(out, x)
    return out


def residual_norms(g: Graph, x: Mapping[int, float], b: Mapping[int, float], params: ApprParams):
    """``(||z_exact||_1, ||Q x - b||_2)`` for the exact scaled residual."""
    z = residual_exact(g, x, b, params)
    c = 2.0 * params.alpha / (1.0 + params.alpha)
    l1 = math.fsum(abs(v) for v in z.values())
    l2 = c * math.sqrt(math.fsum(v * v / g.deg[k] for k, v in z.items()))
    return l1, l2


EpochHook = Callable[[int, SparseVec, SparseVec, int], None]


def random_appr(
    g: Graph,
    s: int,
    params: ApprParams,
    cfg: SamplerConfig,
    c: float = 0.9,
    correction_period: int | None = 5,
    *,
    b: Mapping[int, float] | None = None,
    push_budget: int | None = None,
    max_pushes: int | None = None,
    stream: int = 0,
    correction_cfg: SamplerConfig | None = None,
    record_residuals: bool = False,
    checkpoint_every: int | None = None,
    record_noise: bool = False,
    epoch_hook: EpochHook | None = None,
) -> RandomApprResult:
    """Sampled push solver from seed ``s`` (or general right-hand side ``b``).

    Each epoch takes the nodes queued by the previous one, keeps those with
    ``|z_k| > c epsilon d_k`` and pushes them in FIFO order.  Every
    ``correction_period`` epochs (``None`` or 0 disables it) the primal is
    folded into ``x_bar`` and the residual re-estimated with
    :func:`dual_correct`; a correction is skipped when no push since the
    previous one actually subsampled, because the maintained residual is
    then exact.  Stops when no node is active, when ``push_budget`` pushes
    have been made, or when two consecutive corrections leave ``||z_bar||_1``
    unchanged.

    ``epoch_hook(epoch, z_maintained, x_total, pushes)`` is called at the
    start of every epoch before the active set is formed.

    ``correction_cfg`` lets the correction sample with a different design
    or rate than the pushes; by default it uses ``cfg``.
    """
    if not 0.0 < c < 1.0:
        raise ValidationError(f"c must be in (0,1), got {c}")
    if b is None:
        z0 = seed_residual(g, s)
        rhs = seed_rhs(g, s, params.alpha)
    else:
        z0 = rhs_to_residual(g, b, params.alpha)
        rhs = dict(b)
    state = ApprState(g, z0, c * params.epsilon, strict=True)
    state.seed_queue()
    ref = RefinementState(x_bar={}, z_bar=dict(state.z))
    if max_pushes is None:
        mass = sum(abs(v) for v in z0.values())
        max_pushes = 10 * default_push_cap(mass, params.alpha, c * params.epsilon, g.degrees.min())
    push_streams = KeyedStreams(cfg.rng_seed, _stream_key(stream, PUSH))
    corr_streams = KeyedStreams((correction_cfg or cfg).rng_seed, _stream_key(stream, CORRECT))
    corr_cfg = correction_cfg or cfg
    q = cfg.q_bar
    alpha = params.alpha
    half = 0.5 * (1.0 - alpha)
    trace: list[EpochStats] = []
    checkpoints: list[tuple[int, SparseVec]] = []
    noise: list[tuple[int, int, SparseVec]] = []
    noise_sink: list | None = [] if record_noise else None
    sampled_since = False
    last_l1: float | None = None
    same_count = 0
    stopped = "converged"
    epoch = 0
    period = correction_period or 0

    if checkpoint_every:
        checkpoints.append((0, {}))

    while True:
        corrected = False
        if period and epoch > 0 and epoch % period == 0 and sampled_since and state.x:
            ztil, nq = _dual_correct(g, state.x, corr_cfg, alpha, epoch, corr_streams)
            state.nodes_queried += nq
            _add_into(ref.x_bar, state.x)
            _add_into(ref.z_bar, ztil, -1.0)
            state.x = {}
            state.z = {k: v for k, v in ref.z_bar.items() if v != 0.0}
            state.queue.clear()
            state.queued.clear()
            state.seed_queue()
            ref.corrections += 1
            sampled_since = False
            corrected = True
            l1_bar = math.fsum(abs(v) for v in ref.z_bar.values())
            if last_l1 is not None and abs(l1_bar - last_l1) <= 1e-12:
                same_count += 1
            else:
                same_count = 0
            last_l1 = l1_bar
            if same_count >= 1:
                stopped = "stalled"
                break
        epoch += 1
        ref.epoch = epoch
        if epoch_hook is not None:
            epoch_hook(epoch, state.z, _total(ref, state.x), state.push_count)
        snapshot = list(state.queue)
        state.queue.clear()
        active = []
        for k in snapshot:
            zk = state.z.get(k, 0.0)
            if zk != 0.0 and state.active(k, zk):
                active.append(k)
            else:
                state.queued.discard(k)
        if not active:
            break
        for i, u in enumerate(active):
            if push_budget is not None and state.push_count >= push_budget:
                stopped = "budget"
                break
            if state.push_count >= max_pushes:
                raise NonTerminationError(
                    f"push cap {max_pushes} exceeded in epoch {epoch}",
                    trace=trace,
                    pushes=state.push_count,
                )
            state.queued.discard(u)
            sub = None
            if g.indptr[u + 1] - g.indptr[u] > q:
                sub = _Subsampler(cfg, push_streams.at(u, i, epoch), g.degrees, noise_sink, half)
                sampled_since = True
            push_node(state, u, alpha, sub)
            if noise_sink:
                noise.append((epoch, i, noise_sink.pop()))
            if checkpoint_every and state.push_count % checkpoint_every == 0:
                checkpoints.append((state.push_count, _total(ref, state.x)))
        st = EpochStats(
            epoch=epoch,
            pushes=state.push_count,
            active=len(active),
            nodes_queried=state.nodes_queried,
            corrected=corrected,
            support_x=len(_total(ref, state.x)),
            z_linf=max((abs(v) for v in state.z.values()), default=0.0),
        )
        if record_residuals:
            st.l1_residual_exact, st.l2_residual_exact = residual_norms(
                g, _total(ref, state.x), rhs, params
            )
        trace.append(st)
        if stopped == "budget":
            break

    x_total = _total(ref, state.x)
    if checkpoint_every and (not checkpoints or checkpoints[-1][0] != state.push_count):
        checkpoints.append((state.push_count, x_total))
    return RandomApprResult(
        x=x_total,
        trace=trace,
        pushes=state.push_count,
        nodes_queried=state.nodes_queried,
        corrections=ref.corrections,
        stopped=stopped,
        refinement=ref,
        z=state.z,
        checkpoints=checkpoints,
        noise=noise,
    )
