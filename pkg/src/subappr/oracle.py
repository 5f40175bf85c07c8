"""Independent reference computations and statistical checks.

Everything here is deliberately written against dense matrices or by
exhaustive enumeration so that it shares as little code as possible with
the solvers it checks.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .appr import ApprParams, seed_rhs
from .errors import ValidationError
from .graph import DENSE_CAP, Graph, check_dense, to_dense
from .random_appr import (
    RandomApprResult,
    SamplerConfig,
    inclusion_probabilities,
    random_appr,
)
from .rng import SPARSIFY, stream_uniforms
from .sparsify import Influencer, edge_probabilities, influencer_entries


# ----------------------------------------------------------------------
# dense references


def dense_q(g: Graph, alpha: float, cap: int = DENSE_CAP) -> np.ndarray:
    """Dense ``Q = I - beta D^{-1/2} A D^{-1/2}`` built entry by entry."""
    check_dense(g.n, cap)
    beta = (1.0 - alpha) / (1.0 + alpha)
    q = np.eye(g.n)
    d = g.degrees
    u, v, w = g.edges()
    val = -beta * w / np.sqrt(d[u] * d[v])
    q[u, v] = val
    q[v, u] = val
    return q


def dense_solve(g: Graph, b: np.ndarray, params: ApprParams, cap: int = DENSE_CAP) -> np.ndarray:
    """Cholesky solve of ``Q x = b``."""
    b = np.asarray(b, dtype=float)
    if b.shape != (g.n,):
        raise ValidationError("right-hand side length does not match the graph")
    q = dense_q(g, params.alpha, cap)
    return cho_solve(cho_factor(q), b)


def dense_seed_solution(g: Graph, s: int, params: ApprParams) -> np.ndarray:
    return dense_solve(g, to_dense(seed_rhs(g, s, params.alpha), g.n), params)


def bernoulli_subgauss_constant(p: float) -> float:
    """``min(1/4, -(p-2)^2 / (4 ln p))`` on ``(0, 1]``; equals 1/4 at 1."""
    if not p > 0:
        raise ValidationError("p must be positive")
    if p >= 1.0:
        return 0.25
    return min(0.25, -((p - 2.0) ** 2) / (4.0 * math.log(p)))


def binomial_slack(p: float, trials: int, k: float = 3.0) -> float:
    """``k`` standard errors of a frequency with true value ``p``; ``p`` is
    floored at ``1/trials`` so that a zero bound still has slack."""
    p = min(max(p, 1.0 / trials), 1.0)
    return k * math.sqrt(p * (1.0 - p) / trials) if p < 1.0 else 0.0


# ----------------------------------------------------------------------
# sampler enumeration


def _systematic_outcomes(p: np.ndarray, q: int) -> dict[frozenset, float]:
    """Exact outcome law of systematic sampling by sweeping the start ``u``.

    Item ``i`` is hit when some grid point ``u + j`` lands in
    ``[c_{i-1}, c_i)``; between consecutive fractional breakpoints the
    outcome is constant, so each piece contributes its length.
    """
    sure = [i for i in range(len(p)) if p[i] >= 1.0]
    free = [i for i in range(len(p)) if p[i] < 1.0]
    if not free:
        return {frozenset(sure): 1.0}
    cum = [0.0]
    for i in free:
        cum.append(cum[-1] + float(p[i]))
    total = cum[-1]
    if abs(total - round(total)) < 1e-9:
        # the free probabilities sum to an integer; rounding in the running
        # sum would otherwise open a sliver with one hit too few
        total = cum[-1] = float(round(total))
    cuts = sorted({c - math.floor(c) for c in cum} | {0.0, 1.0})
    law: dict[frozenset, float] = {}
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        if hi - lo <= 0.0:
            continue
        u = 0.5 * (lo + hi)
        chosen = set(sure)
        j = 0
        while u + j < total:
            pos = bisect.bisect_right(cum, u + j) - 1
            chosen.add(free[pos])
            j += 1
        key = frozenset(chosen)
        law[key] = law.get(key, 0.0) + (hi - lo)
    return law


def enumerate_sampler_outcomes(
    w: Mapping[int, float],
    cfg: SamplerConfig,
    degrees: Mapping[int, float] | None = None,
    max_support: int = 12,
) -> list[tuple[dict[int, float], float]]:
    """All ``C(|supp w|, q_bar)`` subsets with their exact probabilities
    and the reweighted outcome vectors."""
    items = sorted((int(i), float(v)) for i, v in w.items() if v != 0.0)
    k = len(items)
    if k == 0:
        raise ValidationError("empty support")
    if k > max_support:
        raise ValidationError(f"support {k} exceeds the enumeration guard {max_support}")
    q = cfg.q_bar
    if k <= q:
        return [(dict(items), 1.0)]
    idx = [i for i, _ in items]
    vals = np.array([v for _, v in items])
    if cfg.weighting == "uniform":
        p = np.full(k, q / k)
        law = {frozenset(c): 1.0 / math.comb(k, q) for c in itertools.combinations(range(k), q)}
    else:
        if cfg.weighting == "edge":
            pi = np.abs(vals)
        else:
            if degrees is None:
                raise ValidationError("degree weighting needs degrees")
            pi = np.array([degrees[i] for i in idx], dtype=float)
        p = inclusion_probabilities(pi, q)
        law = _systematic_outcomes(p, q)
    out = []
    for combo in itertools.combinations(range(k), q):
        prob = law.get(frozenset(combo), 0.0)
        vec = {idx[j]: float(vals[j] / p[j]) for j in combo}
        out.append((vec, prob))
    # outcomes of other sizes would signal a broken design
    stray = sum(pr for s, pr in law.items() if len(s) != q)
    if stray > 0:
        raise AssertionError(f"design produced subsets of the wrong size (mass {stray})")
    return out


def outcome_mean(outcomes: list[tuple[dict[int, float], float]]) -> dict[int, float]:
    mean: dict[int, float] = {}
    for vec, prob in outcomes:
        for i, v in vec.items():
            mean[i] = mean.get(i, 0.0) + prob * v
    return mean


# ----------------------------------------------------------------------
# offline concentration


@dataclass
class ConcentrationReport:
    q_bar: float
    trials: int
    bound_scale: float
    influencer_entries: int
    epsilons: list[float]
    empirical: list[float]
    bounds: list[float]
    slack: list[float]
    mean_deviation: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


def concentration_bound(epsilon: float, q_bar: float, d_max: float, x_inf: float, s_i: int) -> float:
    if s_i == 0 or x_inf == 0.0:
        return 0.0 if epsilon > 0 else 1.0
    return math.exp(-(epsilon**2) * q_bar**2 / (d_max**2 * x_inf**4 * s_i))


def sparsified_deviations(
    g: Graph, q_bar: float, x: np.ndarray, trials: int, seed: int, beta: float = 1.0
) -> np.ndarray:
    """``x^T L~ x - x^T L x`` for ``trials`` influencer sparsifications.

    Trial ``r`` uses the same per-edge uniforms as
    ``sparsify_offline(g, Influencer(q_bar), seed + r)``; only edges with
    ``p < 1`` are random, and each contributes
    ``-2 beta x_u x_v (w~ - w) / sqrt(d_u d_v)``.
    """
    u, v, w = g.edges()
    p = edge_probabilities(g, Influencer(q_bar))
    rand = np.flatnonzero(p < 1.0)
    d = g.degrees
    coef = -2.0 * beta * x[u] * x[v] / np.sqrt(d[u] * d[v])
    out = np.zeros(trials)
    if len(rand) == 0:
        return out
    top = int(rand.max()) + 1
    for r in range(trials):
        draws = stream_uniforms(seed + r, SPARSIFY, 0, top)[rand]
        kept = draws < p[rand]
        wt = np.where(kept, w[rand] / p[rand], 0.0)
        out[r] = float(coef[rand] @ (wt - w[rand]))
    return out


def offline_concentration_check(
    g: Graph,
    q_bar: float,
    x: np.ndarray,
    trials: int,
    epsilon_grid: Sequence[float],
    seed: int,
    beta: float = 1.0,
) -> ConcentrationReport:
    """Empirical ``Pr(dev >= eps)`` against
    ``exp(-eps^2 q_bar^2 / (d_max^2 ||x||_inf^4 |S_I|))``.

    ``|S_I|`` counts ordered adjacency entries touching a node of degree at
    least ``q_bar``.
    """
    if trials < 1000:
        raise ValidationError("use at least 1000 trials")
    x = np.asarray(x, dtype=float)
    dev = sparsified_deviations(g, q_bar, x, trials, seed, beta)
    s_i = influencer_entries(g, q_bar)
    d_max = float(g.degrees.max())
    x_inf = float(np.abs(x).max())
    emp, bnd, slk = [], [], []
    ok = True
    for eps in epsilon_grid:
        f = float(np.mean(dev >= eps)) if eps > 0 else float(np.mean(dev >= 0))
        b = concentration_bound(eps, q_bar, d_max, x_inf, s_i)
        sl = binomial_slack(b, trials)
        emp.append(f)
        bnd.append(b)
        slk.append(sl)
        ok &= f <= b + sl
    return ConcentrationReport(
        q_bar=q_bar,
        trials=trials,
        bound_scale=d_max**2 * x_inf**4 * s_i / q_bar**2,
        influencer_entries=s_i,
        epsilons=list(epsilon_grid),
        empirical=emp,
        bounds=bnd,
        slack=slk,
        mean_deviation=float(dev.mean()),
        passed=bool(ok),
    )


def epsilon_for_bound(target: float, q_bar: float, d_max: float, x_inf: float, s_i: int) -> float:
    """The deviation at which the concentration bound equals ``target``."""
    return math.sqrt(-math.log(target) * d_max**2 * x_inf**4 * s_i) / q_bar


# ----------------------------------------------------------------------
# rates and diagnostics


def gradient_norm_trace(
    checkpoints: Iterable[tuple[int, Mapping[int, float]]],
    g: Graph,
    params: ApprParams,
    b: np.ndarray,
) -> tuple[list[int], list[float], list[float]]:
    """``||Q x - b||_2^2`` at each checkpoint and its running minimum."""
    q = dense_q(g, params.alpha)
    pushes, vals, run = [], [], []
    best = math.inf
    for m, x in checkpoints:
        r = q @ to_dense(x, g.n) - b
        v = float(r @ r)
        best = min(best, v)
        pushes.append(m)
        vals.append(v)
        run.append(best)
    return pushes, vals, run


@dataclass
class DiagnosticStats:
    """Monte-Carlo scale estimates for the sampling noise.

    ``sigma_ti_hat[(t, i)]`` is the largest per-coordinate standard
    deviation of the noise injected by push ``i`` of epoch ``t``;
    ``sigma_t_hat[t]`` combines an epoch's pushes (variances add).
    ``*_bound`` are the analytic counterparts built from the Bernoulli
    constant at the smallest inclusion probability.
    """

    sigma_t_hat: dict[int, float]
    sigma_ti_hat: dict[tuple[int, int], float]
    r_hat: list[float]
    sigma_max_hat: float
    p_min: float
    sigma_ti_bound: float
    sigma_t_bound: float
    replicates: int

    def to_dict(self) -> dict:
        return {
            "sigma_t_hat": {str(k): v for k, v in self.sigma_t_hat.items()},
            "sigma_ti_hat": {f"{k[0]},{k[1]}": v for k, v in self.sigma_ti_hat.items()},
            "r_hat": self.r_hat,
            "sigma_max_hat": self.sigma_max_hat,
            "p_min": self.p_min,
            "sigma_ti_bound": self.sigma_ti_bound,
            "sigma_t_bound": self.sigma_t_bound,
            "replicates": self.replicates,
        }


def estimate_diagnostics(
    runs: Sequence[RandomApprResult],
    g: Graph,
    cfg: SamplerConfig,
    support_size: int | None = None,
    min_replicates: int = 30,
) -> DiagnosticStats:
    """Estimates from replicate runs recorded with ``record_noise=True``.

    Coordinates absent from a replicate's noise record count as zero
    noise.  ``r_hat`` is the running maximum over epochs of the largest
    ``||z||_inf`` seen in any replicate.
    """
    if len(runs) < min_replicates:
        raise ValidationError(f"need at least {min_replicates} replicates, got {len(runs)}")
    nrep = len(runs)
    sums: dict[tuple[int, int], dict[int, list[float]]] = {}
    for run in runs:
        for t, i, noise in run.noise:
            cell = sums.setdefault((t, i), {})
            for v, val in noise.items():
                acc = cell.setdefault(v, [0.0, 0.0])
                acc[0] += val
                acc[1] += val * val
    sigma_ti = {}
    for key, cell in sums.items():
        best = 0.0
        for s1, s2 in cell.values():
            mean = s1 / nrep
            var = max(s2 / nrep - mean * mean, 0.0) * nrep / max(nrep - 1, 1)
            best = max(best, math.sqrt(var))
        sigma_ti[key] = best
    sigma_t: dict[int, float] = {}
    for (t, _), s in sigma_ti.items():
        sigma_t[t] = sigma_t.get(t, 0.0) + s * s
    sigma_t = {t: math.sqrt(v) for t, v in sorted(sigma_t.items())}
    epochs = max((len(r.trace) for r in runs), default=0)
    r_hat = []
    best = 0.0
    for t in range(epochs):
        for r in runs:
            if t < len(r.trace):
                best = max(best, r.trace[t].z_linf)
        r_hat.append(best)
    sampled = [g.degree_count(u) for u in range(g.n) if g.degree_count(u) > cfg.q_bar]
    p_min = cfg.q_bar / max(sampled) if sampled else 1.0
    c = bernoulli_subgauss_constant(p_min) / p_min**2 if sampled else 0.0
    supp = support_size if support_size is not None else g.n
    sigma_max = max([*sigma_ti.values(), *sigma_t.values()], default=0.0)
    return DiagnosticStats(
        sigma_t_hat=sigma_t,
        sigma_ti_hat=sigma_ti,
        r_hat=r_hat,
        sigma_max_hat=sigma_max,
        p_min=p_min,
        sigma_ti_bound=math.sqrt(c),
        sigma_t_bound=math.sqrt(c * supp),
        replicates=nrep,
    )


# ----------------------------------------------------------------------
# Monte-Carlo checks over full runs


@dataclass
class EarlyStopReport:
    c: float
    epsilon: float
    replicates: int
    cells_checked: int
    worst_excess: float
    worst_cell: tuple
    max_frequency: float
    sigma_hat: dict[int, float]
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["sigma_hat"] = {str(k): v for k, v in self.sigma_hat.items()}
        return d


def early_stopping_check(
    g: Graph,
    s: int,
    params: ApprParams,
    cfg: SamplerConfig,
    c: float,
    replicates: int,
    correction_period: int | None = 5,
    min_count: int = 30,
) -> EarlyStopReport:
    """Frequency of premature threshold drops against the Gaussian tail.

    At the start of every epoch of every replicate we compare the
    maintained residual ``z`` with the exact residual ``z_bar`` of the
    current total primal.  A premature drop at node ``i`` is
    ``|z_bar_i| > eps d_i`` while ``|z_i| < c eps d_i``.  Per epoch index
    ``t`` the scale ``sigma_t`` is the largest over nodes of the
    replicate standard deviation of ``(z_i - z_bar_i)/d_i``; every (t, i)
    frequency must stay below ``exp(-(1-c)^2 eps^2 / (2 sigma_t^2))`` plus
    three binomial standard errors.  Epochs reached by fewer than
    ``min_count`` replicates are not evaluated.
    """
    from .appr import residual_exact

    n = g.n
    d = g.degrees
    b = seed_rhs(g, s, params.alpha)
    eps = params.epsilon
    stats: list[np.ndarray] = []  # per epoch: rows count, sum, sumsq, events

    def hook(epoch, z, x_total, pushes):
        while len(stats) < epoch:
            stats.append(np.zeros((4, n)))
        zb = residual_exact(g, x_total, b, params) if x_total else {s: 1.0}
        zt = to_dense(z, n)
        zx = to_dense(zb, n)
        diff = (zt - zx) / d
        st = stats[epoch - 1]
        st[0] += 1.0
        st[1] += diff
        st[2] += diff * diff
        st[3] += (np.abs(zx) > eps * d) & (np.abs(zt) < c * eps * d)

    for r in range(replicates):
        cfg_r = SamplerConfig(cfg.q_bar, cfg.weighting, cfg.rng_seed + r)
        random_appr(g, s, params, cfg_r, c, correction_period, epoch_hook=hook)

    worst = -math.inf
    worst_cell: tuple = ()
    max_freq = 0.0
    cells = 0
    sig = {}
    for t, st in enumerate(stats, start=1):
        cnt = st[0][0]
        if cnt < min_count:
            continue
        mean = st[1] / cnt
        var = np.maximum(st[2] / cnt - mean * mean, 0.0) * cnt / (cnt - 1)
        sigma = float(np.sqrt(var.max()))
        sig[t] = sigma
        bound = math.exp(-((1 - c) ** 2) * eps**2 / (2 * sigma**2)) if sigma > 0 else 0.0
        slack = binomial_slack(bound, int(cnt))
        freq = st[3] / cnt
        cells += n
        i = int(np.argmax(freq))
        max_freq = max(max_freq, float(freq[i]))
        excess = float(freq[i]) - (bound + slack)
        if excess > worst:
            worst, worst_cell = excess, (t, i, float(freq[i]), bound, slack)
    return EarlyStopReport(
        c=c,
        epsilon=eps,
        replicates=replicates,
        cells_checked=cells,
        worst_excess=worst,
        worst_cell=worst_cell,
        max_frequency=max_freq,
        sigma_hat=sig,
        passed=bool(worst <= 0.0),
    )


@dataclass
class RateReport:
    checkpoints: int
    worst_gap: float
    sigma_max_hat: float
    slope: float
    slope_limit: float
    slope_mean_of_norms: float
    r_hat: float
    passed_gradient: bool
    passed_linear: bool
    tail_epoch: int = 0
    tail_epsilon: float = 0.0
    tail_frequency: float = 0.0
    tail_bound: float = 1.0
    passed_tail: bool = True

    @property
    def passed(self) -> bool:
        return self.passed_gradient and self.passed_linear

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def rate_check(
    g: Graph,
    s: int,
    params: ApprParams,
    cfg: SamplerConfig,
    replicates: int = 100,
    c: float = 0.9,
    correction_period: int | None = 5,
    checkpoint_every: int = 10,
    tail_epsilon: float = 0.1,
) -> RateReport:
    """Both rate properties on one graph.

    Gradient part: for every replicate and checkpoint after ``M > 0``
    pushes, the running minimum of ``||Q x - b||_2^2`` stays below
    ``1/(alpha M) + alpha sigma_max^2 / 2`` where ``sigma_max`` is the
    largest noise scale from :func:`estimate_diagnostics`.

    Linear part: at the start of each epoch ``t`` the exact residual
    vector ``z_bar`` is recorded; replicates that already stopped keep
    their final value.  Its replicate average estimates ``E[z_bar]``, and a
    least-squares line of ``log ||E[z_bar]||_1`` against the mean push
    count must have slope at most ``-0.5 alpha eps / R_hat`` with
    ``R_hat`` the largest ``||z||_inf`` observed.  The slope of the log of
    the mean of the norms is reported alongside; it levels off at the
    sampling-noise floor and is not what the rate statement bounds.
    """
    from .appr import residual_exact

    n = g.n
    b_sparse = seed_rhs(g, s, params.alpha)
    b = to_dense(b_sparse, n)
    runs = []
    per_run: list[list[tuple[int, np.ndarray]]] = []
    for r in range(replicates):
        rows: list[tuple[int, np.ndarray]] = []

        def hook(epoch, z, x_total, pushes, rows=rows):
            zb = residual_exact(g, x_total, b_sparse, params) if x_total else {s: 1.0}
            rows.append((pushes, to_dense(zb, n)))

        cfg_r = SamplerConfig(cfg.q_bar, cfg.weighting, cfg.rng_seed + r)
        runs.append(
            random_appr(
                g,
                s,
                params,
                cfg_r,
                c,
                correction_period,
                checkpoint_every=checkpoint_every,
                record_noise=True,
                epoch_hook=hook,
            )
        )
        per_run.append(rows)
    diag = estimate_diagnostics(runs, g, cfg, min_replicates=min(30, replicates))
    sig2 = diag.sigma_max_hat**2
    worst = -math.inf
    npts = 0
    for run in runs:
        pushes, _, running = gradient_norm_trace(run.checkpoints, g, params, b)
        for m, v in zip(pushes, running):
            if m == 0:
                continue
            npts += 1
            worst = max(worst, v - (1.0 / (params.alpha * m) + params.alpha * sig2 / 2.0))
    epochs = max(len(rows) for rows in per_run)
    r_hat = max(diag.r_hat[-1] if diag.r_hat else 0.0, 1.0 if n else 0.0)
    ms, log_norm_mean, log_mean_norm = [], [], []
    for t in range(epochs):
        pts = [rows[min(t, len(rows) - 1)] for rows in per_run]
        ms.append(float(np.mean([p for p, _ in pts])))
        mean_vec = np.mean([z for _, z in pts], axis=0)
        log_norm_mean.append(math.log(float(np.abs(mean_vec).sum())))
        log_mean_norm.append(math.log(float(np.mean([np.abs(z).sum() for _, z in pts]))))
    if len(set(ms)) >= 2:
        slope = float(np.polyfit(ms, log_norm_mean, 1)[0])
        slope_mn = float(np.polyfit(ms, log_mean_norm, 1)[0])
    else:
        slope = slope_mn = -math.inf
    limit = -0.5 * params.alpha * params.epsilon / r_hat

    t_mid = max(epochs // 2, 1)
    pts = [rows[min(t_mid, len(rows)) - 1] for rows in per_run]
    m_t = float(np.mean([p for p, _ in pts]))
    level = math.exp(-m_t * params.alpha * params.epsilon / r_hat) ** m_t + tail_epsilon
    freq = float(np.mean([np.abs(z).sum() >= level for _, z in pts]))
    sigma_sum = sum(v for (t, _), v in diag.sigma_ti_hat.items() if t <= t_mid)
    sigma_sum += sum(v for t, v in diag.sigma_t_hat.items() if t <= t_mid)
    if sigma_sum > 0:
        tail_bound = math.exp(-(tail_epsilon**2) / (2 * params.alpha**2 * math.sqrt(n) * sigma_sum))
    else:
        tail_bound = 0.0
    tail_ok = freq <= tail_bound + binomial_slack(tail_bound, replicates)
    return RateReport(
        checkpoints=npts,
        worst_gap=worst,
        sigma_max_hat=diag.sigma_max_hat,
        slope=slope,
        slope_limit=limit,
        slope_mean_of_norms=slope_mn,
        r_hat=r_hat,
        passed_gradient=bool(worst <= 0.0),
        passed_linear=bool(slope <= limit),
        tail_epoch=t_mid,
        tail_epsilon=tail_epsilon,
        tail_frequency=freq,
        tail_bound=tail_bound,
        passed_tail=bool(tail_ok),
    )


# ----------------------------------------------------------------------
# suites over randomized graphs


@dataclass
class SuiteReport:
    """Outcome of a batch of checks; ``failures`` holds one short
    description per failed case."""

    name: str
    cases: int
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "cases": self.cases,
            "passed": self.passed,
            "failures": self.failures,
            "details": self.details,
        }


class _InvariantWatch:
    """Per-push invariant checks for a deterministic run.

    Only ``u`` and its neighbors change in a push, so the watcher keeps a
    shadow of their previous values and updates the two norms
    incrementally; every ``resync`` pushes they are recomputed with
    ``math.fsum`` to keep rounding from accumulating.
    """

    def __init__(self, g: Graph, z0: Mapping[int, float], resync: int = 2000):
        self.g = g
        self.mass = math.fsum(z0.values())
        self.z_prev: dict[int, float] = dict(z0)
        self.x_prev: dict[int, float] = {}
        self.z_l1 = self.mass
        self.x_l1 = 0.0
        self.resync = resync
        self.errors: list[str] = []
        self.max_defect = 0.0

    def __call__(self, state, u: int) -> None:
        if self.errors:
            return
        g = self.g
        k = state.push_count
        before_z = self.z_l1
        for v in (u, *g.neighbors(u).tolist()):
            zn = state.z.get(v, 0.0)
            if zn < 0.0:
                self.errors.append(f"push {k}: z[{v}] = {zn} < 0")
                return
            self.z_l1 += zn - self.z_prev.get(v, 0.0)
            self.z_prev[v] = zn
        xn = state.x.get(u, 0.0)
        xo = self.x_prev.get(u)
        if xo is None and xn == 0.0:
            self.errors.append(f"push {k}: node {u} pushed but absent from x")
            return
        if xn < 0.0:
            self.errors.append(f"push {k}: x[{u}] = {xn} < 0")
            return
        self.x_l1 += g.sqrt_deg[u] * (xn - (xo or 0.0))
        self.x_prev[u] = xn
        if set(self.x_prev) - set(state.x):
            self.errors.append(f"push {k}: support of x shrank")
            return
        if k % self.resync == 0:
            self.z_l1 = math.fsum(state.z.values())
            self.x_l1 = math.fsum(g.sqrt_deg[i] * v for i, v in state.x.items())
        tol = 1e-9 * k
        if self.z_l1 > before_z + tol:
            self.errors.append(f"push {k}: ||z||_1 grew from {before_z} to {self.z_l1}")
            return
        defect = abs(self.z_l1 + self.x_l1 - self.mass)
        self.max_defect = max(self.max_defect, defect / k)
        if defect > tol:
            self.errors.append(f"push {k}: mass defect {defect} > {tol}")


def invariant_suite(runs: int = 200, seed: int = 0, n_max: int = 200) -> SuiteReport:
    """Randomized deterministic runs with per-push invariant checks:
    nonnegative ``x`` and ``z``, non-increasing ``||z||_1``, conserved
    ``||z||_1 + ||D^{1/2} x||_1`` and a support of ``x`` that only grows."""
    from .appr import appr_solve
    from .testing import random_small_graph

    rng = np.random.default_rng(seed)
    rep = SuiteReport("lemma1", runs)
    total_pushes = 0
    worst = 0.0
    for r in range(runs):
        g = random_small_graph(rng, n_max=n_max)
        alpha = float(rng.uniform(0.05, 0.9))
        eps = float(10 ** rng.uniform(-6, -2))
        s = int(rng.integers(g.n))
        watch = _InvariantWatch(g, {s: 1.0})
        res = appr_solve(g, s, ApprParams(alpha, eps), callback=watch)
        total_pushes += res.pushes
        worst = max(worst, watch.max_defect)
        if watch.errors:
            rep.failures.append(f"run {r} (n={g.n}, alpha={alpha:.3f}, eps={eps:.2e}): {watch.errors[0]}")
    rep.details = {"pushes": total_pushes, "max_defect_per_push": worst}
    return rep


def equivalence_suite(graphs: int = 50, seed: int = 1, n_max: int = 200, tol: float = 1e-6) -> SuiteReport:
    """``appr_solve`` at ``eps = 1e-10`` against the dense factorization."""
    from .appr import appr_solve
    from .testing import random_small_graph

    rng = np.random.default_rng(seed)
    rep = SuiteReport("equivalence", graphs)
    worst = 0.0
    for r in range(graphs):
        g = random_small_graph(rng, n_max=n_max)
        params = ApprParams(float(rng.uniform(0.05, 0.9)), 1e-10)
        s = int(rng.integers(g.n))
        x = to_dense(appr_solve(g, s, params).x, g.n)
        err = float(np.abs(x - dense_seed_solution(g, s, params)).max())
        worst = max(worst, err)
        if err > tol:
            rep.failures.append(f"graph {r} (n={g.n}): max error {err:.3e}")
    rep.details = {"max_error": worst}
    return rep


def degeneracy_suite(graphs: int = 20, seed: int = 2, n_max: int = 200) -> SuiteReport:
    """With ``q_bar >= d_max`` nothing is sampled, so the subsampled
    solver must reproduce ``appr_solve(c eps)`` bit for bit."""
    from .appr import appr_solve
    from .testing import random_small_graph

    rng = np.random.default_rng(seed)
    rep = SuiteReport("degeneracy", graphs * 3)
    for r in range(graphs):
        g = random_small_graph(rng, n_max=n_max)
        alpha = float(rng.uniform(0.05, 0.9))
        eps = float(10 ** rng.uniform(-5, -2))
        c = float(rng.uniform(0.3, 1.0))
        s = int(rng.integers(g.n))
        ref = appr_solve(g, s, ApprParams(alpha, c * eps))
        q = g.max_neighbor_count + int(rng.integers(0, 3))
        for weighting in ("uniform", "edge", "degree"):
            out = random_appr(g, s, ApprParams(alpha, eps), SamplerConfig(q, weighting, r), c, 5)
            if out.x != ref.x or out.pushes != ref.pushes:
                rep.failures.append(f"graph {r} ({weighting}): output differs from deterministic run")
    return rep


def sampler_suite(max_support: int = 8, seed: int = 3, tol: float = 1e-12) -> SuiteReport:
    """Exact unbiasedness of every design for every support size up to
    ``max_support`` and every ``q_bar`` up to the support size."""
    rng = np.random.default_rng(seed)
    rep = SuiteReport("sampler", 0)
    worst = 0.0
    for k in range(1, max_support + 1):
        idx = np.sort(rng.choice(10 * max_support, size=k, replace=False))
        w = {int(i): float(v) for i, v in zip(idx, rng.uniform(0.1, 3.0, size=k))}
        degrees = {int(i): float(rng.integers(1, 20)) for i in idx}
        for q in range(1, k + 1):
            for weighting in ("uniform", "edge", "degree"):
                rep.cases += 1
                outs = enumerate_sampler_outcomes(w, SamplerConfig(q, weighting, 0), degrees)
                total = math.fsum(p for _, p in outs)
                mean = outcome_mean(outs)
                err = max(abs(mean.get(i, 0.0) - v) for i, v in w.items())
                err = max(err, abs(total - 1.0))
                worst = max(worst, err)
                if err > tol:
                    rep.failures.append(f"k={k} q={q} {weighting}: error {err:.3e}")
    rep.details = {"max_error": worst}
    return rep


def test_graphs() -> dict[str, tuple[Graph, int]]:
    """The small reference graphs used by the statistical suites, each
    with the seed node used for solver runs (the highest-degree node)."""
    from .testing import barbell, k3_chain, path, power_law, star

    graphs = {
        "S3": star(3),
        "P3": path(3),
        "S8": star(8),
        "K3-chain-6": k3_chain(6),
        "barbell-4": barbell(4)[0],
        "power-law-500": power_law(500, 4.0, 2.5, seed=1),
    }
    return {name: (g, int(np.argmax(g.degrees))) for name, g in graphs.items()}


def median_qbar(g: Graph, mult: float = 2.0) -> int:
    """``q_bar = mult * median degree count``, at least 1."""
    counts = np.diff(g.indptr)
    return max(1, int(round(mult * float(np.median(counts)))))


def offline_suite(trials: int = 10000, seed: int = 0) -> SuiteReport:
    """Concentration of the influencer sparsifier's quadratic form on the
    star, K3 chains and the 500-node power-law graph.

    Each cell uses a fixed epsilon grid plus the deviations at which the
    bound equals 0.5, 0.1 and 0.01, where the bound has some bite.
    """
    from .testing import k3_chain, power_law, star

    rng = np.random.default_rng(seed)
    cells: list[tuple[str, Graph, int, np.ndarray, list[float]]] = []
    s3 = star(3)
    cells.append(("S3 x=e0+e1", s3, 1, np.array([1.0, 1.0, 0.0, 0.0]), [0.5, 1.0, 2.0]))
    for count in (4, 10):
        g = k3_chain(count)
        cells.append((f"K3-chain-{count} x=rand+-1", g, 2, rng.choice([-1.0, 1.0], g.n), [0.5, 1.0, 2.0]))
    pl = power_law(500, 4.0, 2.5, seed=1)
    q = median_qbar(pl)
    hub = int(np.argmax(pl.degrees))
    x_hub = np.zeros(pl.n)
    x_hub[hub] = 1.0
    x_hub[pl.neighbors(hub)[0]] = 1.0
    cells.append(("power-law-500 x=hub+nbr", pl, q, x_hub, [0.01, 0.1, 0.5]))
    cells.append(("power-law-500 x=rand+-1", pl, q, rng.choice([-1.0, 1.0], pl.n), [0.1, 1.0, 5.0]))
    cells.append(("power-law-500 x=rand[0,1]", pl, q, rng.uniform(0, 1, pl.n), [0.1, 1.0, 5.0]))
    rep = SuiteReport("offline", len(cells))
    out = {}
    for k, (name, g, q_bar, x, grid) in enumerate(cells):
        s_i = influencer_entries(g, q_bar)
        d_max = float(g.degrees.max())
        x_inf = float(np.abs(x).max())
        extra = [epsilon_for_bound(t, q_bar, d_max, x_inf, s_i) for t in (0.5, 0.1, 0.01)] if s_i else []
        r = offline_concentration_check(g, q_bar, x, trials, [*grid, *extra], seed + 7919 * k)
        out[name] = r.to_dict()
        if not r.passed:
            rep.failures.append(f"{name}: empirical {r.empirical} vs bound {r.bounds}")
    rep.details = out
    return rep


def early_stop_suite(
    replicates: int = 1000,
    cs: Sequence[float] = (0.5, 0.9),
    alpha: float = 0.15,
    epsilon: float = 1e-3,
    seed: int = 0,
) -> SuiteReport:
    """Premature-drop frequencies on the 500-node power-law graph from its
    hub, with ``q_bar`` twice the median degree."""
    from .testing import power_law

    g = power_law(500, 4.0, 2.5, seed=1)
    s = int(np.argmax(g.degrees))
    cfg = SamplerConfig(median_qbar(g), "uniform", seed)
    rep = SuiteReport("early-stop", len(cs))
    for c in cs:
        r = early_stopping_check(g, s, ApprParams(alpha, epsilon), cfg, c, replicates)
        rep.details[f"c={c}"] = r.to_dict()
        if not r.passed:
            rep.failures.append(f"c={c}: worst cell {r.worst_cell}")
    return rep


def rates_suite(
    replicates: int = 100,
    alpha: float = 0.15,
    epsilon: float = 1e-3,
    seed: int = 0,
    graphs: Mapping[str, tuple[Graph, int]] | None = None,
) -> SuiteReport:
    """Gradient-norm and linear-rate checks on every reference graph."""
    graphs = graphs if graphs is not None else test_graphs()
    rep = SuiteReport("rates", len(graphs))
    for name, (g, s) in graphs.items():
        q = max(1, median_qbar(g) if g.n > 20 else 1)
        r = rate_check(g, s, ApprParams(alpha, epsilon), SamplerConfig(q, "uniform", seed), replicates)
        rep.details[name] = r.to_dict()
        if not r.passed_gradient:
            rep.failures.append(f"{name}: gradient bound exceeded by {r.worst_gap:.3e}")
        if not r.passed_linear:
            rep.failures.append(f"{name}: slope {r.slope:.3e} above {r.slope_limit:.3e}")
    return rep
