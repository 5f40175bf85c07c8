"""Command-line entry point: ``subappr <task> [options]``.

Every run writes its outputs into ``--out`` together with ``spec.toml``,
the full experiment description, so that ``subappr --spec out/spec.toml``
repeats it.  CSV tables contain only deterministic quantities (no
timings), which makes them byte-identical across reruns with the same
spec and seed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

from . import oracle, testing
from .appr import ApprParams, appr_solve, residual_exact
from .clustering import UNREACHED, cluster
from .errors import SubapprError, ValidationError
from .graph import (
    Graph,
    LabelSet,
    degree_histogram,
    degree_stats,
    load_edge_list,
    load_labels,
    write_edge_list,
)
from .onl import OnlConfig, baseline_run, onl_run
from .random_appr import SamplerConfig, random_appr, residual_norms
from .solvers import SolverSpec
from .sparsify import (
    Influencer,
    Resistive,
    Uniform,
    calibrate_resistive_scale,
    degree_resistance_pairs,
    edge_ratio,
    resistive_distances,
    sparsify_offline,
)

SCHEMA_VERSION = 1
TASKS = ("stats", "sparsify", "solve", "onl", "cluster", "verify")
SUITES = ("lemma1", "offline", "sampler", "rates", "early-stop")
DEFAULT_EPS_GRID = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)

log = logging.getLogger("subappr")


# ----------------------------------------------------------------------
# experiment description


@dataclass
class ExperimentSpec:
    """A complete, serializable description of one run.

    ``dataset`` is an edge-list path or ``builtin:<name>[:arg...]`` (see
    :func:`builtin_graph`).  ``params`` holds the task-specific options
    exactly as parsed from the command line.
    """

    task: str
    dataset: str | None = None
    labels: str | None = None
    weighted: bool = False
    seed: int = 0
    threads: int = 1
    out: str = "subappr-out"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}")
        if self.threads < 1:
            raise ValidationError("threads must be at least 1")

    def dumps(self) -> str:
        lines = [f"schema_version = {SCHEMA_VERSION}"]
        for key, value in asdict(self).items():
            if key == "params":
                continue
            lines.append(f"{key} = {json.dumps(value)}")
        lines.append("")
        lines.append("[params]")
        for key in sorted(self.params):
            lines.append(f"{key} = {json.dumps(self.params[key])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "ExperimentSpec":
        top: dict[str, Any] = {}
        params: dict[str, Any] = {}
        target = top
        for n, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line == "[params]":
                target = params
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValidationError(f"spec line {n}: expected 'key = value'")
            try:
                target[key.strip()] = json.loads(value.strip())
            except json.JSONDecodeError as exc:
                raise ValidationError(f"spec line {n}: {exc}") from None
        version = top.pop("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ValidationError(f"unsupported spec schema_version {version}")
        return cls(**top, params=params)


# ----------------------------------------------------------------------
# inputs


_BUILTINS: dict[str, Callable[..., Any]] = {
    "star": lambda k=8: testing.star(int(k)),
    "path": lambda n=10: testing.path(int(n)),
    "complete": lambda n=5: testing.complete(int(n)),
    "k3chain": lambda count=4: testing.k3_chain(int(count)),
    "barbell": lambda k=3: testing.barbell(int(k)),
    "powerlaw": lambda n=500, avg=4.0, exp=2.5, seed=1: testing.power_law(
        int(n), float(avg), float(exp), seed=int(seed)
    ),
    "planted": lambda n=500, k=2, p_in=0.04, p_out=0.004, seed=0: testing.planted_partition(
        int(n), int(k), float(p_in), float(p_out), seed=int(seed)
    ),
    "er": lambda n=100, p=0.05, seed=0: testing.erdos_renyi(int(n), float(p), seed=int(seed)),
}


def builtin_graph(name: str) -> tuple[Graph, LabelSet | None]:
    """``builtin:powerlaw:500:4:2.5:1`` style synthetic inputs.  Graphs
    with a natural class structure (barbell, planted) come with labels."""
    parts = name.split(":")
    kind, args = parts[0], parts[1:]
    if kind not in _BUILTINS:
        raise ValidationError(f"unknown builtin graph {kind!r}; choose from {sorted(_BUILTINS)}")
    made = _BUILTINS[kind](*args)
    if isinstance(made, tuple):
        return made
    return made, None


def load_inputs(spec: ExperimentSpec) -> tuple[Graph, LabelSet | None]:
    if spec.dataset is None:
        raise ValidationError(f"task {spec.task!r} needs --dataset")
    if spec.dataset.startswith("builtin:"):
        g, labels = builtin_graph(spec.dataset[len("builtin:"):])
    else:
        g, labels = load_edge_list(spec.dataset, weighted=spec.weighted), None
    if spec.labels is not None:
        labels = load_labels(spec.labels, g)
    return g, labels


# ----------------------------------------------------------------------
# outputs


def fmt(value: Any) -> str:
    """Full-precision, locale-free text for one CSV cell."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


class OutputDir:
    """Tracks every file a run writes so a failed run can remove them."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.written: list[Path] = []
        self._created_root = not self.root.exists()

    def path(self, name: str) -> Path:
        self.root.mkdir(parents=True, exist_ok=True)
        p = self.root / name
        self.written.append(p)
        return p

    def csv(self, name: str, header: Sequence[str], rows) -> Path:
        p = self.path(name)
        with open(p, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
        return p

    def json(self, name: str, payload: dict) -> Path:
        p = self.path(name)
        body = {"schema_version": SCHEMA_VERSION, **payload}
        p.write_text(json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def cleanup(self) -> None:
        for p in self.written:
            p.unlink(missing_ok=True)
        if self._created_root and self.root.exists() and not any(self.root.iterdir()):
            self.root.rmdir()


def _map(fn, jobs: list, threads: int) -> list:
    """Run independent cells, in parallel when asked; results keep the
    input order so outputs do not depend on scheduling."""
    if threads <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*jobs)))


# ----------------------------------------------------------------------
# tasks


def _qbar(g: Graph, p: dict) -> int | None:
    if p.get("qbar") is not None:
        return int(p["qbar"])
    if p.get("qbar_mult") is not None:
        return oracle.median_qbar(g, float(p["qbar_mult"]))
    return None


def task_stats(spec: ExperimentSpec, g: Graph, labels, out: OutputDir) -> int:
    st = degree_stats(g)
    row = asdict(st)
    out.csv("stats.csv", list(row), [list(row.values())])
    out.csv("degree_histogram.csv", ["degree", "count"], degree_histogram(g))
    summary = {"task": "stats", "stats": row}
    if labels is not None:
        summary["edge_ratio"] = edge_ratio(g, labels)
    out.json("summary.json", summary)
    print(
        f"n={st.n} m={st.m} nnz={st.nnz} avg={st.avg_degree:.2f} "
        f"median={st.median_degree:g} max={st.max_degree:g}"
    )
    return 0


def _scheme(g: Graph, p: dict):
    kind = p.get("scheme", "influencer")
    if kind == "uniform":
        return Uniform(float(p.get("keep_prob", 0.5))), None
    if kind == "influencer":
        q = _qbar(g, p)
        if q is None:
            q = oracle.median_qbar(g)
        return Influencer(q), None
    if kind == "resistive":
        r = resistive_distances(g)
        if p.get("scale") is not None:
            return Resistive(float(p["scale"])), r
        return Resistive(calibrate_resistive_scale(g, float(p.get("target_ratio", 0.5)), r)), r
    raise ValidationError(f"unknown scheme {kind!r}")


def task_sparsify(spec: ExperimentSpec, g: Graph, labels, out: OutputDir) -> int:
    p = spec.params
    scheme, resistance = _scheme(g, p)
    trials = int(p.get("trials", 1))
    rows = []
    first = None
    for t in range(trials):
        h = sparsify_offline(g, scheme, spec.seed + t, resistance)
        if first is None:
            first = h
        ratio = edge_ratio(h, labels) if labels is not None else math.nan
        rows.append([t, spec.seed + t, h.m, h.m / max(g.m, 1), float(h.weights.sum() / 2), ratio])
    out.csv(
        "sparsify.csv",
        ["trial", "seed", "kept_edges", "kept_fraction", "total_weight", "edge_ratio"],
        rows,
    )
    write_edge_list(first, out.path("sparsified.edges"), weighted=True)
    sidecar = {
        "task": "sparsify",
        "scheme": type(scheme).__name__.lower(),
        "scheme_params": asdict(scheme),
        "seed": spec.seed,
        "original_edges": g.m,
        "kept_edges": first.m,
        "edge_file": "sparsified.edges",
        "node_ids": "original ids from the input",
    }
    sidecar["edge_ratio_before"] = edge_ratio(g, labels) if labels is not None else None
    sidecar["edge_ratio_after"] = edge_ratio(first, labels) if labels is not None else None
    if resistance is not None:
        dmax, inv_r = degree_resistance_pairs(g, resistance)
        u, v, _ = g.edges()
        out.csv(
            "degree_resistance.csv",
            ["u", "v", "max_degree", "inverse_resistance"],
            zip(u.tolist(), v.tolist(), dmax.tolist(), inv_r.tolist()),
        )
    out.json("sparsified.json", sidecar)
    print(f"kept {first.m} of {g.m} edges ({type(scheme).__name__})")
    return 0


def _solve_cell(g: Graph, mode: str, eps: float, s: int, trial: int, p: dict, seed: int):
    alpha = float(p.get("alpha", 0.15))
    params = ApprParams(alpha, eps)
    b = {s: 2.0 * alpha / (1.0 + alpha) / g.sqrt_deg[s]}
    q = _qbar(g, p) or oracle.median_qbar(g)
    cell_seed = seed + 1_000_003 * trial
    if mode == "appr":
        res = appr_solve(g, s, params)
        x, pushes, queried = res.x, res.pushes, res.nodes_queried
    elif mode == "online":
        cfg = SamplerConfig(q, p.get("weighting", "uniform"), cell_seed)
        qf = float(p.get("correction_qf", 1.0))
        corr = SamplerConfig(max(1, int(round(q * qf))), cfg.weighting, cell_seed) if qf != 1.0 else None
        period = int(p.get("period", 5)) or None
        res = random_appr(
            g, s, params, cfg, float(p.get("c", 0.9)), period, stream=s + 1, correction_cfg=corr
        )
        x, pushes, queried = res.x, res.pushes, res.nodes_queried
    elif mode == "offline":
        h = sparsify_offline(g, Influencer(q), cell_seed)
        if h.deg[s] <= 0:
            # every edge of the seed was dropped; nothing can be pushed
            log.warning("seed %d is isolated after sparsification (trial %d)", s, trial)
            l1, l2 = residual_norms(g, {}, b, params)
            return [mode, eps, s, trial, 0, 0, 0, l2, l1]
        # the sparsified system is normalized by its own degrees; carry the
        # solution over through the unnormalized vector D^{1/2} x and score
        # it on the original system
        res = appr_solve(h, s, params)
        x = {u: v * h.sqrt_deg[u] / g.sqrt_deg[u] for u, v in res.x.items()}
        pushes, queried = res.pushes, res.nodes_queried
    else:
        raise ValidationError(f"unknown solve mode {mode!r}")
    l1, l2 = residual_norms(g, x, b, params)
    return [mode, eps, s, trial, pushes, queried, len(x), l2, l1]


def _seed_nodes(g: Graph, p: dict, seed: int) -> list[int]:
    if p.get("seeds"):
        nodes = [int(v) for v in p["seeds"]]
    else:
        count = int(p.get("num_seeds", 1))
        rng = np.random.default_rng(seed)
        cand = np.flatnonzero(g.degrees > 0)
        nodes = sorted(int(v) for v in rng.choice(cand, size=min(count, len(cand)), replace=False))
    for s in nodes:
        if not 0 <= s < g.n:
            raise ValidationError(f"seed node {s} out of range")
    return nodes


def _solve_single(spec: ExperimentSpec, g: Graph, out: OutputDir) -> int:
    """One solve from ``--seed-node``: the primal as ``node value`` lines,
    a per-epoch table for sampled runs and a JSON footer."""
    p = spec.params
    s = int(p["seed_node"])
    if not 0 <= s < g.n:
        raise ValidationError(f"seed node {s} out of range")
    alpha = float(p.get("alpha", 0.15))
    params = ApprParams(alpha, float(p.get("epsilon", 1e-4)))
    b = {s: 2.0 * alpha / (1.0 + alpha) / g.sqrt_deg[s]}
    online = "online" in (p.get("modes") or [])
    trials = int(p.get("trials", 1)) if online else 1
    epoch_rows = []
    x = z = {}
    pushes = queried = 0
    for t in range(trials):
        if online:
            q = _qbar(g, p) or oracle.median_qbar(g)
            cfg = SamplerConfig(q, p.get("weighting", "uniform"), spec.seed + 1_000_003 * t)
            qf = float(p.get("correction_qf", 1.0))
            corr = SamplerConfig(max(1, int(round(q * qf))), cfg.weighting, cfg.rng_seed) if qf != 1.0 else None
            res = random_appr(
                g, s, params, cfg, float(p.get("c", 0.9)), int(p.get("period", 5)) or None,
                stream=s + 1, correction_cfg=corr, record_residuals=True,
            )
            for e in res.trace:
                epoch_rows.append([t, e.epoch, e.pushes, e.l1_residual_exact, e.l2_residual_exact, e.support_x])
            if t == 0:
                x, pushes, queried = res.x, res.pushes, res.nodes_queried
        else:
            res = appr_solve(g, s, params)
            x, pushes, queried = res.x, res.pushes, res.nodes_queried
    z = residual_exact(g, x, b, params) if x else {s: 1.0}
    ids = g.node_ids if g.node_ids is not None else np.arange(g.n)
    with open(out.path("x.txt"), "w", encoding="utf-8") as fh:
        for u in sorted(x):
            fh.write(f"{ids[u]} {fmt(x[u])}\n")
    if epoch_rows:
        out.csv(
            "epochs.csv",
            ["trial", "epoch", "pushes", "l1_residual_exact", "l2_residual_exact", "support_x"],
            epoch_rows,
        )
    zl = [abs(v) / g.degrees[u] for u, v in z.items()]
    footer = {
        "task": "solve",
        "seed_node": s,
        "online": online,
        "pushes": pushes,
        "nodes_queried": queried,
        "residual_linf": max(zl, default=0.0),
        "support_x": len(x),
        "support_z": sum(1 for v in z.values() if v != 0.0),
    }
    out.json("solve.json", footer)
    for u in sorted(x):
        print(f"{ids[u]} {fmt(x[u])}")
    print(json.dumps(_jsonable(footer), sort_keys=True))
    return 0


def task_solve(spec: ExperimentSpec, g: Graph, labels, out: OutputDir) -> int:
    p = spec.params
    if p.get("seed_node") is not None:
        return _solve_single(spec, g, out)
    modes = list(p.get("modes") or ["appr"])
    grid = [float(e) for e in (p.get("eps_grid") or DEFAULT_EPS_GRID)]
    trials = int(p.get("trials", 1))
    nodes = _seed_nodes(g, p, spec.seed)
    jobs = []
    for mode in modes:
        reps = 1 if mode == "appr" else trials
        for eps in grid:
            for s in nodes:
                for t in range(reps):
                    jobs.append((g, mode, eps, s, t, p, spec.seed))
    rows = _map(_solve_cell, jobs, spec.threads)
    header = ["mode", "epsilon", "seed_node", "trial", "pushes", "nodes_queried", "support", "residual_l2", "residual_l1"]
    out.csv("solve.csv", header, rows)
    agg: dict[str, list[dict]] = {}
    for mode in modes:
        for eps in grid:
            sel = [r for r in rows if r[0] == mode and r[1] == eps]
            agg.setdefault(mode, []).append(
                {
                    "epsilon": eps,
                    "runs": len(sel),
                    "mean_nodes_queried": float(np.mean([r[5] for r in sel])),
                    "mean_pushes": float(np.mean([r[4] for r in sel])),
                    "mean_residual_l2": float(np.mean([r[7] for r in sel])),
                }
            )
    footer = {
        "task": "solve",
        "alpha": float(p.get("alpha", 0.15)),
        "q_bar": _qbar(g, p) or oracle.median_qbar(g),
        "seed_nodes": nodes,
        "summary": agg,
    }
    appr_rows = agg.get("appr")
    if appr_rows:
        by_eps = sorted(appr_rows, key=lambda r: r["epsilon"])
        qs = [r["mean_nodes_queried"] for r in by_eps]
        footer["nodes_queried_nonincreasing_in_epsilon"] = all(a >= b for a, b in zip(qs, qs[1:]))
    out.json("solve.json", footer)
    for mode, lst in agg.items():
        for r in lst:
            print(f"{mode:8s} eps={r['epsilon']:.0e} queried={r['mean_nodes_queried']:.1f} residual={r['mean_residual_l2']:.3e}")
    return 0


def _solver(g: Graph, p: dict, seed: int) -> SolverSpec:
    kind = p.get("solver", "exact")
    eps = float(p.get("eps", 1e-6))
    if kind == "random":
        q = _qbar(g, p) or oracle.median_qbar(g)
        cfg = SamplerConfig(q, p.get("weighting", "uniform"), seed)
        return SolverSpec("random", eps, cfg, float(p.get("c", 0.9)), int(p.get("period", 5)) or None)
    return SolverSpec(kind, eps)


_METHOD_ALIASES = {"relax": "relaxation", "reg": "regularize"}


def _visit_order(n: int, text: str, seed: int) -> np.ndarray:
    """``natural`` (0..n-1), ``shuffled`` (global seed) or ``shuffled:SEED``."""
    if text == "natural":
        return np.arange(n)
    kind, _, arg = text.partition(":")
    if kind != "shuffled":
        raise ValidationError(f"order must be natural or shuffled[:SEED], got {text!r}")
    return np.random.default_rng(int(arg) if arg else seed).permutation(n)


def task_onl(spec: ExperimentSpec, g: Graph, labels, out: OutputDir) -> int:
    if labels is None:
        raise ValidationError("onl needs --labels (or a builtin graph with labels)")
    p = spec.params
    order = _visit_order(g.n, p.get("order", "shuffled"), spec.seed)
    method = _METHOD_ALIASES.get(p.get("method", "relaxation"), p.get("method"))
    if method in ("wma", "wmastar"):
        tr = baseline_run(g, labels, order, method, float(p.get("beta", 0.9)), int(p.get("k_hops", 3)), spec.seed)
    else:
        cfg = OnlConfig(
            gamma=p.get("gamma"),
            method=method,
            solver=_solver(g, p, spec.seed),
            beta=float(p.get("beta", 1.0)),
            argmax=bool(p.get("argmax", False)),
            seed=spec.seed,
        )
        tr = onl_run(g, labels, cfg, order)
    rows = [
        [i + 1, int(tr.order[i]), int(tr.predictions[i]), int(tr.truths[i]), int(tr.losses[i]), int(tr.cumulative_loss[i])]
        for i in range(len(tr.order))
    ]
    out.csv("onl.csv", ["t", "node", "prediction", "truth", "loss", "cumulative_mistakes"], rows)
    out.json(
        "onl.json",
        {
            "task": "onl",
            "method": tr.method,
            "mistakes": tr.mistakes,
            "mistake_rate": tr.mistake_rate,
            "comparator_loss": tr.comparator_loss,
            "regret_bound": tr.regret_bound,
            "regret_bound_rho": tr.regret_bound_rho,
            "gamma": tr.gamma,
            "rho": tr.rho,
            "nodes_queried": tr.nodes_queried,
        },
    )
    print(f"{tr.method}: {tr.mistakes} mistakes over {len(tr.order)} nodes (bound {tr.regret_bound:.2f})")
    return 0


def task_cluster(spec: ExperimentSpec, g: Graph, labels, out: OutputDir) -> int:
    p = spec.params
    res = cluster(
        g,
        count=p.get("count"),
        beta=float(p.get("beta", 0.15)),
        solver=_solver(g, p, spec.seed),
        labels=labels,
    )
    ids = g.node_ids if g.node_ids is not None else np.arange(g.n)
    rows = [[u, ids[u], int(res.assignment[u])] for u in range(g.n)]
    out.csv("clusters.csv", ["node", "original_id", "cluster_seed"], rows)
    out.json(
        "cluster.json",
        {
            "task": "cluster",
            "seeds": res.seeds,
            "score": res.score,
            "unreached_count": res.unreached_count,
            "unreached_marker": UNREACHED,
            "nodes_queried": res.nodes_queried,
        },
    )
    score = "n/a" if res.score is None else f"{res.score:.4f}"
    print(f"{len(res.seeds)} clusters, purity {score}, unreached {res.unreached_count}")
    return 0


def task_verify(spec: ExperimentSpec, g, labels, out: OutputDir) -> int:
    p = spec.params
    suites = list(p.get("suites") or SUITES)
    status = 0
    for name in suites:
        if name == "lemma1":
            rep = oracle.invariant_suite(int(p.get("runs", 200)), spec.seed)
        elif name == "offline":
            rep = oracle.offline_suite(int(p.get("trials", 10000)), spec.seed)
        elif name == "sampler":
            rep = oracle.sampler_suite(int(p.get("max_support", 8)), spec.seed)
        elif name == "rates":
            rep = oracle.rates_suite(int(p.get("replicates", 100)), seed=spec.seed)
        elif name == "early-stop":
            rep = oracle.early_stop_suite(int(p.get("replicates", 1000)), seed=spec.seed)
        else:
            raise ValidationError(f"unknown suite {name!r}")
        out.json(f"verify_{name}.json", rep.to_dict())
        print(f"{'PASS' if rep.passed else 'FAIL'} {name} ({rep.cases} cases)")
        for f in rep.failures[:5]:
            print(f"    {f}")
        if not rep.passed:
            status = 1
    return status


_TASKS = {
    "stats": task_stats,
    "sparsify": task_sparsify,
    "solve": task_solve,
    "onl": task_onl,
    "cluster": task_cluster,
    "verify": task_verify,
}


def run_experiment(spec: ExperimentSpec) -> int:
    """Execute one task; on error every file it wrote is removed."""
    out = OutputDir(spec.out)
    try:
        if spec.task == "verify" and spec.dataset is None:
            g, labels = None, None
        else:
            g, labels = load_inputs(spec)
        out.path("spec.toml").write_text(spec.dumps(), encoding="utf-8")
        return _TASKS[spec.task](spec, g, labels, out)
    except BaseException:
        out.cleanup()
        raise


# ----------------------------------------------------------------------
# argument parsing


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="global RNG seed")
    common.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    common.add_argument("--out", default="subappr-out", help="output directory")
    common.add_argument("--dataset", help="edge list path or builtin:<name>[:args]")
    common.add_argument("--labels", help="label file (node label per line)")
    common.add_argument("--weighted", action="store_true", help="edge list has a weight column")
    common.add_argument("-v", "--verbose", action="store_true")

    qbar = argparse.ArgumentParser(add_help=False)
    grp = qbar.add_mutually_exclusive_group()
    grp.add_argument("--qbar", type=int, help="sampling budget per push")
    grp.add_argument("--qbar-mult", type=float, help="budget as a multiple of the median degree")
    qbar.add_argument("--weighting", choices=("uniform", "edge", "degree"), default="uniform")
    qbar.add_argument("--c", type=float, default=0.9, help="threshold relaxation for sampled runs")
    qbar.add_argument("--period", type=int, default=5, help="correction period in epochs (0 disables)")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--solver", choices=("exact", "appr", "random"), default="exact")
    solver.add_argument("--eps", type=float, default=1e-6, help="push tolerance for appr/random")

    parser = argparse.ArgumentParser(prog="subappr", description="Local PageRank solvers with edge subsampling.")
    parser.add_argument("--spec", help="rerun a persisted spec.toml (other flags ignored)")
    sub = parser.add_subparsers(dest="task")

    sub.add_parser("stats", parents=[common], help="degree statistics")

    sp = sub.add_parser("sparsify", parents=[common, qbar], help="offline edge sparsification")
    sp.add_argument("--scheme", choices=("uniform", "influencer", "resistive"), default="influencer")
    sp.add_argument("--keep-prob", type=float, default=0.5)
    sp.add_argument("--scale", type=float, help="resistive scale (default: calibrate to --target-ratio)")
    sp.add_argument("--target-ratio", type=float, default=0.5)
    sp.add_argument("--trials", type=int, default=1)

    so = sub.add_parser("solve", parents=[common, qbar], help="PageRank solves over an epsilon grid")
    so.add_argument("--alpha", type=float, default=0.15)
    so.add_argument("--eps-grid", type=_floats, default=list(DEFAULT_EPS_GRID))
    so.add_argument("--modes", type=lambda s: s.split(","), default=None, help="comma list of appr,online,offline")
    so.add_argument("--online", action="store_true", help="shorthand adding the online mode")
    so.add_argument("--seed-node", type=int, help="single solve from this node; prints x")
    so.add_argument("--epsilon", type=float, default=1e-4, help="tolerance for --seed-node runs")
    so.add_argument("--seeds", type=_ints, help="comma list of seed nodes for sweeps")
    so.add_argument("--num-seeds", type=int, default=1, help="random seed nodes when --seeds is absent")
    so.add_argument("--trials", type=int, default=1, help="replicates per sampled cell")
    so.add_argument("--correction-qf", type=float, default=1.0, help="budget multiplier for the correction sampler")

    on = sub.add_parser("onl", parents=[common, qbar, solver], help="online node labeling")
    on.add_argument(
        "--method",
        choices=("relaxation", "relax", "regularize", "reg", "wma", "wmastar"),
        default="relaxation",
    )
    on.add_argument("--order", default="shuffled", help="natural, shuffled or shuffled:SEED")
    on.add_argument("--gamma", type=float, help="smoothness budget (default: measured)")
    on.add_argument("--beta", type=float, help="Laplacian discount (default 1; 0.9 for wmastar)")
    on.add_argument("--k-hops", type=int, default=3)
    on.add_argument("--argmax", action="store_true", help="deterministic predictions")

    cl = sub.add_parser("cluster", parents=[common, qbar, solver], help="seeded clustering")
    cl.add_argument("--count", "--seeds", dest="count", type=int, help="number of seeds (default: label count)")
    cl.add_argument("--beta", type=float, default=0.15)

    ve = sub.add_parser("verify", parents=[common], help="oracle suites")
    ve.add_argument("--suite", action="append", choices=SUITES, help="repeatable; default all")
    ve.add_argument("--runs", type=int, default=200)
    ve.add_argument("--trials", type=int, default=10000)
    ve.add_argument("--replicates", type=int, help="replicates for rates (100) / early-stop (1000)")
    ve.add_argument("--max-support", type=int, default=8)
    return parser


_GLOBAL = ("seed", "threads", "out", "dataset", "labels", "weighted", "verbose", "task", "spec")


def spec_from_args(ns: argparse.Namespace) -> ExperimentSpec:
    params = {k: v for k, v in vars(ns).items() if k not in _GLOBAL and v is not None}
    if ns.task == "solve":
        modes = list(params.pop("modes", None) or ["appr"])
        if params.pop("online", False) and "online" not in modes:
            modes.append("online")
        params["modes"] = modes
    if ns.task == "verify":
        params["suites"] = params.pop("suite", None) or list(SUITES)
        if "replicates" not in params:
            params.pop("replicates", None)
    if ns.task == "onl" and "beta" not in params:
        params["beta"] = 0.9 if params.get("method") == "wmastar" else 1.0
    return ExperimentSpec(
        task=ns.task,
        dataset=ns.dataset,
        labels=ns.labels,
        weighted=ns.weighted,
        seed=ns.seed,
        threads=ns.threads,
        out=ns.out,
        params=params,
    )


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if getattr(ns, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if ns.spec:
            spec = ExperimentSpec.loads(Path(ns.spec).read_text(encoding="utf-8"))
        elif ns.task is None:
            parser.print_help()
            return 2
        else:
            spec = spec_from_args(ns)
        return run_experiment(spec)
    except (SubapprError, OSError) as exc:
        print(f"subappr: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
