import csv
import json

import pytest

import subappr.oracle as oracle
from subappr.cli import ExperimentSpec, builtin_graph, fmt, main
from subappr.errors import ValidationError


def run(tmp_path, *args, out="out"):
    target = tmp_path / out
    code = main([*args, "--out", str(target)])
    return code, target


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ----------------------------------------------------------------------
# spec and helpers


def test_spec_round_trip():
    spec = ExperimentSpec(
        "solve", dataset="builtin:star:5", seed=7, threads=2, out="o",
        params={"modes": ["appr", "online"], "alpha": 0.15, "eps_grid": [0.01, 0.001]},
    )
    text = spec.dumps()
    assert text.startswith("schema_version = 1\n")
    assert ExperimentSpec.loads(text) == spec


def test_spec_errors():
    with pytest.raises(ValidationError):
        ExperimentSpec("bogus")
    with pytest.raises(ValidationError):
        ExperimentSpec.loads("task = \"stats\"\nnot a pair\n")
    with pytest.raises(ValidationError):
        ExperimentSpec.loads("schema_version = 99\ntask = \"stats\"\n")


def test_builtin_graphs_and_fmt():
    g, lab = builtin_graph("barbell:3")
    assert g.n == 6 and lab is not None
    g, lab = builtin_graph("star:4")
    assert g.n == 5 and lab is None
    with pytest.raises(ValidationError):
        builtin_graph("nope")
    assert fmt(0.1) == "0.1"
    assert float(fmt(1 / 3)) == 1 / 3


# ----------------------------------------------------------------------
# subcommands


def test_stats(tmp_path):
    (tmp_path / "g.txt").write_text("0 1\n1 2\n")
    code, out = run(tmp_path, "stats", "--dataset", str(tmp_path / "g.txt"))
    assert code == 0
    row = read_csv(out / "stats.csv")[0]
    assert (row["n"], row["m"]) == ("3", "2")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["schema_version"] == 1
    assert (out / "spec.toml").exists() and (out / "degree_histogram.csv").exists()


def test_sparsify(tmp_path):
    code, out = run(tmp_path, "sparsify", "--dataset", "builtin:powerlaw:200:4:2.5:1", "--qbar", "3")
    assert code == 0
    assert (out / "sparsified.edges").exists()
    info = json.loads((out / "sparsified.json").read_text())
    assert info["original_edges"] > info["kept_edges"] > 0
    assert info["edge_ratio_before"] is None  # no labels on this input
    edges = (out / "sparsified.edges").read_text().splitlines()
    assert len([ln for ln in edges if ln and not ln.startswith("#")]) == info["kept_edges"]


def test_sparsify_with_labels_reports_edge_ratio(tmp_path):
    code, out = run(tmp_path, "sparsify", "--dataset", "builtin:planted:200:2:0.1:0.01:0", "--qbar", "3")
    assert code == 0
    info = json.loads((out / "sparsified.json").read_text())
    assert info["edge_ratio_before"] > 0


def test_solve_sweep_monotone_and_reproducible(tmp_path):
    args = ["solve", "--dataset", "builtin:powerlaw:300:4:2.5:1", "--modes", "appr,online,offline",
            "--qbar-mult", "2", "--eps-grid", "1e-2,1e-3,1e-4", "--seeds", "0"]
    code, a = run(tmp_path, *args, out="a")
    assert code == 0
    code, b = run(tmp_path, *args, "--threads", "2", out="b")
    assert code == 0
    assert (a / "solve.csv").read_bytes() == (b / "solve.csv").read_bytes()
    rows = read_csv(a / "solve.csv")
    assert {r["mode"] for r in rows} == {"appr", "online", "offline"}
    appr = sorted((float(r["epsilon"]), int(r["nodes_queried"])) for r in rows if r["mode"] == "appr")
    queried = [q for _, q in appr]
    assert queried == sorted(queried, reverse=True)
    summary = json.loads((a / "solve.json").read_text())
    assert summary["nodes_queried_nonincreasing_in_epsilon"]


def test_solve_single_node(tmp_path):
    code, out = run(tmp_path, "solve", "--dataset", "builtin:path:3", "--seed-node", "1", "--epsilon", "1e-8",
                    "--alpha", "0.5")
    assert code == 0
    lines = (out / "x.txt").read_text().split("\n")
    vals = {int(a): float(b) for a, b in (ln.split() for ln in lines if ln and not ln.startswith("#"))}
    assert vals[1] == pytest.approx(0.5303300858899106, abs=1e-7)
    assert not (out / "epochs.csv").exists()
    footer = json.loads((out / "solve.json").read_text())
    assert footer["residual_linf"] < 1e-8


def test_solve_single_node_online_epochs(tmp_path):
    code, out = run(tmp_path, "solve", "--dataset", "builtin:powerlaw:200:4:2.5:1", "--seed-node", "0",
                    "--online", "--qbar", "2", "--trials", "2")
    assert code == 0
    rows = read_csv(out / "epochs.csv")
    assert {r["trial"] for r in rows} == {"0", "1"}
    assert {"epoch", "pushes", "l1_residual_exact", "l2_residual_exact", "support_x"} <= set(rows[0])


def test_spec_rerun_is_byte_identical(tmp_path):
    code, a = run(tmp_path, "solve", "--dataset", "builtin:powerlaw:200:4:2.5:1", "--online", "--qbar", "2",
                  "--eps-grid", "1e-2,1e-3", out="a")
    assert code == 0
    spec = ExperimentSpec.loads((a / "spec.toml").read_text())
    spec.out = str(tmp_path / "b")
    (tmp_path / "b.toml").write_text(spec.dumps())
    assert main(["--spec", str(tmp_path / "b.toml")]) == 0
    assert (a / "solve.csv").read_bytes() == (tmp_path / "b" / "solve.csv").read_bytes()


@pytest.mark.parametrize("method", ["relax", "reg", "wma", "wmastar"])
def test_onl(tmp_path, method):
    code, out = run(tmp_path, "onl", "--dataset", "builtin:barbell:4", "--method", method,
                    "--order", "shuffled:3", "--argmax")
    assert code == 0
    rows = read_csv(out / "onl.csv")
    assert len(rows) == 8
    assert {"t", "prediction", "truth", "cumulative_mistakes"} <= set(rows[0])
    summary = json.loads((out / "onl.json").read_text())
    assert {"mistake_rate", "regret_bound", "nodes_queried"} <= set(summary)


def test_cluster(tmp_path):
    code, out = run(tmp_path, "cluster", "--dataset", "builtin:barbell:3", "--solver", "appr", "--eps", "1e-8")
    assert code == 0
    summary = json.loads((out / "cluster.json").read_text())
    assert summary["score"] == 1.0
    assert summary["unreached_count"] == 0
    assert summary["nodes_queried"] > 0
    assert len(read_csv(out / "clusters.csv")) == 6


def test_verify_passes_small_suites(tmp_path):
    code, out = run(tmp_path, "verify", "--suite", "lemma1", "--runs", "5", "--suite", "sampler", "--max-support", "5")
    assert code == 0
    rep = json.loads((out / "verify_sampler.json").read_text())
    assert rep["passed"] is True


def test_verify_exit_code_on_failure(tmp_path, monkeypatch):
    monkeypatch.setattr(oracle, "sampler_suite", lambda *a, **k: oracle.SuiteReport("sampler", 1, ["broken"], {}))
    code, out = run(tmp_path, "verify", "--suite", "sampler")
    assert code == 1
    assert json.loads((out / "verify_sampler.json").read_text())["passed"] is False


def test_failure_removes_partial_outputs(tmp_path):
    # the star graph has no labels, so the labeling task fails after spec.toml was written
    code, out = run(tmp_path, "onl", "--dataset", "builtin:star:4")
    assert code == 2
    assert not (out / "spec.toml").exists()


def test_missing_dataset_and_bad_file(tmp_path, capsys):
    code, _ = run(tmp_path, "stats")
    assert code == 2
    (tmp_path / "bad.txt").write_text("0 1\nzz\n")
    code, _ = run(tmp_path, "stats", "--dataset", str(tmp_path / "bad.txt"))
    assert code == 2
    assert "line 2" in capsys.readouterr().err


def test_module_entry_point():
    import subprocess
    import sys

    res = subprocess.run([sys.executable, "-m", "subappr", "--help"], capture_output=True, text=True)
    assert res.returncode == 0
    for task in ("stats", "sparsify", "solve", "onl", "cluster", "verify"):
        assert task in res.stdout
