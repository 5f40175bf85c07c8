import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import subappr.oracle as oracle
from subappr.appr import ApprParams, appr_solve, seed_rhs
from subappr.errors import SizeError, ValidationError
from subappr.graph import to_dense
from subappr.random_appr import SamplerConfig, random_appr
from subappr.testing import complete, edgeless, path, star


# ----------------------------------------------------------------------
# dense solve


def test_dense_solve_examples():
    params = ApprParams(0.5, 1e-6)
    g = path(3)
    assert np.all(oracle.dense_solve(g, np.zeros(3), params) == 0.0)
    b = to_dense(seed_rhs(g, 1, 0.5), 3)
    x = oracle.dense_solve(g, b, params)
    assert x[1] > x[0] == pytest.approx(x[2]) and x[0] > 0
    q = oracle.dense_q(g, 0.5)
    assert np.abs(q @ x - b).max() <= 1e-10 * np.abs(b).max()
    # exact rational solution (1/8, 3 sqrt 2 / 8, 1/8)
    np.testing.assert_allclose(x, [1 / 8, 3 * math.sqrt(2) / 8, 1 / 8], rtol=1e-14)


def test_dense_solve_identity_and_guards():
    g = edgeless(3)
    b = np.array([0.5, -1.0, 2.0])
    np.testing.assert_array_equal(oracle.dense_solve(g, b, ApprParams(0.3, 1e-3)), b)
    with pytest.raises(SizeError):
        oracle.dense_q(path(10), 0.5, cap=5)
    with pytest.raises(ValidationError):
        oracle.dense_solve(path(3), np.zeros(2), ApprParams(0.3, 1e-3))


# ----------------------------------------------------------------------
# Bernoulli constant


def test_bernoulli_constant_examples():
    assert oracle.bernoulli_subgauss_constant(1 - 1e-9) == 0.25
    assert oracle.bernoulli_subgauss_constant(1.0) == 0.25
    # S1(1/e) = (2 - 1/e)^2 / 4
    s1 = (2 - 1 / math.e) ** 2 / 4
    assert s1 == pytest.approx(0.6659543796377109, abs=1e-15)
    assert oracle.bernoulli_subgauss_constant(1 / math.e) == 0.25
    assert oracle.bernoulli_subgauss_constant(0.001) == pytest.approx(0.14462009866498968, rel=1e-14)
    with pytest.raises(ValidationError):
        oracle.bernoulli_subgauss_constant(0.0)


@given(st.floats(1e-300, 1.0))
def test_bernoulli_constant_at_most_quarter(p):
    assert 0 < oracle.bernoulli_subgauss_constant(p) <= 0.25


def test_bernoulli_constant_continuous_away_from_crossover():
    for p in np.linspace(1e-4, 0.999, 2000):
        a = oracle.bernoulli_subgauss_constant(p)
        b = oracle.bernoulli_subgauss_constant(p * (1 + 1e-8))
        assert abs(a - b) < 1e-7


# ----------------------------------------------------------------------
# sampler enumeration


def test_enumeration_examples():
    outs = oracle.enumerate_sampler_outcomes({0: 1.0, 1: 2.0}, SamplerConfig(2))
    assert outs == [({0: 1.0, 1: 2.0}, 1.0)]
    outs = oracle.enumerate_sampler_outcomes({0: 1.0, 1: 1.0}, SamplerConfig(1))
    assert sorted((sorted(v.items()), p) for v, p in outs) == [([(0, 2.0)], 0.5), ([(1, 2.0)], 0.5)]
    outs = oracle.enumerate_sampler_outcomes({0: 1.0, 1: 2.0, 2: 3.0}, SamplerConfig(2))
    assert len(outs) == 3 and all(p == pytest.approx(1 / 3) for _, p in outs)
    assert oracle.outcome_mean(outs) == pytest.approx({0: 1.0, 1: 2.0, 2: 3.0}, abs=1e-12)


def test_enumeration_guard():
    with pytest.raises(ValidationError):
        oracle.enumerate_sampler_outcomes({i: 1.0 for i in range(13)}, SamplerConfig(2))
    with pytest.raises(ValidationError):
        oracle.enumerate_sampler_outcomes({}, SamplerConfig(2))


def test_systematic_law_matches_monte_carlo():
    from subappr.random_appr import inclusion_probabilities, systematic_select

    p = inclusion_probabilities(np.array([1.0, 2.0, 3.0, 5.0]), 2)
    law = oracle._systematic_outcomes(p, 2)
    rng = np.random.default_rng(0)
    counts: dict = {}
    trials = 20000
    for _ in range(trials):
        key = frozenset(systematic_select(p, rng.random()).tolist())
        counts[key] = counts.get(key, 0) + 1
    for key, prob in law.items():
        se = math.sqrt(prob * (1 - prob) / trials)
        assert abs(counts.get(key, 0) / trials - prob) <= 4 * se + 1e-12


# ----------------------------------------------------------------------
# offline concentration


def test_offline_check_without_randomness():
    g = complete(5)
    rep = oracle.offline_concentration_check(g, 10, np.ones(5), 1000, [0.0, 0.1, 1.0], seed=0)
    assert rep.empirical[1:] == [0.0, 0.0]
    assert rep.passed


def test_offline_check_s3():
    rep = oracle.offline_concentration_check(star(3), 1, np.array([1.0, 1.0, 0, 0]), 10000, [0.5, 1, 2], seed=0)
    assert rep.passed
    assert abs(rep.mean_deviation) <= 0.05
    assert oracle.concentration_bound(0.0, 1, 3, 1, 6) == 1.0
    with pytest.raises(ValidationError):
        oracle.offline_concentration_check(star(3), 1, np.ones(4), 10, [1.0], seed=0)


def test_epsilon_for_bound_inverts_bound():
    eps = oracle.epsilon_for_bound(0.1, 2, 7, 1.5, 20)
    assert oracle.concentration_bound(eps, 2, 7, 1.5, 20) == pytest.approx(0.1)


def test_sparsified_deviation_matches_sparsifier():
    from subappr.sparsify import Influencer, quadratic_form_deviation, sparsify_offline
    from subappr.testing import power_law

    g = power_law(80, 4, 2.5, seed=2)
    x = np.random.default_rng(1).normal(size=g.n)
    devs = oracle.sparsified_deviations(g, 3, x, 5, seed=10)
    for r in range(5):
        h = sparsify_offline(g, Influencer(3), 10 + r)
        assert devs[r] == pytest.approx(quadratic_form_deviation(g, h, x, 1.0), abs=1e-9)


# ----------------------------------------------------------------------
# gradient traces and diagnostics


def test_gradient_trace_endpoints():
    g = path(3)
    params = ApprParams(0.5, 1e-8)
    b = to_dense(seed_rhs(g, 1, 0.5), 3)
    xs = oracle.dense_seed_solution(g, 1, params)
    _, vals, _ = oracle.gradient_norm_trace([(0, {}), (1, dict(enumerate(xs)))], g, params, b)
    assert vals[0] == pytest.approx(b @ b)
    assert vals[1] == pytest.approx(0.0, abs=1e-25)


def test_gradient_trace_p3_strictly_decreasing():
    g = path(3)
    params = ApprParams(0.5, 1e-8)
    b = to_dense(seed_rhs(g, 1, 0.5), 3)
    cps = [(0, {})]
    appr_solve(g, 1, params, callback=lambda st, u: cps.append((st.push_count, dict(st.x))))
    _, vals, run = oracle.gradient_norm_trace(cps, g, params, b)
    assert all(a > c for a, c in zip(run, run[1:]))


def test_diagnostics_deterministic_runs_have_zero_sigma():
    g = star(3)
    params = ApprParams(0.5, 1e-4)
    cfg = SamplerConfig(3)
    runs = [random_appr(g, 0, params, SamplerConfig(3, rng_seed=r), record_noise=True) for r in range(30)]
    d = oracle.estimate_diagnostics(runs, g, cfg)
    assert d.sigma_max_hat == 0.0
    assert all(r <= 1.0 for r in d.r_hat)
    assert all(a <= b for a, b in zip(d.r_hat, d.r_hat[1:]))
    with pytest.raises(ValidationError):
        oracle.estimate_diagnostics(runs[:5], g, cfg)


def test_diagnostics_analytic_bound_dominates_s3():
    g = star(3)
    params = ApprParams(0.5, 1e-4)
    cfg = SamplerConfig(1)
    runs = [
        random_appr(g, 0, params, SamplerConfig(1, rng_seed=r), correction_period=None, record_noise=True)
        for r in range(1000)
    ]
    s = int(np.count_nonzero(oracle.dense_seed_solution(g, 0, params)))
    d = oracle.estimate_diagnostics(runs, g, cfg, support_size=s)
    assert d.sigma_max_hat > 0
    assert all(v <= d.sigma_ti_bound for v in d.sigma_ti_hat.values())
    assert all(v <= d.sigma_t_bound for v in d.sigma_t_hat.values())


# ----------------------------------------------------------------------
# suites at reduced size


def test_small_suites_pass():
    for rep in (
        oracle.invariant_suite(runs=10, n_max=60),
        oracle.equivalence_suite(graphs=5, n_max=60),
        oracle.degeneracy_suite(graphs=3, n_max=60),
        oracle.sampler_suite(max_support=6),
    ):
        assert rep.passed, rep.to_dict()
        assert rep.cases > 0


def test_early_stopping_small():
    g = star(6)
    rep = oracle.early_stopping_check(g, 0, ApprParams(0.3, 1e-3), SamplerConfig(2), 0.9, 100)
    assert rep.passed
    assert rep.cells_checked > 0


def test_named_graphs_and_median_qbar():
    graphs = oracle.test_graphs()
    assert set(graphs) >= {"S3", "P3", "barbell-4", "power-law-500"}
    g, hub = graphs["power-law-500"]
    assert hub == int(np.argmax(g.degrees))
    assert oracle.median_qbar(g) >= 1
