import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from subappr.errors import IsolatedNodeError, ParseError, SizeError, ValidationError
from subappr.graph import (
    Graph,
    LabelSet,
    check_dense,
    degree_histogram,
    degree_stats,
    dense_laplacian,
    largest_component,
    laplacian_quadratic,
    load_edge_list,
    load_labels,
    save_id_map,
    transition_column,
    volume,
    write_edge_list,
)
from subappr.testing import (
    barbell,
    complete,
    disjoint_union,
    edgeless,
    erdos_renyi,
    path,
    power_law,
    random_small_graph,
    star,
)


def write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


@st.composite
def graphs(draw, n_max=40, weighted=None):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_small_graph(np.random.default_rng(seed), n_max=n_max, weighted=weighted)


# ----------------------------------------------------------------------
# loading


def test_two_edge_file_is_p3(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n1 2\n"))
    assert (g.n, g.m) == (3, 2)
    np.testing.assert_array_equal(g.degrees, [1.0, 2.0, 1.0])


def test_duplicate_edge_collapses(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n0 1\n"))
    assert g.m == 1


def test_duplicate_keeps_last_weight(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1 2.0\n1 0 5.0\n"), weighted=True)
    assert g.m == 1
    assert g.neighbor_weights(0).tolist() == [5.0]
    assert g.neighbor_weights(1).tolist() == [5.0]


def test_comments_blank_lines_and_self_loops(tmp_path):
    g = load_edge_list(write(tmp_path, "# header\n\n0 1\n2 2\n1 2\n"))
    assert (g.n, g.m) == (3, 2)
    assert 2 not in g.neighbors(2).tolist()


def test_self_loop_only_node_is_kept_isolated(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1\n7 7\n"))
    assert g.n == 3
    assert g.degrees[2] == 0.0
    assert g.node_ids.tolist() == [0, 1, 7]


def test_sparse_ids_are_remapped_in_order(tmp_path):
    g = load_edge_list(write(tmp_path, "100 5\n5 42\n"))
    assert g.node_ids.tolist() == [5, 42, 100]
    assert sorted(g.neighbors(0).tolist()) == [1, 2]
    out = tmp_path / "ids.csv"
    save_id_map(g, out)
    assert out.read_text().splitlines() == ["node,original_id", "0,5", "1,42", "2,100"]


def test_malformed_line_reports_line_number(tmp_path):
    with pytest.raises(ParseError) as err:
        load_edge_list(write(tmp_path, "0 1\n1\n"))
    assert err.value.line == 2
    with pytest.raises(ParseError) as err:
        load_edge_list(write(tmp_path, "0 1\nx 2\n"))
    assert err.value.line == 2


def test_negative_weight_rejected(tmp_path):
    with pytest.raises(ValidationError):
        load_edge_list(write(tmp_path, "0 1 -1.0\n"), weighted=True)


def test_third_column_ignored_when_unweighted(tmp_path):
    g = load_edge_list(write(tmp_path, "0 1 7.5\n"))
    assert g.weights.tolist() == [1.0, 1.0]


def test_round_trip_through_writer(tmp_path):
    g = erdos_renyi(30, 0.2, seed=3, weighted=True)
    out = tmp_path / "w.txt"
    write_edge_list(g, out)
    h = load_edge_list(out, weighted=True)
    np.testing.assert_array_equal(g.indptr, h.indptr)
    np.testing.assert_array_equal(g.indices, h.indices)
    np.testing.assert_array_equal(g.weights, h.weights)


def test_labels_file(tmp_path):
    g = load_edge_list(write(tmp_path, "10 20\n20 30\n"))
    lab = load_labels(write(tmp_path, "10 a\n20 b\n30 a\n", "l.txt"), g)
    assert lab.labels.tolist() == [0, 1, 0]
    assert lab.k == 2
    with pytest.raises(ValidationError):
        load_labels(write(tmp_path, "10 a\n", "l2.txt"), g)


def test_labelset_needs_two_classes():
    with pytest.raises(ValidationError):
        LabelSet(np.zeros(3, dtype=int), 1)
    assert LabelSet.from_values([5, 5, 5]).k == 2


# ----------------------------------------------------------------------
# structure


def test_graph_arrays_are_read_only():
    g = path(4)
    with pytest.raises(ValueError):
        g.weights[0] = 2.0


def test_from_edges_validation():
    with pytest.raises(ValidationError):
        Graph.from_edges(3, [0], [1], [-1.0])
    with pytest.raises(ValidationError):
        Graph.from_edges(2, [0], [5])


def test_transition_column_examples(tmp_path):
    s3 = star(3)
    col = transition_column(s3, 0)
    assert col == pytest.approx({1: 1 / 3, 2: 1 / 3, 3: 1 / 3})
    assert transition_column(s3, 1) == {0: 1.0}
    g = load_edge_list(write(tmp_path, "0 1 2.0\n0 2 1.0\n"), weighted=True)
    assert transition_column(g, 0) == pytest.approx({1: 2 / 3, 2: 1 / 3})


def test_transition_column_isolated_node():
    with pytest.raises(IsolatedNodeError):
        transition_column(edgeless(3), 1)


def test_laplacian_quadratic_examples():
    p3 = path(3)
    assert laplacian_quadratic(p3, np.zeros(3), 0.5) == 0.0
    e = path(2)
    assert laplacian_quadratic(e, np.sqrt(e.degrees), 1.0) == pytest.approx(0.0, abs=1e-15)
    # single-support vector: only the diagonal of L contributes
    assert laplacian_quadratic(p3, np.array([1.0, 0.0, 0.0]), 0.5) == 1.0


def test_degree_stats_star_and_lower_median():
    st3 = degree_stats(star(3))
    assert (st3.avg_degree, st3.median_degree, st3.max_degree) == (1.5, 1.0, 3.0)
    assert st3.m == 3 and st3.nnz == 6
    # degrees (1,2,2,1) sorted (1,1,2,2): lower median is 1
    assert degree_stats(path(4)).median_degree == 1.0


def test_degree_stats_ratios():
    st = degree_stats(star(4))
    assert st.max_over_n == pytest.approx(4 / 5)
    assert st.max_over_avg == pytest.approx(4 / (8 / 5))
    assert degree_histogram(star(4)) == [(1.0, 4), (4.0, 1)]


def test_largest_component_and_dense_guard():
    g = disjoint_union(path(3), complete(4))
    h = largest_component(g)
    assert (h.n, h.m) == (4, 6)
    with pytest.raises(SizeError):
        check_dense(10, cap=5)


def test_dense_laplacian_matches_quadratic():
    g = barbell(3)[0]
    x = np.arange(g.n, dtype=float)
    lap = dense_laplacian(g, 0.7)
    assert x @ lap @ x == pytest.approx(laplacian_quadratic(g, x, 0.7))


def test_power_law_is_connected_and_heavy_tailed():
    g = power_law(500, 4.0, 2.5, seed=1)
    assert largest_component(g).n == g.n
    st = degree_stats(g)
    assert st.max_degree > 10 * st.median_degree


# ----------------------------------------------------------------------
# properties


@given(graphs(weighted=True))
def test_symmetry_round_trip(g):
    for u in range(g.n):
        for v, w in zip(g.neighbors(u).tolist(), g.neighbor_weights(u).tolist()):
            back = g.neighbors(v).tolist()
            assert u in back
            assert g.neighbor_weights(v)[back.index(u)] == w
        assert np.all(np.diff(g.neighbors(u)) > 0)
        assert u not in g.neighbors(u).tolist()


@given(graphs(weighted=True))
def test_degrees_are_row_sums(g):
    for u in range(g.n):
        assert g.degrees[u] == math.fsum(g.neighbor_weights(u))


@given(graphs(), st.data())
def test_volume_additive(g, data):
    nodes = data.draw(st.lists(st.integers(0, g.n - 1), unique=True))
    cut = data.draw(st.integers(0, len(nodes)))
    a, b = nodes[:cut], nodes[cut:]
    assert volume(g, nodes) == pytest.approx(volume(g, a) + volume(g, b))


@given(graphs(weighted=True))
def test_transition_columns_sum_to_one(g):
    for u in range(g.n):
        if g.degrees[u] > 0:
            assert math.fsum(transition_column(g, u).values()) == pytest.approx(1.0, abs=1e-12)


@given(graphs(weighted=True), st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
def test_laplacian_quadratic_lower_bound(g, beta, seed):
    x = np.random.default_rng(seed).normal(size=g.n)
    assert laplacian_quadratic(g, x, beta) >= (1 - beta) * (x @ x) - 1e-9 * (x @ x)
