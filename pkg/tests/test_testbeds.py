import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rwkplus.errors import DomainError
from rwkplus.graph import AttributedGraph
from rwkplus.learn import HiddenGraph
from rwkplus.testbeds import (
    P1,
    P2,
    GroundTruthPattern,
    TestbedSpec,
    binarize_hidden,
    butterfly,
    complete_bipartite,
    ged_eval,
    generate,
    graph_to_dot,
    ground_truth,
    is_isomorphic,
    matching_accuracy,
    normalized_learned_graph,
    paired_ttest,
    regular2_labeled,
    regular3,
    ring,
    star,
    tailed_triangle,
    triangle,
    triangle_chain,
)

from conftest import labeled_graphs


def permuted(g, perm):
    return AttributedGraph(g.adjacency[np.ix_(perm, perm)], g.features[perm], g.label_names)


def planted(pattern, label_columns, d=None, sharp=8.0):
    """Hidden graph whose realization is exactly ``pattern`` after binarization."""
    m = pattern.n
    d = d or pattern.d
    raw_adj = np.where(pattern.adjacency > 0, sharp, -sharp)
    raw_feat = np.full((m, d), -sharp)
    raw_feat[np.arange(m), pattern.labels()] = sharp
    return HiddenGraph(raw_adj, raw_feat, "softmax")


# ---------------------------------------------------------------- fixtures


def test_fixture_shapes():
    assert butterfly().num_edges == 4 and star(0).num_edges == 3
    assert tailed_triangle().num_edges == 4
    assert ring().num_edges == 6
    deg3 = (regular3().adjacency > 0).sum(axis=1)
    np.testing.assert_array_equal(deg3, 3)
    deg2 = (regular2_labeled().adjacency > 0).sum(axis=1)
    np.testing.assert_array_equal(deg2, 2)
    assert not is_isomorphic(star(0), star(1))


def test_regular2_has_no_symmetry():
    g = regular2_labeled()
    autos = [p for p in itertools.permutations(range(6)) if permuted(g, list(p)) == g]
    assert len(autos) == 1


def test_complete_bipartite():
    g = complete_bipartite(2, 3)
    assert g.n == 5 and g.num_edges == 6
    np.testing.assert_array_equal(g.labels(), [0, 0, 1, 1, 1])


def test_triangle_chain_shared_and_bridge():
    shared = triangle_chain([True, True, False])
    # two P1 triangles share a red vertex, the P2 triangle hangs on a bridge
    assert shared.n == 3 + 2 + 3
    assert shared.num_edges == 3 + 3 + 1 + 3
    bridge = triangle_chain([True, True, False], join="bridge")
    assert bridge.n == 9 and bridge.num_edges == 9 + 2
    labels = triangle_chain([False]).labels().tolist()
    assert sorted(labels) == sorted(P2)


@pytest.mark.parametrize("kind", ["bipartite", "triangle-chain", "tailed-triangle", "ring", "regular3", "regular2-labeled"])
def test_generate_is_seeded(kind):
    a, truth = generate(TestbedSpec(kind, count=10, seed=3))
    b, _ = generate(TestbedSpec(kind, count=10, seed=3))
    assert a == b and len(a) == 10
    assert a.d == truth.patterns[0].d


def test_bipartite_sizes_in_range():
    db, _ = generate(TestbedSpec("bipartite", count=50, seed=1))
    assert all(10 <= g.n <= 14 for g in db)
    db2, _ = generate(TestbedSpec("bipartite", count=50, seed=2))
    assert db != db2


def test_chain_contains_both_patterns_often():
    db, truth = generate(TestbedSpec("triangle-chain", count=100, seed=0))
    assert all(3 <= g.n for g in db)
    colors = [set(g.labels().tolist()) for g in db]
    assert sum(c == {0, 1, 2, 3} for c in colors) > 30


def test_spec_validation():
    with pytest.raises(ValueError):
        TestbedSpec("hexagon")
    with pytest.raises(DomainError):
        TestbedSpec("bipartite", count=0)
    with pytest.raises(DomainError):
        TestbedSpec("bipartite", side_range=(3, 2))
    with pytest.raises(DomainError):
        TestbedSpec("triangle-chain", join="glue")


# ------------------------------------------------------------- isomorphism


@given(labeled_graphs(max_n=6), st.integers(0, 1000))
def test_isomorphic_to_any_relabeling(g, seed):
    perm = np.random.default_rng(seed).permutation(g.n)
    assert is_isomorphic(g, permuted(g, perm))


def test_isomorphism_respects_colors():
    assert not is_isomorphic(triangle(P1), triangle(P2))
    assert is_isomorphic(triangle((0, 1, 0)), triangle((1, 0, 0)))


# ------------------------------------------------------------ binarization


def test_binarize_keeps_heaviest_edges():
    raw = np.array([[0, 3, -1, 2], [3, 0, 1, -5], [-1, 1, 0, 0], [2, -5, 0, 0]], dtype=float)
    h = HiddenGraph(raw, np.eye(4)[:, :2] * 5, "softmax")
    g = binarize_hidden(h, 2, 2)
    np.testing.assert_array_equal(g.edges, [[0, 1], [0, 3]])
    assert g.label_names == ("red", "blue")
    ties = HiddenGraph(np.zeros((3, 3)), np.zeros((3, 1)), "softmax")
    np.testing.assert_array_equal(binarize_hidden(ties, 2).edges, [[0, 1], [0, 2]])
    with pytest.raises(DomainError):
        binarize_hidden(h, 7)


def test_normalized_learned_graph_min_max():
    h = HiddenGraph(np.array([[0, 0, 2], [0, 0, -2], [2, -2, 0]], dtype=float), np.zeros((3, 2)), "softmax")
    g = normalized_learned_graph(h, 2)
    w = g.adjacency[np.triu_indices(3, 1)]
    assert w.min() == 0.0 and w.max() == pytest.approx(1.0)
    const = normalized_learned_graph(HiddenGraph(np.zeros((2, 2)), np.zeros((2, 1)), "softmax"), 1)
    np.testing.assert_allclose(const.adjacency, [[0, 0.5], [0.5, 0]])


# --------------------------------------------------------------- accuracy


def test_planted_patterns_score_100_percent():
    truth = ground_truth("bipartite")
    restarts = [[planted(p, 2)] for p in truth.patterns]
    report = matching_accuracy(restarts, truth)
    np.testing.assert_array_equal(report.matches, np.eye(3, dtype=bool))
    assert report.any == 1.0 and report.joint == 0.0
    chain = ground_truth("triangle-chain")
    both = matching_accuracy([[planted(triangle(P2), 4), planted(triangle(P1), 4)]] * 3, chain)
    assert both.joint == 1.0 and both.per_pattern == {"P1": 1.0, "P2": 1.0}


def test_wrong_colors_do_not_match():
    chain = ground_truth("triangle-chain")
    swapped = triangle((P1[0], P1[2], P2[2]))
    report = matching_accuracy([[planted(swapped, 4)]], chain)
    assert report.any == 0.0


# -------------------------------------------------------------------- GED


def test_ged_of_planted_truth_is_zero():
    for kind in ("tailed-triangle", "ring", "regular2-labeled"):
        truth = ground_truth(kind)
        p = truth.patterns[0]
        rep = ged_eval([planted(p, truth.label_columns)] * 3, p, with_labels=True)
        np.testing.assert_allclose(rep.values, 0.0, atol=1e-6)
        assert rep.std == pytest.approx(0.0, abs=1e-6)


def test_ged_mismatched_sizes():
    with pytest.raises(DomainError):
        ged_eval([planted(butterfly(), 2)], ring(), True)


def test_ged_report_fields():
    truth = tailed_triangle()
    rng = np.random.default_rng(0)
    hs = [HiddenGraph(rng.normal(size=(4, 4)), rng.normal(size=(4, 3)), "softmax") for _ in range(4)]
    rep = ged_eval(hs, truth, True)
    d = rep.to_dict()
    assert d["mean"] == pytest.approx(np.mean(rep.values))
    assert len(d["values"]) == 4
    structure = ged_eval(hs, truth, False)
    assert np.all(structure.values <= rep.values + 1e-12)


# ------------------------------------------------------------------ t-test


def test_paired_ttest():
    a = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    r = paired_ttest(a, a + np.array([1.0, 1.1, 0.9, 1.0, 1.05]))
    assert r.test == "paired" and r.pvalue < 1e-4 and r.statistic < 0
    same = paired_ttest(a, a)
    assert same.pvalue == 1.0
    shifted = paired_ttest(a, a + 1)
    assert shifted.pvalue == 0.0
    w = paired_ttest(np.array([1.0, 1.1, 0.9, 1.0]), np.array([0.0, 10.0, -5.0, 20.0]))
    assert w.test == "welch"
    with pytest.raises(DomainError):
        paired_ttest([1.0], [2.0])


# -------------------------------------------------------------------- DOT


def test_dot_export_of_binarized_butterfly():
    text = graph_to_dot(binarize_hidden(planted(butterfly(), 2), 4, 2), "butterfly")
    assert text.startswith('graph "butterfly" {')
    assert text.count(" -- ") == 4
    assert text.count("fillcolor=red") == 2 and text.count("fillcolor=blue") == 2
    assert "penwidth=5" in text


def test_dot_penwidth_tracks_weight():
    g = AttributedGraph(np.array([[0, 0.25], [0.25, 0]]), np.ones((2, 1)))
    assert "penwidth=2" in graph_to_dot(g)
    assert 'graph "a\\"b"' in graph_to_dot(g, 'a"b')


def test_ground_truth_pattern_len():
    assert len(GroundTruthPattern(("x",), (butterfly(),), 2)) == 1
