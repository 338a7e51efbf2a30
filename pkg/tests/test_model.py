import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from featnet import (DomainError, ExpClipped, FeatureAssignment, FeatureGraph,
                     InteractionMatrix, Sigmoid, Step, activate, column_normalize,
                     link_probability, row_normalize, score)
from featnet.model import score_weighted


def _binary(n, m):
    return hnp.arrays(np.int8, (n, m), elements=st.integers(0, 1))


# --------------------------------------------------------------------------
# score


def test_score_identity_counts_shared_features():
    w = InteractionMatrix.from_dense(np.eye(4))
    assert score([0, 1], [1, 2], w) == 1.0


def test_score_zero_matrix():
    w = InteractionMatrix.zeros(5)
    assert score([0, 3, 4], [1, 2], w) == 0.0


def test_score_single_entry():
    w = InteractionMatrix.zeros(3)
    w[0, 1] = 2.5
    assert score([0], [1], w) == 2.5


def test_score_rejects_out_of_range():
    w = InteractionMatrix.zeros(3)
    with pytest.raises(DomainError):
        score([0], [3], w)


@given(z=_binary(6, 5))
def test_homophily_score_is_intersection_size(z):
    w = InteractionMatrix.from_dense(np.eye(5))
    fa = FeatureAssignment.from_dense(z)
    for i in range(6):
        for j in range(6):
            shared = int((z[i] & z[j]).sum())
            assert score(fa.features_of(i), fa.features_of(j), w) == shared


@given(w1=hnp.arrays(np.float64, (4, 4), elements=st.integers(-20, 20)),
       w2=hnp.arrays(np.float64, (4, 4), elements=st.integers(-20, 20)),
       a=st.integers(-5, 5), b=st.integers(-5, 5),
       fi=st.sets(st.integers(0, 3)), fj=st.sets(st.integers(0, 3)))
def test_score_is_bilinear(w1, w2, a, b, fi, fj):
    # integer-valued data keeps the comparison exact
    fi, fj = sorted(fi), sorted(fj)
    lhs = score(fi, fj, InteractionMatrix.from_dense(a * w1 + b * w2))
    rhs = (a * score(fi, fj, InteractionMatrix.from_dense(w1))
           + b * score(fi, fj, InteractionMatrix.from_dense(w2)))
    assert lhs == rhs


def test_score_weighted_examples():
    w = InteractionMatrix.zeros(3)
    w[0, 1] = 4.0
    assert score_weighted([(0, 0.5)], [(1, 0.5)], w) == 1.0
    assert score_weighted([], [(1, 1.0)], w) == 0.0


@given(z=_binary(4, 4), w=hnp.arrays(np.float64, (4, 4), elements=st.integers(-9, 9)))
def test_score_weighted_unit_weights_match_score(z, w):
    fa = FeatureAssignment.from_dense(z)
    mat = InteractionMatrix.from_dense(w)
    for i in range(4):
        for j in range(4):
            fi, fj = fa.features_of(i), fa.features_of(j)
            unit_i = [(h, 1.0) for h in fi.tolist()]
            unit_j = [(k, 1.0) for k in fj.tolist()]
            assert score_weighted(unit_i, unit_j, mat) == score(fi, fj, mat)


# --------------------------------------------------------------------------
# activations


@pytest.mark.parametrize("spec,x,expected", [
    (Sigmoid(0.0, 5.0), 0.0, 0.5),
    (Step(0.0), 0.0, 0.0),
    (Step(0.0), 1e-12, 1.0),
    (ExpClipped(), math.log(0.5), 0.5),
    (ExpClipped(), 1.0, 1.0),
    (ExpClipped(), 0.0, 1.0),
])
def test_activation_values(spec, x, expected):
    assert activate(spec, x) == pytest.approx(expected, abs=1e-15)


def test_sigmoid_closed_form():
    for x in (-3.0, -0.2, 0.7, 4.0):
        assert activate(Sigmoid(0.5, 2.0), x) == pytest.approx(
            1.0 / (math.exp(2.0 * (0.5 - x)) + 1.0), rel=1e-13)


def test_sigmoid_needs_positive_steepness():
    with pytest.raises(DomainError):
        Sigmoid(0.0, 0.0)


SPECS = [Sigmoid(0.0, 5.0), Sigmoid(-1.5, 0.3), Sigmoid(2.0, 1e3), Step(0.0),
         Step(-2.0), ExpClipped()]


@pytest.mark.parametrize("spec", SPECS, ids=repr)
@given(xs=st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=30))
def test_activation_monotone_in_unit_interval(spec, xs):
    xs = np.sort(np.array(xs))
    p = activate(spec, xs)
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(np.diff(p) >= 0)


@given(theta=st.floats(-5, 5), gap=st.floats(0.01, 50), side=st.sampled_from([-1, 1]))
def test_steep_sigmoid_approaches_step(theta, gap, side):
    x = theta + side * gap
    assert abs(activate(Sigmoid(theta, 1e3), x) - activate(Step(theta), x)) < 1e-3


# --------------------------------------------------------------------------
# link probability


def test_identity_construction_reproduces_arcs(rng):
    for n in (1, 7, 50):
        a = (rng.random((n, n)) < 0.3).astype(float)
        z = FeatureAssignment.identity(n)
        w = InteractionMatrix.from_dense(a)
        probs = np.array([[link_probability(i, j, z, w, Step(0.0)) for j in range(n)]
                          for i in range(n)])
        assert np.array_equal(probs, a)


def test_empty_feature_set_sits_at_sigmoid_center():
    z = FeatureAssignment.from_lists([[], [0]], m=1)
    w = InteractionMatrix.from_dense(np.array([[3.0]]))
    assert link_probability(0, 1, z, w, Sigmoid(0.0, 5.0)) == 0.5


def test_zero_matrix_with_exp_links_everything():
    z = FeatureAssignment.from_lists([[0], [1, 2], []], m=3)
    w = InteractionMatrix.zeros(3)
    for i in range(3):
        for j in range(3):
            assert link_probability(i, j, z, w, ExpClipped()) == 1.0


def test_link_probability_range_check():
    z = FeatureAssignment.identity(2)
    with pytest.raises(DomainError):
        link_probability(0, 2, z, InteractionMatrix.zeros(2), Step())


# --------------------------------------------------------------------------
# normalization


@pytest.mark.parametrize("p,expected", [(1, 0.25), (2, 0.5), (4, 4 ** -0.25)])
def test_column_normalize_four_owners(p, expected):
    z = FeatureAssignment.from_lists([[0], [0, 1], [0], [0]])
    wa = column_normalize(z, p)
    assert dict(wa.entries(1)) == pytest.approx({0: expected, 1: 1.0})


@pytest.mark.parametrize("p,expected", [(1, 0.25), (2, 0.5)])
def test_row_normalize_four_features(p, expected):
    z = FeatureAssignment.from_lists([[0, 1, 2, 3], [2]])
    wa = row_normalize(z, p)
    assert [x for _, x in wa.entries(0)] == pytest.approx([expected] * 4)
    assert wa.entries(1) == [(2, 1.0)]


def test_normalize_rejects_small_p():
    with pytest.raises(DomainError):
        row_normalize(FeatureAssignment.identity(2), 0.5)


@given(z=_binary(7, 6), p=st.floats(1, 8))
def test_normalization_preserves_support(z, p):
    fa = FeatureAssignment.from_dense(z)
    for norm in (row_normalize, column_normalize):
        wa = norm(fa, p)
        support = np.zeros_like(z)
        for i in range(7):
            for h, x in wa.entries(i):
                assert np.isfinite(x) and x > 0
                support[i, h] = 1
        assert np.array_equal(support, z)


def test_column_normalized_unit_columns_for_p1():
    z = FeatureAssignment.from_lists([[0, 1], [1], [1, 2]])
    dense = np.zeros((3, 3))
    wa = column_normalize(z, 1)
    for i in range(3):
        for h, x in wa.entries(i):
            dense[i, h] = x
    assert np.allclose(dense.sum(axis=0), 1.0)


# --------------------------------------------------------------------------
# containers


@given(arcs=st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), max_size=60))
def test_graph_arcs_match_adjacency(arcs):
    src = np.array([a for a, _ in arcs], dtype=np.int64)
    dst = np.array([b for _, b in arcs], dtype=np.int64)
    g, dupes = FeatureGraph.from_arcs_counted(10, src, dst)
    assert g.arc_set() == set(arcs)
    assert dupes == len(arcs) - len(set(arcs))
    for i in range(10):
        row = g.out_adj(i)
        assert np.all(np.diff(row) > 0)
        assert set(row.tolist()) == {b for a, b in arcs if a == i}
    probe_s, probe_d = np.meshgrid(np.arange(10), np.arange(10), indexing="ij")
    hits = g.has_arcs(probe_s.ravel(), probe_d.ravel())
    assert set(zip(probe_s.ravel()[hits].tolist(), probe_d.ravel()[hits].tolist())) == set(arcs)


def test_self_loops_allowed():
    g = FeatureGraph.from_arcs(2, np.array([0, 1]), np.array([0, 1]))
    assert g.has_arc(0, 0) and g.has_arc(1, 1)


def test_graph_rejects_out_of_range_ids():
    with pytest.raises(DomainError):
        FeatureGraph.from_arcs(2, np.array([0]), np.array([2]))


@given(z=_binary(8, 5))
def test_owners_are_transpose_of_features(z):
    fa = FeatureAssignment.from_dense(z)
    for k in range(5):
        assert fa.owners_of(k).tolist() == np.flatnonzero(z[:, k]).tolist()
    for i in range(8):
        assert fa.features_of(i).tolist() == np.flatnonzero(z[i]).tolist()
    assert np.array_equal(fa.owner_counts(), z.sum(axis=0))
    assert np.array_equal(fa.to_dense(), z)


def test_assignment_deduplicates_pairs():
    fa, dupes = FeatureAssignment.from_pairs_counted(2, 2, np.array([0, 0, 1]),
                                                     np.array([1, 1, 0]))
    assert dupes == 1
    assert fa.nnz == 2


def test_induced_subgraph_reindexes():
    g = FeatureGraph.from_arcs(4, np.array([0, 1, 2, 3]), np.array([1, 2, 3, 0]))
    sub = g.induced([1, 2, 3])
    assert sub.arc_set() == {(0, 1), (1, 2)}


@pytest.mark.parametrize("storage", ["dense", "sparse"])
def test_matrix_storage_semantics(storage):
    w = InteractionMatrix.zeros(50, storage=storage)
    assert w.storage == storage
    w[3, 7] = -0.5
    w.add(3, 7, 0.25)
    w.add(49, 0, 2.0)
    assert w[3, 7] == -0.25 and w[49, 0] == 2.0 and w[0, 0] == 0.0
    h, k, v = w.entries()
    assert list(zip(h.tolist(), k.tolist(), v.tolist())) == [(3, 7, -0.25), (49, 0, 2.0)]
    with pytest.raises(DomainError):
        w[50, 0]


@given(entries=st.dictionaries(st.tuples(st.integers(0, 39), st.integers(0, 39)),
                               st.floats(-1e3, 1e3).filter(lambda x: x != 0),
                               max_size=300))
def test_sparse_matches_dense(entries):
    h = np.array([a for a, _ in entries], dtype=np.int64)
    k = np.array([b for _, b in entries], dtype=np.int64)
    v = np.array(list(entries.values()))
    sp = InteractionMatrix.from_entries(40, h, k, v, storage="sparse")
    de = InteractionMatrix.from_entries(40, h, k, v, storage="dense")
    assert np.array_equal(sp.to_dense(), de.to_dense())
    assert sp == de
    assert sp.frobenius_sq() == pytest.approx(de.frobenius_sq())


def test_sparse_fill_value_reads_back():
    w = InteractionMatrix.zeros(10, fill=-50.0, storage="sparse")
    w[1, 2] = 0.0
    assert w[0, 0] == -50.0 and w[1, 2] == 0.0
    assert w.frobenius_sq() == pytest.approx(99 * 2500.0)
