import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wlsubset.errors import ConfigError, DataError
from wlsubset.hcluster import Merge, cut_at_height, cut_to_k, pairwise_distances, single_linkage

from oracles import cophenetic_bruteforce, mst_edge_weights, single_linkage_recompute
from util import same_partition

LINE = np.array([[0.0], [1.0], [3.0], [7.0]])


def test_line_fixture_heights_and_tree():
    d = single_linkage(pairwise_distances(LINE), ["a", "b", "c", "d"])
    assert d.heights.tolist() == [1.0, 2.0, 4.0]
    assert d.merges == (Merge(0, 1, 1.0, 2), Merge(4, 2, 2.0, 3), Merge(5, 3, 4.0, 4))
    assert d.members(6) == [0, 1, 2, 3]


def test_line_fixture_cuts():
    d = single_linkage(pairwise_distances(LINE))
    cut = cut_to_k(d, 2)
    assert cut.clusters == [[0, 1, 2], [3]]
    assert (cut.height_low, cut.height_high) == (2.0, 4.0)
    for h in (2.0, 3.0, 3.999):
        assert cut_at_height(d, h).clusters == [[0, 1, 2], [3]]
    assert cut_at_height(d, 4.0).clusters == [[0, 1, 2, 3]]
    assert cut_at_height(d, 0.5).clusters == [[0], [1], [2], [3]]
    assert cut_to_k(d, 4).height_low == 0.0
    assert cut_to_k(d, 1).height_high == float("inf")


def test_cut_argument_errors():
    d = single_linkage(pairwise_distances(LINE))
    with pytest.raises(ConfigError):
        cut_to_k(d, 5)
    with pytest.raises(ConfigError):
        cut_to_k(d, 0)
    with pytest.raises(ConfigError):
        cut_at_height(d, -1.0)


def test_input_validation():
    with pytest.raises(DataError):
        single_linkage(np.zeros((2, 3)))
    with pytest.raises(DataError):
        single_linkage(np.zeros((2, 2)), ["only"])
    with pytest.raises(DataError):
        pairwise_distances(np.zeros((1, 2)))


def test_single_point():
    d = single_linkage(np.zeros((1, 1)))
    assert d.merges == ()
    assert cut_to_k(d, 1).clusters == [[0]]


def test_distances_exactly_symmetric():
    rng = np.random.default_rng(0)
    dist = pairwise_distances(rng.normal(size=(30, 7)))
    assert np.array_equal(dist, dist.T)
    assert np.all(np.diag(dist) == 0)


def _random_points(seed):
    rng = np.random.default_rng(seed)
    R = int(rng.integers(2, 25))
    return rng.normal(size=(R, int(rng.integers(1, 5))))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_agrees_with_recompute_oracle(seed):
    dist = pairwise_distances(_random_points(seed))
    d = single_linkage(dist)
    oracle = single_linkage_recompute(dist)
    assert d.heights.tolist() == [h for h, _, _ in oracle]
    for m, (_, left, right) in zip(d.merges, oracle):
        assert set(d.members(m.left)) == left
        assert set(d.members(m.right)) == right


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_heights_are_mst_edges(seed):
    dist = pairwise_distances(_random_points(seed))
    assert single_linkage(dist).heights.tolist() == mst_edge_weights(dist)


def test_ties_follow_smallest_pair_rule():
    # all six pairs at distance 1 (regular simplex); merges go (0,1), then {0,1}+2, then +3
    d = single_linkage(np.ones((4, 4)) - np.eye(4))
    assert [(m.left, m.right) for m in d.merges] == [(0, 1), (4, 2), (5, 3)]
    assert single_linkage_recompute(np.ones((4, 4)) - np.eye(4))[1][1:] == (
        frozenset({0, 1}), frozenset({2}))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cophenetic_and_refinement(seed):
    dist = pairwise_distances(_random_points(seed))
    d = single_linkage(dist)
    oracle = single_linkage_recompute(dist)
    coph = d.cophenetic()
    R = d.n_leaves
    for a in range(R):
        for b in range(a + 1, R):
            assert coph[a, b] == cophenetic_bruteforce(oracle, a, b)
    # the cut into k+1 clusters refines the cut into k clusters
    for k in range(1, R):
        coarse, fine = cut_to_k(d, k).labels, cut_to_k(d, k + 1).labels
        for c in set(fine):
            assert len(set(coarse[fine == c])) == 1
        cut = cut_to_k(d, k)
        assert len(cut.clusters) == k
        if cut.height_low < cut.height_high:
            assert same_partition(cut_at_height(d, cut.height_low).labels, cut.labels)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_row_permutation_gives_isomorphic_tree(seed):
    x = _random_points(seed)
    perm = np.random.default_rng(seed).permutation(len(x))
    a = single_linkage(pairwise_distances(x))
    b = single_linkage(pairwise_distances(x[perm]))
    assert np.array_equal(a.heights, b.heights)
    # cophenetic distances are a tree invariant
    assert np.array_equal(a.cophenetic()[np.ix_(perm, perm)], b.cophenetic())
