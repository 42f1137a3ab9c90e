"""
增強 KDE 樹測試
"""

import math

import numpy as np
import pytest

from core.augkde import AugmentedKdeTree, default_grid_anchor, inclusion_probability
from core.base.errors import EmptyInput, WeightPromiseViolated
from core.kde import BackendKind, SmoothKernel
from utils.rng import stream


def _tree(n=11, s2=1.0, seed=0, **kwargs):
    rng = np.random.default_rng(seed)
    points = rng.random((n, 2))
    weights = rng.random(n)
    multipliers = rng.dirichlet(np.ones(n))
    kernel = SmoothKernel(s=2.0, floor=1e-3)
    return AugmentedKdeTree.build(points, weights, multipliers, s2, kernel,
                                  backend_kind=BackendKind.EXACT, **kwargs)


def test_decompose_covers_every_range():
    tree = _tree(n=11)
    for lo in range(tree.n):
        for hi in range(lo + 1, tree.n + 1):
            _, ids = tree.decompose(np.array([lo]), np.array([hi]))
            covered = np.concatenate([
                np.arange(tree.nodes[int(k)].lo, tree.nodes[int(k)].hi) for k in ids])
            assert sorted(covered.tolist()) == list(range(lo, hi))
            assert len(ids) <= 2 * tree.depth + 2


def test_decompose_is_vectorised():
    tree = _tree(n=11)
    owner, ids = tree.decompose(np.array([0, 3, 5]), np.array([11, 4, 5]))
    counts = np.bincount(owner, minlength=3)
    assert counts[2] == 0
    assert sum(tree.nodes[int(k)].size for k in ids[owner == 1]) == 1


def test_node_metadata():
    tree = _tree(n=7)
    root = tree.root
    assert root.size == 7
    assert root.min == tree.min_weight and root.max == tree.max_weight
    assert root.min <= root.med <= root.max
    for node in tree.nodes.values():
        np.testing.assert_array_equal(np.sort(node.indices), np.sort(tree.leaf_order[node.lo:node.hi]))


def test_canonical_nodes_threshold():
    tree = _tree(n=13)
    threshold = float(np.median(tree.sorted_weights))
    nodes = tree.canonical_nodes(threshold)
    covered = sorted(int(i) for node in nodes for i in node.indices)
    expected = sorted(int(i) for i in np.flatnonzero(
        np.asarray(tree.sorted_weights) >= threshold))
    # leaf_order 將葉序映回原索引
    assert covered == sorted(int(tree.leaf_order[i]) for i in expected)
    assert tree.canonical_nodes(tree.max_weight + 1.0) == []


def test_grid_doubles_up_to_max_gap():
    tree = _tree(n=20)
    beta = float(tree.sorted_weights[3])
    grid = tree.grid(beta)
    assert grid[0] == 0.0
    assert grid[-1] == pytest.approx(tree.max_weight - beta)
    steps = grid[2:-1] / grid[1:-2]
    np.testing.assert_allclose(steps, 2.0)
    assert tree.grid(tree.max_weight).size == 0


def test_grid_anchor_promise():
    tree = _tree(n=20, grid_anchor=10.0, adaptive_anchor=False)
    with pytest.raises(WeightPromiseViolated):
        tree.grid(0.0)
    adaptive = _tree(n=20, grid_anchor=10.0, adaptive_anchor=True)
    assert adaptive.grid(0.0)[1] <= adaptive.sorted_weights[0]


def test_query_is_zero_when_nothing_exceeds_beta():
    tree = _tree()
    assert tree.query(np.zeros(2), tree.max_weight, stream(0)) == 0.0


def test_single_cell_is_exact_when_gaps_sit_on_the_grid():
    kernel = SmoothKernel(s=2.0, floor=1e-3)
    points = np.array([[0.0, 1.0], [1.0, 0.0]])
    tree = AugmentedKdeTree.build(points, np.array([1.0, 1.0]), np.array([0.5, 0.5]),
                                  2.0, kernel)
    y = np.array([0.0, 0.0])
    assert tree.query(y, 0.0, stream(1)) == pytest.approx(tree.exact_sum(y, 0.0))


@pytest.mark.parametrize("s2", [1.0, 2.0, 3.0])
def test_single_estimates_are_unbiased(s2):
    tree = _tree(n=30, s2=s2, seed=4, repetitions=1)
    y = np.array([0.3, 0.7])
    beta = 0.2
    truth = tree.exact_sum(y, beta)
    samples = tree.query_samples(y, beta, 4000, stream(9, int(s2)))
    stderr = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - truth) <= 5.0 * stderr + 1e-12


def test_median_query_close_to_truth():
    tree = _tree(n=30, s2=1.0, seed=2, eps=0.25, delta=0.01)
    y = np.array([0.5, 0.5])
    truth = tree.exact_sum(y, 0.1)
    assert tree.query(y, 0.1, stream(3)) == pytest.approx(truth, rel=0.25)


def test_inclusion_probability():
    assert inclusion_probability(1.5, 0.0, 1.0, 2.0, 1.0) == pytest.approx(0.5)
    assert inclusion_probability(1.5, 0.0, 1.0, 2.0, 2.0) == pytest.approx(1.25 / 3.0)
    assert inclusion_probability(0.5, 0.0, 1.0, 2.0, 1.0) == 0.0
    assert inclusion_probability(2.5, 0.0, 1.0, 2.0, 1.0) == 0.0


def test_default_grid_anchor():
    anchor = default_grid_anchor(0.05, 0.1, 10, 4.0, 2.0, 0.5)
    assert anchor == pytest.approx(0.05 * 0.1 / (10 * 4.0 * 4.0 / 0.5))


def test_sampling_backend_tree_runs():
    rng = np.random.default_rng(6)
    points = rng.random((9, 2)) + np.array([3.0, 0.0])
    weights = rng.random(9)
    multipliers = rng.dirichlet(np.ones(9))
    kernel = SmoothKernel(s=2.0, floor=1e-3)
    tree = AugmentedKdeTree.build(points, weights, multipliers, 1.0, kernel,
                                  backend_kind=BackendKind.SAMPLING, eps=0.5, delta=0.5,
                                  seed=3, backend_options={'sample_count': 64})
    y = np.array([0.5, 0.5])
    value = tree.query(y, 0.0, stream(2))
    assert value == tree.query(y, 0.0, stream(2))
    assert value == pytest.approx(tree.exact_sum(y, 0.0), rel=0.5)


def test_empty_tree():
    with pytest.raises(EmptyInput):
        AugmentedKdeTree.build(np.zeros((0, 2)), np.zeros(0), np.zeros(0), 1.0,
                               SmoothKernel(s=2.0))


@pytest.mark.parametrize("s2", [1.0, 2.0])
def test_default_repetitions_bound_relative_variance(s2):
    tree = _tree(n=30, s2=s2, seed=6, eps=0.25)
    y = np.array([0.4, 0.6])
    truth = tree.exact_sum(y, 0.1)
    samples = tree.query_samples(y, 0.1, 400, stream(12, int(s2)))
    assert samples.var(ddof=1) <= 0.25 * truth ** 2


def test_reweighted_tree_shares_backends():
    tree = _tree(n=11, seed=8)
    weights = np.empty(tree.n)
    weights[tree.leaf_order] = tree.sorted_weights
    y = np.array([0.2, 0.9])
    tree.query(y, 0.0, stream(0))

    shifted = tree.reweighted(2.0 * weights + 0.1)
    assert shifted is not None
    assert shifted._node_cache is tree._node_cache
    assert shifted.nodes[1].backend is tree.nodes[1].backend
    assert shifted.max_weight == pytest.approx(2.0 * tree.max_weight + 0.1)
    gaps = np.maximum(2.0 * tree.sorted_weights + 0.1 - 0.5, 0.0)
    expected = np.sum(tree._multipliers * gaps * tree.kernel.evaluate(tree._points, y))
    assert shifted.exact_sum(y, 0.5) == pytest.approx(expected)

    assert tree.reweighted(1.0 / (weights + 1.0)) is None
    assert tree.reweighted(weights[:-1]) is None
