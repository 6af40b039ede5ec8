import math

import numpy as np
import pytest

from ultraskel.errors import MTooSmall, ParamOutOfRange
from ultraskel.initial import (
    PartitionBuildParams,
    build_initial_partition,
    check_initial_partition,
    closed_form_modified_weights,
    minimal_block_count,
    modified_weights,
    validate_weighted_tree,
)
from ultraskel.metric import MeasuredMetricSpace, validate_metric
from ultraskel.trees import RootedTree, validate_fragmentation

from conftest import counting, random_planar_metric


def test_modified_weights_leaf():
    # single vertex at depth 0: w**(1/2)
    t = RootedTree([-1])
    assert modified_weights(t, [16.0], 2, 2) == [4.0]


def test_modified_weights_sum_of_roots():
    # depth-1 vertex (h=2) with two leaf children at depth 2, weights 4 and 1
    t = RootedTree([-1, 0, 1, 1])
    w = [5.0, 5.0, 4.0, 1.0]
    wm = modified_weights(t, w, 2, 2)
    assert wm[1] == 2.0 + 1.0
    assert wm[0] == math.sqrt(5.0)
    assert wm[2] == 2.0 and wm[3] == 1.0


def test_modified_weights_closed_form_agrees():
    rng = np.random.default_rng(0)
    for _ in range(30):
        h, k, m = 2, 2, 2
        parent = [-1]
        frontier = [0]
        for d in range(1, m * h + 1):
            nxt = []
            for u in frontier:
                for _ in range(int(rng.integers(1, 3))):
                    parent.append(u)
                    nxt.append(len(parent) - 1)
            frontier = nxt
        t = RootedTree(parent)
        w = rng.uniform(0.1, 9.0, size=t.n).tolist()
        rec = modified_weights(t, w, h, k)
        cf = closed_form_modified_weights(t, w, h, k)
        assert rec == pytest.approx(cf, rel=1e-12)


def test_minimal_block_count():
    assert minimal_block_count(0.05, 8, 0.5) == 2  # tau < min distance
    assert minimal_block_count(0.05, 8, 0.01) == 3
    # log-domain: survives thresholds far below float underflow
    assert minimal_block_count(0.05, 8, 1e-300) > 2


def test_params_validation():
    with pytest.raises(ParamOutOfRange):
        PartitionBuildParams(tau=0.4, h=8, k=2)
    with pytest.raises(ParamOutOfRange):
        PartitionBuildParams(tau=0.1, h=1, k=2)


def test_two_point_construction():
    ms = validate_metric([[0, 1], [1, 0]])
    X = counting(ms)
    frag, wt = build_initial_partition(X, PartitionBuildParams(tau=1 / 20, h=8, k=2, m=2))
    # root plus two chains of length m*h
    assert frag.tree.n == 1 + 2 * 16
    assert frag.tree.height() == 16
    assert set(frag.cluster_points(wt.designated[frag.tree.root])) == {0}
    validate_fragmentation(frag)
    validate_weighted_tree(wt)
    rep = check_initial_partition(frag, wt, X, 1 / 20)
    assert all(rep.values())


def test_equilateral_all_chains():
    n = 5
    ms = validate_metric(np.ones((n, n)) - np.eye(n))
    X = counting(ms)
    frag, wt = build_initial_partition(X, PartitionBuildParams(tau=1 / 20, h=8, k=2, m=2))
    # level-1 clusters are all singletons: root + n chains
    assert frag.tree.n == 1 + n * 16
    assert len(frag.tree.children[frag.tree.root]) == n


def test_separated_pair_splits_at_level_one():
    # 0.04 apart, tau = 1/20: level-1 threshold 0.425 * 0.05 = 0.02125 < 0.04
    ms = validate_metric([[0, 1, 0.96], [1, 0, 0.04], [0.96, 0.04, 0]])
    X = counting(ms)
    frag, wt = build_initial_partition(X, PartitionBuildParams(tau=1 / 20, h=8, k=2))
    level1 = frag.tree.children[frag.tree.root]
    kids_clusters = sorted(tuple(frag.cluster_points(v)) for v in level1)
    assert all(len(c) == 1 for c in kids_clusters)


def test_m_too_small():
    ms = validate_metric([[0, 1, 0.99], [1, 0, 0.01], [0.99, 0.01, 0]])
    X = counting(ms)
    with pytest.raises(MTooSmall):
        build_initial_partition(X, PartitionBuildParams(tau=1 / 20, h=8, k=2, m=2))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_random_spaces_invariants(seed):
    ms = random_planar_metric(14, seed)
    from ultraskel.metric import normalize_diameter

    norm, _ = normalize_diameter(ms)
    X = counting(norm)
    params = PartitionBuildParams(tau=1 / 30, h=8, k=2)
    frag, wt = build_initial_partition(X, params)
    validate_fragmentation(frag)
    validate_weighted_tree(wt)
    rep = check_initial_partition(frag, wt, X, 1 / 30)
    assert all(rep.values()), rep
    # level sets partition X at every depth, non-increasing in count upward
    by_depth = {}
    for v in range(frag.tree.n):
        by_depth.setdefault(frag.tree.depth[v], []).append(v)
    full = frag.full_mask()
    prev = None
    for d in sorted(by_depth):
        masks = [frag.clusters[v] for v in by_depth[d]]
        acc = 0
        for m in masks:
            assert acc & m == 0
            acc |= m
        assert acc == full
        if prev is not None:
            assert len(by_depth[d]) >= prev
        prev = len(by_depth[d])


def test_measure_weighted_masses():
    ms = validate_metric([[0, 1], [1, 0]])
    X = MeasuredMetricSpace(ms, np.array([2.0, 5.0]))
    frag, wt = build_initial_partition(X, PartitionBuildParams(tau=1 / 20, h=8, k=2, m=2))
    assert wt.w[frag.tree.root] == 7.0
    # designated child of the root is the heavier point's cluster
    assert frag.cluster_points(wt.designated[frag.tree.root]) == [1]
