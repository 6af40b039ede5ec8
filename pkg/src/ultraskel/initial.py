"""Bottom-up construction of the initial partition map with designated children.

The construction runs level by level from the singleton leaves up to the root.
At each level a greedy pass picks the heaviest remaining cluster (by the
modified weight) as a seed, groups every remaining cluster within the level
threshold around it, and marks the seed as the designated child of the new
vertex.  Seeds of distinct groups at the same level are therefore strictly
farther apart than the threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DepthNotDivisible,
    MTooSmall,
    ParamOutOfRange,
    UnevenLeafDepth,
    ValidationError,
)
from .metric import MeasuredMetricSpace
from .trees import FragmentationMap, RootedTree, points_of

__all__ = [
    "WeightedTree",
    "PartitionBuildParams",
    "modified_weights",
    "closed_form_modified_weights",
    "minimal_block_count",
    "build_initial_partition",
    "validate_weighted_tree",
]


@dataclass(frozen=True)
class WeightedTree:
    """Tree with positive weights, modified weights and designated children.

    ``designated[v]`` is the designated child of v, or -1 at leaves.
    """

    tree: RootedTree
    w: tuple[float, ...]
    w_mod: tuple[float, ...]
    designated: tuple[int, ...]
    h: int
    k: int


@dataclass(frozen=True)
class PartitionBuildParams:
    tau: float
    h: int
    k: int
    m: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.tau < 1 / 3:
            raise ParamOutOfRange(f"tau must lie in (0, 1/3), got {self.tau}")
        if self.h < 2 or self.k < 2:
            raise ParamOutOfRange("h and k must be integers >= 2")
        if self.m is not None and self.m < 2:
            raise ParamOutOfRange("m must be >= 2")


def _check_uniform_leaf_depth(tree: RootedTree, h: int) -> int:
    depths = {tree.depth[v] for v in tree.leaves()}
    if len(depths) != 1:
        raise UnevenLeafDepth(f"leaves at depths {sorted(depths)}")
    depth = depths.pop()
    if depth % h != 0:
        raise DepthNotDivisible(f"leaf depth {depth} not divisible by h={h}")
    return depth


def modified_weights(tree: RootedTree, w: Sequence[float], h: int, k: int) -> list[float]:
    """Recursive modified weights: w**((k-1)/k) at leaves and at depths
    divisible by h, the plain child sum elsewhere."""
    _check_uniform_leaf_depth(tree, h)
    e = (k - 1) / k
    out = [0.0] * tree.n
    for u in reversed(tree.bfs_order()):
        if tree.is_leaf(u) or tree.depth[u] % h == 0:
            out[u] = float(w[u]) ** e
        else:
            out[u] = math.fsum(out[c] for c in tree.children[u])
    return out


def closed_form_modified_weights(tree: RootedTree, w: Sequence[float], h: int, k: int) -> list[float]:
    """Independent evaluation: for (j-1)h < depth(u) <= jh the value is the
    sum of w**((k-1)/k) over depth-jh vertices of the subtree at u."""
    _check_uniform_leaf_depth(tree, h)
    e = (k - 1) / k
    out = [0.0] * tree.n
    for u in range(tree.n):
        d = tree.depth[u]
        target = h * math.ceil(d / h) if d > 0 else 0
        if d == target:
            out[u] = float(w[u]) ** e
        else:
            vals = [
                float(w[v]) ** e
                for v in tree.subtree_vertices(u)
                if tree.depth[v] == target
            ]
            out[u] = math.fsum(vals)
    return out


def validate_weighted_tree(wt: WeightedTree, *, rel_slack: float = 1e-9) -> None:
    """Check positivity, subadditivity and the designated-child maximality."""
    tree = wt.tree
    _check_uniform_leaf_depth(tree, wt.h)
    for u in range(tree.n):
        if not wt.w[u] > 0:
            raise ValidationError(f"weight at {u} not positive")
        if tree.is_leaf(u):
            continue
        s = math.fsum(wt.w[c] for c in tree.children[u])
        if wt.w[u] > s * (1 + rel_slack):
            raise ValidationError(f"subadditivity fails at {u}: {wt.w[u]} > {s}")
        c = wt.designated[u]
        if c not in tree.children[u]:
            raise ValidationError(f"designated child of {u} is not a child")
        top = max(wt.w_mod[v] for v in tree.children[u])
        if wt.w_mod[c] < top * (1 - rel_slack):
            raise ValidationError(f"designated child of {u} does not maximize w_mod")


def minimal_block_count(tau: float, h: int, min_dist: float) -> int:
    """Smallest m >= 2 with tau**((m-2)h + 1) < min_dist (log-domain compare)."""
    if min_dist <= 0:
        raise ValidationError("minimum distance must be positive")
    m = 2
    log_tau = math.log(tau)
    log_md = math.log(min_dist)
    while ((m - 2) * h + 1) * log_tau >= log_md:
        m += 1
    return m


def build_initial_partition(
    X: MeasuredMetricSpace, params: PartitionBuildParams
) -> tuple[FragmentationMap, WeightedTree]:
    """Greedy bottom-up partition map of a diameter-1 metric measure space.

    Guarantees, checkable exhaustively per level:
      * partition map with all leaves at depth m*h, singleton leaf clusters,
      * diam of every depth-i cluster <= tau**i,
      * the designated child of each vertex maximizes the modified weight,
      * designated children of distinct same-depth vertices are more than
        (1-3*tau)/2 * tau**i apart.
    """
    ms = X.space
    n = ms.n
    dist = np.asarray(ms.dist)
    if n >= 2 and abs(ms.diameter() - 1.0) > 1e-12:
        raise ParamOutOfRange("space must be normalized to diameter 1")
    tau, h, k = params.tau, params.h, params.k
    e = (k - 1) / k
    min_dist = ms.min_distance()
    m = params.m
    if m is None:
        m = minimal_block_count(tau, h, min_dist) if n >= 2 else 2
    elif n >= 2 and ((m - 2) * h + 1) * math.log(tau) >= math.log(min_dist):
        raise MTooSmall(f"m={m} leaves clusters above the minimum distance")
    mh = m * h

    mu = np.asarray(X.mu)

    # per-level cluster records: (point index array, mass, w_mod)
    level_pts: list[list[np.ndarray]] = [[] for _ in range(mh + 1)]
    level_mass: list[list[float]] = [[] for _ in range(mh + 1)]
    level_wmod: list[list[float]] = [[] for _ in range(mh + 1)]
    # children[i][j] = indices into level i+1 grouped under vertex j of level i
    grouping: list[list[list[int]]] = [[] for _ in range(mh)]
    designated_idx: list[list[int]] = [[] for _ in range(mh)]

    for j in range(n):
        level_pts[mh].append(np.asarray([j]))
        level_mass[mh].append(float(mu[j]))
        level_wmod[mh].append(float(mu[j]) ** e)

    for i in range(mh - 1, 0, -1):
        below_pts = level_pts[i + 1]
        below_mass = level_mass[i + 1]
        below_wmod = level_wmod[i + 1]
        ell = len(below_pts)
        thr = 0.5 * (1.0 - 3.0 * tau) * tau**i
        remaining = list(range(ell))
        while remaining:
            seed = min(
                remaining,
                key=lambda s: (-below_wmod[s], int(below_pts[s].min())),
            )
            seed_pts = below_pts[seed]
            group = [
                s
                for s in remaining
                if float(dist[np.ix_(seed_pts, below_pts[s])].min()) <= thr
            ]
            pts = np.concatenate([below_pts[s] for s in group])
            pts.sort()
            mass = math.fsum(below_mass[s] for s in group)
            if i % h == 0:
                wm = mass**e
            else:
                wm = math.fsum(below_wmod[s] for s in group)
            level_pts[i].append(pts)
            level_mass[i].append(mass)
            level_wmod[i].append(wm)
            grouping[i].append(group)
            designated_idx[i].append(seed)
            gset = set(group)
            remaining = [s for s in remaining if s not in gset]

    # root
    level_pts[0] = [np.arange(n)]
    level_mass[0] = [float(math.fsum(mu.tolist()))]
    level_wmod[0] = [level_mass[0][0] ** e]
    ell1 = len(level_pts[1])
    grouping[0] = [list(range(ell1))]
    designated_idx[0] = [
        min(range(ell1), key=lambda s: (-level_wmod[1][s], int(level_pts[1][s].min())))
    ]

    # assemble tree arrays, vertices numbered level by level
    offsets = [0] * (mh + 1)
    total = 0
    for i in range(mh + 1):
        offsets[i] = total
        total += len(level_pts[i])
    parent = [-1] * total
    designated = [-1] * total
    for i in range(mh):
        for j, group in enumerate(grouping[i]):
            vid = offsets[i] + j
            for s in group:
                parent[offsets[i + 1] + s] = vid
            designated[vid] = offsets[i + 1] + designated_idx[i][j]
    tree = RootedTree(parent)

    clusters = [0] * total
    w = [0.0] * total
    w_mod = [0.0] * total
    for i in range(mh + 1):
        for j in range(len(level_pts[i])):
            vid = offsets[i] + j
            msk = 0
            for p in level_pts[i][j].tolist():
                msk |= 1 << p
            clusters[vid] = msk
            w[vid] = level_mass[i][j]
            w_mod[vid] = level_wmod[i][j]

    frag = FragmentationMap(tree, tuple(clusters), n)
    wt = WeightedTree(tree, tuple(w), tuple(w_mod), tuple(designated), h, k)
    return frag, wt


def check_initial_partition(
    frag: FragmentationMap,
    wt: WeightedTree,
    X: MeasuredMetricSpace,
    tau: float,
) -> dict:
    """Exhaustive per-level verification of the construction guarantees."""
    from .trees import validate_fragmentation

    tree = frag.tree
    dist = np.asarray(X.space.dist)
    report = {"partition": True, "diam_decay": True, "separation": True}
    validate_fragmentation(frag)
    full = frag.full_mask()
    bnd_root = 0
    for v in tree.leaves():
        bnd_root |= frag.clusters[v]
    report["partition"] = bnd_root == full

    for v in range(tree.n):
        pts = frag.cluster_points(v)
        if len(pts) > 1:
            idx = np.asarray(pts)
            diam = float(dist[np.ix_(idx, idx)].max())
            if diam > tau ** tree.depth[v]:
                report["diam_decay"] = False

    by_depth: dict[int, list[int]] = {}
    for v in range(tree.n):
        if not tree.is_leaf(v):
            by_depth.setdefault(tree.depth[v], []).append(v)
    for d, verts in by_depth.items():
        thr = 0.5 * (1 - 3 * tau) * tau**d
        for a in range(len(verts)):
            for b in range(a + 1, len(verts)):
                ca = points_of(frag.clusters[wt.designated[verts[a]]])
                cb = points_of(frag.clusters[wt.designated[verts[b]]])
                gap = float(dist[np.ix_(ca, cb)].min())
                if not gap > thr:
                    report["separation"] = False
    return report
