"""Rooted trees, fragmentation maps, cut sets and lacunarity predicates.

Point sets are stored as Python-int bitmasks over point indices, so equality,
containment and disjointness are exact regardless of the number of points.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    ChildNotSubset,
    LeafNotSingleton,
    OverlapIncomparable,
    RootNotFull,
    TooLarge,
    ValidationError,
)

__all__ = [
    "RootedTree",
    "FragmentationMap",
    "validate_fragmentation",
    "boundary",
    "boundary_masks",
    "descendants_in",
    "descendants_in_star",
    "is_lacunary",
    "is_separated",
    "ultrametric_from_lacunary",
    "min_cutset_cost",
    "enumerate_cutsets",
    "tree_to_json",
    "tree_from_json",
    "tree_to_dot",
    "frag_to_dot",
    "mask_of",
    "points_of",
]


def mask_of(points: Iterable[int]) -> int:
    m = 0
    for p in points:
        m |= 1 << p
    return m


def points_of(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


class RootedTree:
    """Immutable rooted tree over vertices 0..n-1 given by a parent array."""

    __slots__ = ("parent", "children", "depth", "root", "_order")

    def __init__(self, parent: Sequence[int]):
        n = len(parent)
        roots = [v for v in range(n) if parent[v] < 0]
        if len(roots) != 1:
            raise ValidationError(f"tree must have exactly one root, found {len(roots)}")
        self.root = roots[0]
        self.parent = tuple(int(p) for p in parent)
        children: list[list[int]] = [[] for _ in range(n)]
        for v in range(n):
            if v != self.root:
                p = self.parent[v]
                if not 0 <= p < n:
                    raise ValidationError(f"parent of {v} out of range")
                children[p].append(v)
        self.children = tuple(tuple(c) for c in children)
        depth = [-1] * n
        depth[self.root] = 0
        order = [self.root]
        for u in order:
            for v in self.children[u]:
                if depth[v] >= 0:
                    raise ValidationError("cycle detected")
                depth[v] = depth[u] + 1
                order.append(v)
        if len(order) != n:
            raise ValidationError("tree is not connected")
        self.depth = tuple(depth)
        self._order = tuple(order)  # BFS order: parents before children

    @property
    def n(self) -> int:
        return len(self.parent)

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def leaves(self) -> list[int]:
        return [v for v in range(self.n) if not self.children[v]]

    def height(self) -> int:
        return max(self.depth)

    def bfs_order(self) -> tuple[int, ...]:
        return self._order

    def subtree_vertices(self, u: int) -> list[int]:
        out = [u]
        for v in out:
            out.extend(self.children[v])
        return out

    def lca(self, u: int, v: int) -> int:
        while self.depth[u] > self.depth[v]:
            u = self.parent[u]
        while self.depth[v] > self.depth[u]:
            v = self.parent[v]
        while u != v:
            u = self.parent[u]
            v = self.parent[v]
        return u

    def is_ancestor(self, u: int, v: int) -> bool:
        """True iff u is a weak ancestor of v."""
        while self.depth[v] > self.depth[u]:
            v = self.parent[v]
        return u == v


@dataclass(frozen=True)
class FragmentationMap:
    """Assignment of point bitmasks to tree vertices."""

    tree: RootedTree
    clusters: tuple[int, ...]
    n_points: int

    def cluster_points(self, v: int) -> list[int]:
        return points_of(self.clusters[v])

    def full_mask(self) -> int:
        return (1 << self.n_points) - 1


def validate_fragmentation(frag: FragmentationMap) -> None:
    """Raise on the first violated fragmentation-map condition.

    Disjointness across incomparable vertices is equivalent to pairwise
    disjointness of the children of every vertex, which is what is checked.
    """
    tree, clusters = frag.tree, frag.clusters
    if clusters[tree.root] != frag.full_mask():
        raise RootNotFull("root cluster must be the whole point set")
    for v in range(tree.n):
        cv = clusters[v]
        if tree.is_leaf(v):
            if cv == 0 or cv & (cv - 1):
                raise LeafNotSingleton(v)
        if v != tree.root:
            if cv & ~clusters[tree.parent[v]]:
                raise ChildNotSubset(tree.parent[v], v)
        acc = 0
        for c in tree.children[v]:
            if acc & clusters[c]:
                first = next(u for u in tree.children[v] if clusters[u] & clusters[c] and u != c)
                raise OverlapIncomparable(first, c)
            acc |= clusters[c]


def boundary_masks(frag: FragmentationMap) -> list[int]:
    """Boundary of every vertex: union of leaf clusters in its subtree."""
    tree = frag.tree
    out = [0] * tree.n
    for u in reversed(tree.bfs_order()):
        if tree.is_leaf(u):
            out[u] = frag.clusters[u]
        else:
            m = 0
            for c in tree.children[u]:
                m |= out[c]
            out[u] = m
    return out


def boundary(frag: FragmentationMap, u: int) -> list[int]:
    return points_of(boundary_masks(frag)[u])


def descendants_in(tree: RootedTree, u: int, A: Iterable[int]) -> list[int]:
    """D_T(u, A): minimal elements of A strictly below u."""
    aset = set(A)
    out = []
    stack = list(tree.children[u])
    while stack:
        v = stack.pop()
        if v in aset:
            out.append(v)
        else:
            stack.extend(tree.children[v])
    return sorted(out)


def descendants_in_star(tree: RootedTree, u: int, A: Iterable[int]) -> list[int]:
    """D*_T(u, A): equals {u} when u itself belongs to A."""
    aset = set(A)
    if u in aset:
        return [u]
    return descendants_in(tree, u, aset)


def _cluster_diams(frag: FragmentationMap, dist: np.ndarray) -> list[float]:
    out = [0.0] * frag.tree.n
    for v in range(frag.tree.n):
        pts = frag.cluster_points(v)
        if len(pts) > 1:
            idx = np.asarray(pts)
            out[v] = float(dist[np.ix_(idx, idx)].max())
    return out


def set_distance(dist: np.ndarray, a: Sequence[int], b: Sequence[int]) -> float:
    ia = np.asarray(list(a), dtype=int)
    ib = np.asarray(list(b), dtype=int)
    return float(dist[np.ix_(ia, ib)].min())


def is_lacunary(
    frag: FragmentationMap,
    dist: np.ndarray,
    K: Optional[float] = None,
    gamma: Optional[float] = None,
    *,
    log_K: Optional[float] = None,
    log_gamma: Optional[float] = None,
    slack: float = 1e-9,
):
    """Geometric decay test tying ancestor diameters to sibling gaps.

    The constants routinely overflow floats, so the comparison is done in
    log-domain: for each branching vertex u we need

        max over weak ancestors q of [log diam(F_q) + depth(q) * log gamma]
            <= log K + depth(u) * log gamma + log gap(u) + slack.

    Returns ``(True, None)`` or ``(False, (q, u, v, w))`` with v, w the
    closest child boundaries of u.
    """
    if log_K is None:
        if K is None:
            raise ValidationError("is_lacunary needs K or log_K")
        log_K = math.log(K)
    if log_gamma is None:
        if gamma is None:
            raise ValidationError("is_lacunary needs gamma or log_gamma")
        log_gamma = math.log(gamma)
    tree = frag.tree
    diams = _cluster_diams(frag, dist)
    bnds = boundary_masks(frag)
    # running max of log diam(F_q) + depth(q)*log_gamma along root paths,
    # remembering the argmax vertex for witness reporting
    best: list[tuple[float, int]] = [(-math.inf, -1)] * tree.n
    for u in tree.bfs_order():
        d = diams[u]
        cand = (-math.inf, u) if d == 0 else (math.log(d) + tree.depth[u] * log_gamma, u)
        if u == tree.root:
            best[u] = cand
        else:
            best[u] = max(best[tree.parent[u]], cand)
    for u in range(tree.n):
        if len(tree.children[u]) < 2:
            continue
        gap = math.inf
        pair = None
        ch = tree.children[u]
        for i in range(len(ch)):
            for j in range(i + 1, len(ch)):
                g = set_distance(dist, points_of(bnds[ch[i]]), points_of(bnds[ch[j]]))
                if g < gap:
                    gap = g
                    pair = (ch[i], ch[j])
        lhs, q = best[u]
        rhs = log_K + tree.depth[u] * log_gamma + (math.log(gap) if gap > 0 else -math.inf)
        if lhs > rhs + slack:
            return False, (q, u, pair[0], pair[1])
    return True, None


def is_separated(
    frag: FragmentationMap,
    dist: np.ndarray,
    beta: float,
    S: Iterable[int],
    *,
    slack: float = 0.0,
):
    """beta-separation of the vertices in S with respect to the root boundary."""
    bnds = boundary_masks(frag)
    root_bnd = bnds[frag.tree.root]
    diams = _cluster_diams(frag, dist)
    for u in S:
        if diams[u] == 0.0:
            continue
        outside = points_of(root_bnd & ~bnds[u])
        if not outside:
            continue
        cl = frag.cluster_points(u)
        d = set_distance(dist, outside, cl)
        if d + slack < beta * diams[u]:
            x = min(
                outside,
                key=lambda p: float(dist[p, np.asarray(cl)].min()),
            )
            return False, (u, x)
    return True, None


def ultrametric_from_lacunary(frag: FragmentationMap, dist: np.ndarray):
    """rho(x, y) = diam of the cluster at the lca of the leaves of x and y.

    Returns ``(points, rho)`` where points lists the root boundary in
    increasing order and rho is the matrix of the induced ultrametric.
    """
    tree = frag.tree
    leaf_of = {}
    for v in tree.leaves():
        pts = frag.cluster_points(v)
        if len(pts) == 1:
            leaf_of.setdefault(pts[0], v)
    pts = sorted(leaf_of)
    diams = _cluster_diams(frag, dist)
    m = len(pts)
    rho = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            a = tree.lca(leaf_of[pts[i]], leaf_of[pts[j]])
            rho[i, j] = rho[j, i] = diams[a]
    return pts, rho


def min_cutset_cost(tree: RootedTree, cost: Sequence[float], theta: float) -> float:
    """min over cut-sets G of sum cost(v)**theta, by tree DP."""
    vals = [0.0] * tree.n
    for u in reversed(tree.bfs_order()):
        own = float(cost[u]) ** theta
        if tree.is_leaf(u):
            vals[u] = own
        else:
            vals[u] = min(own, math.fsum(vals[c] for c in tree.children[u]))
    return vals[tree.root]


def enumerate_cutsets(tree: RootedTree, limit: int = 20) -> list[frozenset]:
    """All minimal cut-sets (antichains meeting every root-leaf path)."""
    if tree.n > limit:
        raise TooLarge(f"cut-set enumeration limited to {limit} vertices")

    def rec(u: int) -> list[frozenset]:
        out = [frozenset([u])]
        if tree.children[u]:
            parts = [rec(c) for c in tree.children[u]]
            combos = [frozenset()]
            for p in parts:
                combos = [c | q for c in combos for q in p]
            out.extend(combos)
        return out

    return rec(tree.root)


def tree_to_json(tree: RootedTree) -> str:
    return json.dumps({"parent": list(tree.parent)})


def tree_from_json(text: str) -> RootedTree:
    obj = json.loads(text)
    return RootedTree(obj["parent"])


def tree_to_dot(tree: RootedTree, label: Optional[Callable[[int], str]] = None) -> str:
    lines = ["digraph tree {"]
    for v in range(tree.n):
        lab = label(v) if label else str(v)
        lines.append(f'  v{v} [label="{lab}"];')
    for v in range(tree.n):
        if v != tree.root:
            lines.append(f"  v{tree.parent[v]} -> v{v};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def frag_to_dot(frag: FragmentationMap, point_labels: Optional[Sequence[str]] = None) -> str:
    def lab(v: int) -> str:
        pts = frag.cluster_points(v)
        if point_labels:
            return "{" + ",".join(point_labels[p] for p in pts) + "}"
        return "{" + ",".join(map(str, pts)) + "}"

    return tree_to_dot(frag.tree, lab)
