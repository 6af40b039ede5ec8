"""Finite truncations of the lower-bound constructions.

Three families: product-tree compositions of per-level metrics (an exact
metric by a first-differing-coordinate rule), expander shortest-path levels,
and random {1,2}-valued spaces from G(n, 1/2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np

from .errors import (
    AdmissibilityFailure,
    ExpanderSamplingTimeout,
    SpecViolation,
    TooLarge,
    ValidationError,
)
from .metric import MetricSpace, validate_metric

__all__ = [
    "LevelSpec",
    "ProductTreeSpec",
    "TruncatedFractal",
    "product_tree_truncation",
    "prefix_cover_check",
    "expander_fractal_level",
    "gnhalf_fractal_level",
    "largest_cluster_subset",
]


@dataclass(frozen=True)
class LevelSpec:
    """One level: n points with a diameter-1 metric of minimum distance delta."""

    n: int
    dist: np.ndarray
    delta: float


@dataclass(frozen=True)
class ProductTreeSpec:
    alpha: float
    levels: tuple[LevelSpec, ...]

    def __post_init__(self):
        if not self.alpha > 0:
            raise SpecViolation("alpha must be positive")
        for idx, lv in enumerate(self.levels, 1):
            d = np.asarray(lv.dist)
            if lv.n < 2 or d.shape != (lv.n, lv.n):
                raise SpecViolation(f"level {idx}: need n >= 2 and a matching matrix")
            iu = np.triu_indices(lv.n, 1)
            if abs(float(d[iu].max()) - 1.0) > 1e-12:
                raise SpecViolation(f"level {idx}: diameter must be 1")
            mn = float(d[iu].min())
            if abs(mn - lv.delta) > 1e-12:
                raise SpecViolation(f"level {idx}: recorded min distance is {lv.delta}, matrix has {mn}")
            if not lv.delta > lv.n ** (-1.0 / self.alpha):
                raise SpecViolation(
                    f"level {idx}: need delta > n**(-1/alpha) = {lv.n ** (-1.0 / self.alpha)}"
                )


@dataclass(frozen=True)
class TruncatedFractal:
    spec: ProductTreeSpec
    depth: int
    points: tuple[tuple[int, ...], ...]
    space: MetricSpace


def product_tree_truncation(
    spec: ProductTreeSpec, L: int, *, validate: bool = True
) -> TruncatedFractal:
    """Depth-L truncation: points are coordinate tuples, the distance between
    two points is the level-k(x,y) distance scaled by prod_{i<k} n_i**(-1/alpha),
    where k(x,y) is the first differing coordinate."""
    if not 1 <= L <= len(spec.levels):
        raise ValidationError(f"depth must lie in 1..{len(spec.levels)}")
    sizes = [lv.n for lv in spec.levels[:L]]
    total = 1
    for s in sizes:
        total *= s
    if total > 10**4:
        raise TooLarge(f"truncation would have {total} points (limit 10^4)")
    dist = np.asarray(spec.levels[0].dist, dtype=float).copy()
    scale = 1.0
    for k in range(1, L):
        lv = spec.levels[k]
        scale *= sizes[k - 1] ** (-1.0 / spec.alpha)
        prev = dist
        m = prev.shape[0]
        dist = np.repeat(np.repeat(prev, lv.n, axis=0), lv.n, axis=1)
        block = np.asarray(lv.dist) * scale
        for i in range(m):
            dist[i * lv.n : (i + 1) * lv.n, i * lv.n : (i + 1) * lv.n] = block
    points = tuple(product(*[range(1, s + 1) for s in sizes]))
    if validate and total <= 512:
        space = validate_metric(dist)
    else:
        dist.setflags(write=False)
        space = MetricSpace(dist)
    return TruncatedFractal(spec, L, points, space)


def _prefix_tree_cutsets(sizes: list[int]):
    """All minimal covers of the leaf set by prefix cubes, as lists of depths.

    A prefix cube is identified by its depth k (0 = whole space); a minimal
    cover is an antichain of tree vertices meeting every root-leaf path, so
    only the multiset of depths matters for the reciprocal-product sum.
    """

    def rec(depth: int):
        yield [depth]
        if depth < len(sizes):
            parts = [list(rec(depth + 1)) for _ in range(sizes[depth])]
            combos = [[]]
            for p in parts:
                combos = [c + q for c in combos for q in p]
            yield from combos

    return rec(0)


def prefix_cover_check(fractal: TruncatedFractal) -> bool:
    """Every minimal prefix-cube cover has reciprocal-product sum >= 1 (exact).

    The full depth-L cover sums to exactly 1; this is verified as the equality
    case.  Exhaustive enumeration, so the guard is depth <= 3 and n_k <= 3.
    """
    sizes = [lv.n for lv in fractal.spec.levels[: fractal.depth]]
    if fractal.depth > 3 or any(s > 3 for s in sizes):
        raise TooLarge("exhaustive prefix cover check limited to depth 3, n_k <= 3")
    weights = [Fraction(1)]
    for s in sizes:
        weights.append(weights[-1] / s)
    saw_equality = False
    for cover in _prefix_tree_cutsets(sizes):
        total = sum(weights[k] for k in cover)
        if total < 1:
            return False
        if total == 1:
            saw_equality = True
    if not saw_equality:
        raise ValidationError("full-depth cover should sum to exactly 1")
    return True


def _random_regular_graph(n: int, d: int, rng: np.random.Generator) -> Optional[np.ndarray]:
    """One attempt of the pairing model; None when loops/multi-edges occur."""
    stubs = np.repeat(np.arange(n), d)
    rng.shuffle(stubs)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(0, len(stubs), 2):
        u, v = int(stubs[i]), int(stubs[i + 1])
        if u == v or adj[u, v]:
            return None
        adj[u, v] = adj[v, u] = True
    return adj


def _bfs_all_pairs(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    dist = np.full((n, n), -1, dtype=int)
    for s in range(n):
        dist[s, s] = 0
        frontier = [s]
        d = 0
        while frontier:
            d += 1
            nxt = []
            for u in frontier:
                for v in np.nonzero(adj[u])[0]:
                    if dist[s, v] < 0:
                        dist[s, v] = d
                        nxt.append(int(v))
            frontier = nxt
    return dist


def expander_fractal_level(
    alpha: float, n: int, seed: int, *, max_resamples: int = 50
) -> tuple[MetricSpace, ProductTreeSpec]:
    """Seeded 4-regular expander level with a spectral acceptance test.

    Resamples until the second adjacency eigenvalue modulus is at most
    2*sqrt(3)*1.05, then normalizes the shortest-path metric to diameter 1.
    Raises AdmissibilityFailure unless n**(1/alpha) > diam (pre-normalization),
    which is what the composed fractal needs.
    """
    if n < 5:
        raise ValidationError("need n >= 5 for a 4-regular graph")
    if n * 4 % 2:
        raise ValidationError("n*4 must be even")
    rng = np.random.default_rng(seed)
    bound = 2.0 * math.sqrt(3.0) * 1.05
    adj = None
    for _ in range(max_resamples):
        cand = None
        while cand is None:
            cand = _random_regular_graph(n, 4, rng)
        sp = _bfs_all_pairs(cand)
        if sp.min() < 0:
            continue
        eig = np.sort(np.abs(np.linalg.eigvalsh(cand.astype(float))))[::-1]
        if eig[1] <= bound:
            adj = cand
            break
    if adj is None:
        raise ExpanderSamplingTimeout(
            f"no spectral pass within {max_resamples} resamples"
        )
    sp = _bfs_all_pairs(adj)
    diam = int(sp.max())
    if n ** (1.0 / alpha) <= diam:
        raise AdmissibilityFailure(
            f"n**(1/alpha) = {n ** (1.0 / alpha)} <= diam = {diam}"
        )
    dist = sp.astype(float) / diam
    ms = validate_metric(dist)
    level = LevelSpec(n, ms.dist, 1.0 / diam)
    return ms, ProductTreeSpec(alpha, (level,))


def gnhalf_fractal_level(n: int, seed: int) -> MetricSpace:
    """G(n, 1/2) level: adjacent pairs at distance 1, the rest at distance 2."""
    if n < 3:
        raise ValidationError("need n >= 3")
    rng = np.random.default_rng(seed)
    edge = rng.random((n, n)) < 0.5
    edge = np.triu(edge, 1)
    dist = np.where(edge | edge.T, 1.0, 2.0)
    np.fill_diagonal(dist, 0.0)
    return validate_metric(dist)


def largest_cluster_subset(ms: MetricSpace) -> int:
    """Largest subset whose distance-1 graph is a disjoint union of cliques.

    In a {1,2}-valued space these are exactly the subsets of ultrametric
    distortion < 2 (an induced near-pair a-b, b-c, a!~c is the only way the
    strong triangle inequality can fail).  Exact branch-and-bound on induced
    paths; n <= 30.
    """
    n = ms.n
    if n > 30:
        raise TooLarge("exact cluster-subset search limited to 30 points")
    vals = set(np.unique(ms.dist[np.triu_indices(n, 1)]).tolist()) if n > 1 else set()
    if not vals <= {1.0, 2.0}:
        raise ValidationError("expected a {1,2}-valued metric")
    adj = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and ms.dist[i, j] == 1.0:
                adj[i] |= 1 << j

    full = (1 << n) - 1
    memo: dict[int, int] = {}

    def find_p3(mask: int) -> Optional[tuple[int, int, int]]:
        """Induced path a-b-c: edges ab and bc present, edge ac absent."""
        mm = mask
        while mm:
            b = mm & -mm
            bi = b.bit_length() - 1
            mm ^= b
            nb = adj[bi] & mask
            aa = nb
            while aa:
                ab = aa & -aa
                ai = ab.bit_length() - 1
                aa ^= ab
                cc = nb & ~adj[ai] & ~ab
                if cc:
                    ci = (cc & -cc).bit_length() - 1
                    return ai, bi, ci
        return None

    best = 0

    def solve(mask: int) -> None:
        nonlocal best
        if mask in memo:
            return
        memo[mask] = 1
        size = bin(mask).count("1")
        if size <= best:
            return
        p3 = find_p3(mask)
        if p3 is None:
            best = max(best, size)
            return
        for v in p3:
            solve(mask & ~(1 << v))

    solve(full)
    return best
