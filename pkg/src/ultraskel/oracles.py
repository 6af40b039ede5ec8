"""Independent exact ground-truth computations used by tests and certificates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import DegenerateRho, TooLarge, ValidationError
from .metric import MetricSpace

__all__ = [
    "SubdominantUltrametric",
    "subdominant",
    "subdominant_exact",
    "subdominant_relaxation",
    "optimal_ultrametric_distortion_exact",
    "optimal_ultrametric_distortion",
    "distortion_of_pair",
    "min_cost_set_cover",
    "brute_force_ramsey",
]


@dataclass(frozen=True)
class SubdominantUltrametric:
    """Minimax-path distances: the pointwise-largest ultrametric below d."""

    matrix: np.ndarray


def _as_matrix(ms) -> np.ndarray:
    if isinstance(ms, MetricSpace):
        return np.asarray(ms.dist)
    return np.asarray(ms, dtype=float)


def subdominant(ms) -> SubdominantUltrametric:
    """Single-linkage / maximum-spanning computation of minimax distances.

    u(x, y) = min over chains x = z0, ..., zm = y of max_i d(z_i, z_{i+1}),
    computed from a minimum spanning tree in O(n^2) plus one DFS per vertex.
    """
    d = _as_matrix(ms)
    n = d.shape[0]
    if n == 1:
        return SubdominantUltrametric(np.zeros((1, 1)))
    # Prim MST
    in_tree = np.zeros(n, dtype=bool)
    best = d[0].copy()
    best_edge = np.zeros(n, dtype=int)
    in_tree[0] = True
    best[0] = np.inf
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for _ in range(n - 1):
        v = int(np.argmin(np.where(in_tree, np.inf, best)))
        u = int(best_edge[v])
        adj[u].append((v, float(d[u, v])))
        adj[v].append((u, float(d[u, v])))
        in_tree[v] = True
        upd = d[v] < best
        best = np.where(upd & ~in_tree, d[v], best)
        best_edge = np.where(upd & ~in_tree, v, best_edge)
    out = np.zeros((n, n))
    for s in range(n):
        stack = [(s, 0.0)]
        seen = {s}
        while stack:
            u, acc = stack.pop()
            out[s, u] = acc
            for v, w in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append((v, max(acc, w)))
    out = np.minimum(out, out.T)
    return SubdominantUltrametric(out)


def subdominant_exact(matrix):
    """Exact-rational minimax distances by (min, max)-closure; n <= 64."""
    n = len(matrix)
    if n > 64:
        raise TooLarge("exact subdominant limited to 64 points")
    u = [[Fraction(x) for x in row] for row in matrix]
    for k in range(n):
        rowk = u[k]
        for i in range(n):
            uik = u[i][k]
            rowi = u[i]
            for j in range(n):
                m = uik if uik > rowk[j] else rowk[j]
                if m < rowi[j]:
                    rowi[j] = m
    return u


def optimal_ultrametric_distortion_exact(matrix) -> Fraction:
    """Exact max d/u over pairs, as a Fraction."""
    d = [[Fraction(x) for x in row] for row in matrix]
    u = subdominant_exact(d)
    n = len(d)
    best = Fraction(0)
    for i in range(n):
        for j in range(i + 1, n):
            q = d[i][j] / u[i][j]
            if q > best:
                best = q
    return best


def subdominant_relaxation(ms) -> np.ndarray:
    """O(n^3) (min, max)-closure cross-check for the single-linkage route."""
    d = _as_matrix(ms).copy()
    n = d.shape[0]
    for k in range(n):
        d = np.minimum(d, np.maximum(d[:, k][:, None], d[k, :][None, :]))
    return d


def optimal_ultrametric_distortion(ms) -> float:
    """Least D such that some ultrametric rho has d <= rho <= D * d."""
    d = _as_matrix(ms)
    n = d.shape[0]
    if n < 2:
        raise ValidationError("distortion needs at least 2 points")
    u = subdominant(d).matrix
    iu = np.triu_indices(n, 1)
    return float((d[iu] / u[iu]).max())


def distortion_of_pair(d, rho, subset: Optional[Sequence[int]] = None) -> float:
    """Scale-optimal distortion (max rho/d) * (max d/rho) over distinct pairs."""
    d = _as_matrix(d)
    rho = _as_matrix(rho)
    if subset is not None:
        idx = np.asarray(list(subset), dtype=int)
        d = d[np.ix_(idx, idx)]
        if rho.shape[0] != len(idx):
            rho = rho[np.ix_(idx, idx)]
    n = d.shape[0]
    if n < 2:
        return 1.0
    iu = np.triu_indices(n, 1)
    dd, rr = d[iu], rho[iu]
    if np.any(rr <= 0):
        raise DegenerateRho("rho must be positive off the diagonal")
    return float((rr / dd).max() * (dd / rr).max())


def min_cost_set_cover(n_universe: int, sets: Sequence[tuple[int, float]]) -> float:
    """Exact minimum-cost cover of {0..n_universe-1} by subset-mask DP.

    ``sets`` is a sequence of (bitmask, cost) pairs.  Returns +inf when no
    cover exists.
    """
    if n_universe > 20:
        raise TooLarge("exact set cover limited to universes of size 20")
    full = (1 << n_universe) - 1
    if n_universe == 0:
        return 0.0
    # keep only the cheapest set per mask, drop empties
    best_for: dict[int, float] = {}
    for mask, cost in sets:
        mask &= full
        if mask and (mask not in best_for or cost < best_for[mask]):
            best_for[mask] = float(cost)
    cands = sorted(best_for.items())
    by_element: list[list[tuple[int, float]]] = [[] for _ in range(n_universe)]
    for mask, cost in cands:
        for e in range(n_universe):
            if mask >> e & 1:
                by_element[e].append((mask, cost))
    INF = math.inf
    dp = np.full(full + 1, INF)
    dp[full] = 0.0
    # dp[m] = min cost to cover the elements missing from m, filling lowest first
    for m in range(full - 1, -1, -1):
        missing = ~m & full
        e = (missing & -missing).bit_length() - 1
        acc = INF
        for mask, cost in by_element[e]:
            nxt = dp[m | mask]
            if nxt + cost < acc:
                acc = nxt + cost
        dp[m] = acc
    return float(dp[0])


def brute_force_ramsey(ms, w, D: float, theta: Optional[float] = None) -> float:
    """Best achievable sum of w**theta(D) over subsets of distortion <= D.

    Exhaustive over all nonempty subsets; n <= 10.  For D <= 2 (where theta(D)
    is undefined) an explicit exponent must be supplied.
    """
    d = _as_matrix(ms)
    n = d.shape[0]
    if n > 10:
        raise TooLarge("brute-force Ramsey limited to 10 points")
    if theta is None:
        from .ramsey import theta_of_D

        theta = theta_of_D(D).theta
    wp = [float(x) ** theta for x in np.asarray(w, dtype=float)]
    best = 0.0
    for size in range(1, n + 1):
        for sub in combinations(range(n), size):
            if size >= 2:
                dd = d[np.ix_(sub, sub)]
                if optimal_ultrametric_distortion(dd) > D:
                    continue
            val = math.fsum(wp[i] for i in sub)
            if val > best:
                best = val
    return best
