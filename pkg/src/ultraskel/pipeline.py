"""End-to-end skeleton extraction with certified covering/cut-set inequalities.

Assembly order: greedy initial partition -> block sparsification -> restriction
to the separated set S with conserved checkpoint weights -> metric composition
(per-vertex weighted subset extraction at distortion D') -> certificates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DeltaOutOfRange,
    NotSeparated,
    NotSubadditive,
    ParamOutOfRange,
    TooLargeForExact,
    ValidationError,
)
from .initial import PartitionBuildParams, build_initial_partition
from .metric import MeasuredMetricSpace, MetricSpace, normalize_diameter
from .oracles import distortion_of_pair, min_cost_set_cover
from .ramsey import dvoretzky_subset, theta_inverse, theta_of_D
from .sparsify import SparsifiedTree, sparsify_tree
from .trees import (
    FragmentationMap,
    RootedTree,
    boundary_masks,
    is_lacunary,
    is_separated,
    min_cutset_cost,
    points_of,
    ultrametric_from_lacunary,
    validate_fragmentation,
)

__all__ = [
    "PipelineParams",
    "SkeletonResult",
    "CoverVerdict",
    "metric_composition",
    "build_skeleton",
    "solve_measure",
    "solve_measure_2plus",
    "verify_cover",
]

_SLACK = 1e-9


@dataclass(frozen=True)
class PipelineParams:
    """Resolved parameters of one skeleton run.

    Derived quantities: h = 2k^2, beta = (1-3 tau)/(2 tau), the composition
    distortion D' = D (1-3 tau)/(1+tau) and the certified cut-set exponent
    s = (1 - 1/k)^2 * theta(D').
    """

    D: float
    k: int
    tau: float
    mode: str = "raw"
    epsilon: Optional[float] = None
    delta: Optional[float] = None
    m: Optional[int] = None
    flagged: bool = False

    def __post_init__(self):
        if not self.D > 2:
            raise ParamOutOfRange(f"need D > 2, got {self.D}")
        if self.k < 2:
            raise ParamOutOfRange("k must be an integer >= 2")
        hi = (self.D - 2.0) / (3.0 * self.D + 2.0)
        if not 0 < self.tau < hi:
            raise ParamOutOfRange(
                f"tau must lie in (0, {hi}) for D={self.D}, got {self.tau}"
            )

    @property
    def h(self) -> int:
        return 2 * self.k * self.k

    @property
    def beta(self) -> float:
        return (1.0 - 3.0 * self.tau) / (2.0 * self.tau)

    @property
    def Dprime(self) -> float:
        return self.D * (1.0 - 3.0 * self.tau) / (1.0 + self.tau)

    @property
    def theta(self) -> float:
        return theta_of_D(self.Dprime).theta

    @property
    def s(self) -> float:
        return (1.0 - 1.0 / self.k) ** 2 * self.theta

    @property
    def log_K(self) -> float:
        return (
            math.log(2.0)
            - math.log(1.0 - 3.0 * self.tau)
            + 4.0 * self.k * self.k * math.log(1.0 / self.tau)
        )

    @property
    def log_gamma(self) -> float:
        return 4.0 * self.k * self.k * math.log(1.0 / self.tau)

    @property
    def cover_const_log(self) -> float:
        # log(1 + 2 K^2 gamma), stable for huge K, gamma
        t = math.log(2.0) + 2.0 * self.log_K + self.log_gamma
        return t + math.log1p(math.exp(-t))

    @classmethod
    def from_epsilon(cls, epsilon: float) -> "PipelineParams":
        if not 0 < epsilon < 1:
            raise ParamOutOfRange(f"epsilon must lie in (0,1), got {epsilon}")
        k = math.ceil(10.0 / epsilon)
        tau = 0.1  # (1+tau)/(1-3tau) = 11/7, matching the D formula below
        x = (1.0 - epsilon) / (1.0 - 1.0 / k) ** 2
        D = (11.0 / 7.0) * theta_inverse(x)
        return cls(D=D, k=k, tau=tau, mode="epsilon", epsilon=epsilon)

    @classmethod
    def from_delta(cls, delta: float) -> "PipelineParams":
        if 0 < delta < 1 / 3:
            tau, flagged = delta / 9.0, False
        elif 1 / 3 <= delta < 1 / 2:
            # delta/9 violates tau < (D-2)/(3D+2) = delta/(3 delta+8) here
            tau, flagged = delta / 10.0, True
        else:
            raise DeltaOutOfRange(f"delta must lie in (0, 1/2), got {delta}")
        return cls(D=2.0 + delta, k=2, tau=tau, mode="delta", delta=delta, flagged=flagged)


@dataclass
class SkeletonResult:
    subset: list[int]
    rho: np.ndarray
    frag: FragmentationMap
    distortion: float
    exponent: float
    certificate: dict
    params: PipelineParams
    space: MeasuredMetricSpace  # normalized to diameter 1
    scale: float
    simple: bool = False


def _induced_tree(tree: RootedTree, vertices) -> tuple[RootedTree, list[int]]:
    """Tree induced on a vertex subset by the ancestor relation."""
    verts = sorted(vertices, key=lambda v: (tree.depth[v], v))
    pos = {v: i for i, v in enumerate(verts)}
    vset = set(verts)
    parent = [-1] * len(verts)
    for v in verts:
        u = v
        while u != tree.root:
            u = tree.parent[u]
            if u in vset:
                parent[pos[v]] = pos[u]
                break
    return RootedTree(parent), verts


def _checkpoint_weights(
    st: SparsifiedTree, masses: Sequence[float], k: int
) -> tuple[dict, dict]:
    """w_R: conserved top-down split of mu(X)^((1-1/k)^2) along checkpoint
    levels, proportional to the kept clusters' mass powers; w_S aggregates it
    at the separated vertices."""
    tree = st.tree
    e2 = (1.0 - 1.0 / k) ** 2
    w_R: dict[int, float] = {}
    order = sorted(st.R, key=lambda v: (tree.depth[v], v))
    w_R[tree.root] = float(masses[tree.root]) ** e2
    for u in order:
        if tree.is_leaf(u):
            continue
        kids = st.r_descendants(u)
        if not kids:
            continue
        parts = [float(masses[v]) ** e2 for v in kids]
        denom = math.fsum(parts)
        for v, p in zip(kids, parts):
            w_R[v] = w_R[u] * p / denom
    w_S: dict[int, float] = {}
    for u in st.S:
        if u in st.R:
            w_S[u] = w_R[u]
        else:
            w_S[u] = math.fsum(w_R[z] for z in st.r_descendants(u))
    return w_R, w_S


@dataclass
class CompositionResult:
    kept: set
    rho: np.ndarray  # on the sorted boundary points of the kept subtree
    points: list[int]
    theta: float


def metric_composition(
    frag2: FragmentationMap,
    dist: np.ndarray,
    w_S: Sequence[float],
    beta: float,
    Dprime: float,
    *,
    check: bool = True,
) -> CompositionResult:
    """Per-vertex pruning of a separated fragmentation map.

    At every kept non-leaf u the children are compared under the child metric
    d_u(x, y) = diam(boundary(x) union boundary(y)); a weighted subset of the
    children at distortion D' is kept, and its ultrametric (truncated at the
    kept boundary diameter) prices all pairs splitting at u.  The assembled
    rho is an ultrametric with d <= rho <= D' (1 + 2/beta) d.
    """
    tree = frag2.tree
    if not Dprime > 2:
        raise ParamOutOfRange(f"metric composition needs D' > 2, got {Dprime}")
    bnds = boundary_masks(frag2)
    if check:
        ok, wit = is_separated(frag2, dist, beta, range(tree.n))
        if not ok:
            raise NotSeparated(f"separation fails at vertex pair {wit}")
        for u in range(tree.n):
            if tree.children[u]:
                s = math.fsum(float(w_S[c]) for c in tree.children[u])
                if float(w_S[u]) > s * (1 + 1e-9):
                    raise NotSubadditive(f"w_S not subadditive at {u}")

    theta = theta_of_D(Dprime).theta
    kept = {tree.root}
    rho_u: dict[int, tuple[list[int], np.ndarray]] = {}
    for u in tree.bfs_order():
        if u not in kept or tree.is_leaf(u):
            continue
        kids = list(tree.children[u])
        if len(kids) == 1:
            kept.add(kids[0])
            continue
        pts_of = [points_of(bnds[c]) for c in kids]
        nn = len(kids)
        dbar = np.zeros((nn, nn))
        for i in range(nn):
            for j in range(i + 1, nn):
                both = pts_of[i] + pts_of[j]
                idx = np.asarray(both)
                dbar[i, j] = dbar[j, i] = float(dist[np.ix_(idx, idx)].max())
        res = dvoretzky_subset(
            MetricSpace(dbar), [float(w_S[c]) for c in kids], Dprime
        )
        sel = res.subset
        if res.power_sum < float(w_S[u]) ** theta * (1 - 1e-9):
            raise ValidationError(f"composition weight inequality failed at {u}")
        keep_pts = [p for i in sel for p in pts_of[i]]
        cap = float(dist[np.ix_(keep_pts, keep_pts)].max()) if len(keep_pts) > 1 else 0.0
        rho_local = np.minimum(res.rho, cap)
        np.fill_diagonal(rho_local, 0.0)
        rho_u[u] = ([kids[i] for i in sel], rho_local)
        kept.update(kids[i] for i in sel)

    # assemble the global ultrametric on the kept boundary
    leaf_pt: dict[int, int] = {}
    for v in tree.leaves():
        if v in kept:
            pts = frag2.cluster_points(v)
            leaf_pt[v] = pts[0]
    leaves = sorted(leaf_pt, key=lambda v: leaf_pt[v])
    points = [leaf_pt[v] for v in leaves]
    m = len(leaves)
    rho = np.zeros((m, m))
    # child-of-lca ancestor for each (leaf, lca) pair via upward walks
    for i in range(m):
        for j in range(i + 1, m):
            a, b = leaves[i], leaves[j]
            u = tree.lca(a, b)
            x = a
            while tree.parent[x] != u:
                x = tree.parent[x]
            y = b
            while tree.parent[y] != u:
                y = tree.parent[y]
            sel, mat = rho_u[u]
            rho[i, j] = rho[j, i] = float(mat[sel.index(x), sel.index(y)])
    return CompositionResult(kept, rho, points, theta)


def _trivial_result(X: MeasuredMetricSpace, params: PipelineParams, simple: bool) -> SkeletonResult:
    tree = RootedTree([-1])
    frag = FragmentationMap(tree, (1,), 1)
    cert = {
        "cutset_min": float(X.mu[0]) ** (params.s if not simple else (1 - 1 / params.k) ** 2),
        "bound": float(X.mu[0]) ** (params.s if not simple else (1 - 1 / params.k) ** 2),
        "cutset_ok": True,
        "exponent_s": params.s if not simple else (1 - 1 / params.k) ** 2,
        "K_log": params.log_K,
        "gamma_log": params.log_gamma,
        "cover_const_log": params.cover_const_log,
        "lacunary_ok": True,
        "separated_ok": True,
        "leaf_ok": True,
        "rho_bounds_ok": True,
        "distortion_ok": True,
        "ok": True,
    }
    return SkeletonResult(
        subset=[0],
        rho=np.zeros((1, 1)),
        frag=frag,
        distortion=1.0,
        exponent=cert["exponent_s"],
        certificate=cert,
        params=params,
        space=X,
        scale=1.0,
        simple=simple,
    )


def build_intermediate(X: MeasuredMetricSpace, params: PipelineParams):
    """First two pipeline stages, exposed for verification.

    Returns (frag1, R1, S1, wt0, st) where frag1 is the initial partition map
    restricted to the sparsified subtree (vertices renumbered) and R1/S1 are
    the checkpoint/separated sets in the renumbered tree.
    """
    ms_norm, _ = normalize_diameter(X.space)
    Xn = MeasuredMetricSpace(ms_norm, X.mu)
    build = PartitionBuildParams(tau=params.tau, h=params.h, k=params.k, m=params.m)
    frag0, wt0 = build_initial_partition(Xn, build)
    st = sparsify_tree(wt0)
    tree1, orig1 = _induced_tree(st.tree, st.kept)
    pos = {v: i for i, v in enumerate(orig1)}
    frag1 = FragmentationMap(
        tree1, tuple(frag0.clusters[v] for v in orig1), frag0.n_points
    )
    R1 = frozenset(pos[v] for v in st.R)
    S1 = frozenset(pos[v] for v in st.S)
    return frag1, R1, S1, wt0, st


def build_skeleton(
    X: MeasuredMetricSpace,
    params: PipelineParams,
    *,
    simple: bool = False,
    check_identity: bool = False,
) -> SkeletonResult:
    """Run the full pipeline on a metric measure space.

    The returned certificate carries the cut-set DP minimum against the bound
    mu(X)**s, the lacunarity/separation/leaf checks on the final map, and the
    achieved distortion; rho is reported in the *normalized* (diameter-1)
    units of ``result.space``.
    """
    if X.n == 1:
        return _trivial_result(X, params, simple)
    ms_norm, scale = normalize_diameter(X.space)
    Xn = MeasuredMetricSpace(ms_norm, X.mu)
    dist = np.asarray(ms_norm.dist)

    build = PartitionBuildParams(tau=params.tau, h=params.h, k=params.k, m=params.m)
    frag0, wt0 = build_initial_partition(Xn, build)
    st = sparsify_tree(wt0)
    w_R, w_S = _checkpoint_weights(st, wt0.w, params.k)

    tree2, orig2 = _induced_tree(st.tree, sorted(st.S))
    clusters2 = tuple(frag0.clusters[v] for v in orig2)
    frag2 = FragmentationMap(tree2, clusters2, frag0.n_points)
    wS2 = [w_S[v] for v in orig2]

    mass_X = Xn.mass()
    e2 = (1.0 - 1.0 / params.k) ** 2

    if simple:
        pts, rho = ultrametric_from_lacunary(frag2, dist)
        exponent = e2
        tree3, orig3 = tree2, list(range(tree2.n))
        frag3 = frag2
    else:
        comp = metric_composition(frag2, dist, wS2, params.beta, params.Dprime)
        pts, rho = comp.points, comp.rho
        exponent = e2 * comp.theta
        tree3, orig3 = _induced_tree(tree2, comp.kept)
        frag3 = FragmentationMap(
            tree3, tuple(clusters2[v] for v in orig3), frag0.n_points
        )

    validate_fragmentation(frag3)

    leaf_ok = True
    for leaf in tree3.leaves():
        p = tree3.parent[leaf]
        if p >= 0:
            sibs = [c for c in tree3.children[p] if c != leaf]
            if sibs or frag3.clusters[p] != frag3.clusters[leaf]:
                leaf_ok = False

    lac_ok, _ = is_lacunary(
        frag3, dist, log_K=params.log_K, log_gamma=params.log_gamma
    )
    sep_ok, _ = is_separated(frag3, dist, params.beta, range(tree3.n))

    # cut-set certificate: cost(v) = mass of the parent's cluster (root: itself)
    masses3 = []
    for v in range(tree3.n):
        p = tree3.parent[v] if tree3.parent[v] >= 0 else v
        masses3.append(wt0.w[orig2[orig3[p]]])
    cut_min = min_cutset_cost(tree3, masses3, exponent)
    bound = mass_X**exponent
    cut_ok = cut_min >= bound - _SLACK * max(bound, 1.0)

    sub_d = dist[np.ix_(pts, pts)]
    if len(pts) > 1:
        achieved = distortion_of_pair(sub_d, rho)
        lo_ok = bool(np.all(rho >= sub_d * (1 - 1e-12)))
        if simple:
            iu = np.triu_indices(len(pts), 1)
            hi_ok = bool(
                np.all(
                    np.log(rho[iu]) <= np.log(sub_d[iu]) + params.log_K + 1e-12
                )
            )
            dist_ok = math.log(achieved) <= params.log_K + _SLACK
        else:
            hi_ok = bool(np.all(rho <= params.D * sub_d * (1 + 1e-12)))
            dist_ok = achieved <= params.D * (1 + _SLACK)
    else:
        achieved, lo_ok, hi_ok, dist_ok = 1.0, True, True, True

    cert = {
        "exponent_s": exponent,
        "cutset_min": float(cut_min),
        "bound": float(bound),
        "cutset_ok": bool(cut_ok),
        "K_log": params.log_K,
        "gamma_log": params.log_gamma,
        "cover_const_log": params.cover_const_log,
        "lacunary_ok": bool(lac_ok),
        "separated_ok": bool(sep_ok),
        "leaf_ok": bool(leaf_ok),
        "rho_bounds_ok": bool(lo_ok and hi_ok),
        "distortion_ok": bool(dist_ok),
    }
    cert["ok"] = all(
        cert[k]
        for k in (
            "cutset_ok",
            "lacunary_ok",
            "separated_ok",
            "leaf_ok",
            "rho_bounds_ok",
            "distortion_ok",
        )
    )
    return SkeletonResult(
        subset=list(pts),
        rho=np.asarray(rho),
        frag=frag3,
        distortion=float(achieved),
        exponent=float(exponent),
        certificate=cert,
        params=params,
        space=Xn,
        scale=scale,
        simple=simple,
    )


def solve_measure(X: MeasuredMetricSpace, epsilon: float, **kw) -> SkeletonResult:
    """Distortion <= 9/epsilon with cut-set/cover exponent 1 - epsilon."""
    params = PipelineParams.from_epsilon(epsilon)
    if params.D > 9.0 / epsilon:
        raise ParamOutOfRange(f"derived D={params.D} exceeds 9/epsilon")
    res = build_skeleton(X, params, **kw)
    if not res.simple and abs(res.exponent - (1.0 - epsilon)) > 1e-9:
        raise ValidationError(
            f"exponent drifted: {res.exponent} vs 1-eps={1.0 - epsilon}"
        )
    return res


def solve_measure_2plus(X: MeasuredMetricSpace, delta: float, **kw) -> SkeletonResult:
    """Distortion <= 2 + delta; k = 2 and tau = delta/9 (delta/10 if flagged)."""
    params = PipelineParams.from_delta(delta)
    return build_skeleton(X, params, **kw)


@dataclass(frozen=True)
class CoverVerdict:
    ok: bool
    min_cost: float
    bound: float
    trivialized: bool
    singleton_ok: bool
    n_candidates: int
    mode: str


def verify_cover(
    result: SkeletonResult,
    X: Optional[MeasuredMetricSpace] = None,
    s: Optional[float] = None,
    *,
    mode: str = "exact",
    trials: int = 200,
    seed: int = 0,
) -> CoverVerdict:
    """Check the covering inequality against the extracted subset.

    Exact mode minimizes sum mu(B(x, c r))**s over all covers of the subset by
    candidate balls (centers anywhere, radii 0 or a subset distance) with a
    subset-mask set-cover DP; c = 1 + 2 K^2 gamma is applied in log-domain.
    When c exceeds diam/min-distance every inflated ball of positive radius is
    the whole space and the verdict is flagged as trivialized for that family.
    """
    if X is None:
        X = result.space
    if s is None:
        s = result.exponent
    S = result.subset
    u = len(S)
    dist = np.asarray(X.space.dist)
    mu = np.asarray(X.mu)
    mass = X.mass()
    bound = mass**s
    log_c = result.certificate["cover_const_log"]
    diam = X.space.diameter()
    min_d = X.space.min_distance()
    trivialized = bool(log_c >= math.log(diam) - math.log(min_d)) if u > 1 else True

    singleton = math.fsum(float(mu[x]) ** s for x in S)
    singleton_ok = singleton >= bound - _SLACK * max(bound, 1.0)

    cands: list[tuple[int, float]] = []
    n = X.n
    for x in range(n):
        radii = {0.0}
        radii.update(float(dist[x, p]) for p in S)
        for r in radii:
            mask = 0
            for i, p in enumerate(S):
                if dist[x, p] <= r:
                    mask |= 1 << i
            if not mask:
                continue
            if r == 0.0:
                infl = 0.0
            elif log_c + math.log(r) >= math.log(diam):
                infl = diam
            else:
                infl = math.exp(log_c + math.log(r))
            cost = X.ball_mass(x, infl) ** s
            cands.append((mask, cost))

    if mode == "exact":
        if u > 20:
            raise TooLargeForExact("exact cover verification limited to 20 points")
        best = min_cost_set_cover(u, cands)
    elif mode == "sampling":
        rng = np.random.default_rng(seed)
        best = math.inf
        for _ in range(trials):
            order = rng.permutation(len(cands))
            covered, total = 0, 0.0
            full = (1 << u) - 1
            for ci in order:
                mask, cost = cands[ci]
                if mask & ~covered:
                    covered |= mask
                    total += cost
                    if covered == full:
                        break
            if covered == full and total < best:
                best = total
    else:
        raise ValidationError(f"unknown cover mode {mode!r}")

    ok = best >= bound - _SLACK * max(bound, 1.0)
    return CoverVerdict(
        ok=bool(ok and singleton_ok),
        min_cost=float(best),
        bound=float(bound),
        trivialized=trivialized,
        singleton_ok=bool(singleton_ok),
        n_candidates=len(cands),
        mode=mode,
    )
