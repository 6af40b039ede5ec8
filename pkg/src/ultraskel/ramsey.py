"""Weighted ultrametric Ramsey extraction via random-radii ball carving.

The subset is grown through a sequence of carving stages with shrinking radii
(r_n, R_n), R_n = r_n + 2 r_{n-1} / D.  Points captured inside a small ball
survive; points seen only inside the enclosing large ball are discarded, so
surviving clusters stay at least (R_n - r_n) apart and the first stage that
separates two survivors prices their ultrametric distance at 2 r_{n-1}.

The radii depend on one uniform shift delta in [0, 1]:

    r_0 = 1,   r_n = sigma**(n - 1 + delta),   sigma = (1 - eps)**(1/eps).

With this rule the shift-measure of {r_n < t <= R_n for some n} is at most
eps for every t, with equality on a dense set of scales; that is exactly what
the weight guarantee needs.  Derandomization enumerates the shift breakpoints
at which any pairwise distance crosses any r_n or R_n, evaluates one
representative shift per interval, and returns the best interval, which is
certified to be at least the shift-average and hence at least the target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ValidationError
from .metric import MetricSpace

__all__ = [
    "ThetaParams",
    "theta_of_D",
    "theta_inverse",
    "distortion_bound",
    "RadiiSchedule",
    "radii_schedule",
    "ClusterStage",
    "carve",
    "evaluate_shift",
    "shift_breakpoints",
    "RamseyCertificate",
    "RamseyResult",
    "ramsey_subset",
    "dvoretzky_subset",
]


@dataclass(frozen=True)
class ThetaParams:
    D: float
    theta: float


def _theta_residual(theta: float, D: float) -> float:
    return (1.0 - theta) * theta ** (theta / (1.0 - theta)) - 2.0 / D


def theta_of_D(D: float) -> ThetaParams:
    """Unique root of (1-theta) * theta**(theta/(1-theta)) = 2/D, D > 2.

    Bisection to well below 1e-12 residual; the returned value is the lower
    bracket end, so every downstream >=-inequality stated with this exponent
    remains sound.
    """
    if not D > 2:
        raise DomainError(f"theta(D) needs D > 2, got {D}")
    lo, hi = 1e-300, 1.0 - 1e-16
    # residual is decreasing in theta: positive at lo, negative at hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _theta_residual(mid, D) >= 0:
            lo = mid
        else:
            hi = mid
    return ThetaParams(D, lo)


def theta_inverse(s: float) -> float:
    """Closed form: theta^{-1}(s) = 2 (1-s)^{-1} s^{-s/(1-s)} for s in (0,1)."""
    if not 0 < s < 1:
        raise DomainError(f"theta_inverse needs s in (0,1), got {s}")
    return 2.0 / (1.0 - s) * s ** (-s / (1.0 - s))


def distortion_bound(eps: float) -> float:
    """D(eps) = 2 / (eps * (1-eps)**((1-eps)/eps))."""
    if not 0 < eps < 1:
        raise DomainError(f"epsilon must lie in (0,1), got {eps}")
    return 2.0 / (eps * (1.0 - eps) ** ((1.0 - eps) / eps))


@dataclass(frozen=True)
class RadiiSchedule:
    """Non-increasing radii r_0 = 1 >= r_1 >= ... -> 0 for one shift value."""

    epsilon: float
    sigma: float
    D: float
    shift: float

    def r(self, n: int) -> float:
        if n == 0:
            return 1.0
        return self.sigma ** (n - 1 + self.shift)

    def R(self, n: int) -> float:
        return self.r(n) + 2.0 * self.r(n - 1) / self.D

    def cutoff(self, min_dist: float) -> int:
        """First n with R(n) < min_dist; stages beyond it move nothing."""
        if not min_dist > 0:
            raise DomainError("cutoff needs a positive minimum distance")
        n = 1
        while self.R(n) >= min_dist:
            n += 1
        return n

    def hit_measure(self, t: float, n_max: int = 200) -> float:
        """Shift-measure of {delta : r_n < t <= R_n for some n} (oracle)."""
        total = 0.0
        log_s = math.log(self.sigma)
        for n in range(1, n_max + 1):
            # event for stage n: r_n < t <= R_n, as a shift interval (lo, hi]
            lo = math.log(t) / log_s - (n - 1)
            if n == 1:
                # R_1 = sigma**delta + 2/D
                if t <= 2.0 / self.D:
                    hi = 1.0
                else:
                    hi = math.log(t - 2.0 / self.D) / log_s
            else:
                # R_n = sigma**(n-1+delta-eps)
                hi = math.log(t) / log_s - (n - 1) + self.epsilon
            a, b = max(lo, 0.0), min(hi, 1.0)
            if b > a:
                total += b - a
        return total


def radii_schedule(epsilon: float, shift: float) -> RadiiSchedule:
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0,1), got {epsilon}")
    if not 0 <= shift <= 1:
        raise DomainError(f"shift must lie in [0,1], got {shift}")
    sigma = (1.0 - epsilon) ** (1.0 / epsilon)
    return RadiiSchedule(epsilon, sigma, distortion_bound(epsilon), shift)


@dataclass(frozen=True)
class ClusterStage:
    """One carving stage: disjoint clusters, each within a radius-r ball."""

    n: int
    r: float
    R: float
    clusters: tuple[tuple[int, ...], ...]
    centers: tuple[int, ...]


def carve(
    dist: np.ndarray,
    S: Sequence[int],
    f: Sequence[float],
    r: float,
    R: float,
    mu: Sequence[float],
    *,
    stage_index: int = 0,
    check_identity: bool = False,
) -> ClusterStage:
    """Greedy ball carving with the captured-weight guarantee.

    Repeatedly picks the center y (over all of X) maximizing A(y) - B(y),
    where A counts the capture ball B(y, r) with weights scaled by the ball
    mass ratio mu(B(x,R))/mu(B(x,r)) and B counts the deletion ball B(y, R);
    the capture ball becomes a cluster and the deletion ball leaves S.  The
    averaging identity sum_y A(y) mu(y) = sum_y B(y) mu(y) forces the best
    margin to be nonnegative, which telescopes into

        sum over captured x of ratio(x) f(x) mu(x)  >=  sum over S of f mu.
    """
    if not R > r or r < 0:
        raise DomainError("carve needs R > r >= 0")
    dist = np.asarray(dist)
    n = dist.shape[0]
    if len(f) != len(S):
        raise ValidationError("f must be indexed parallel to S")
    mu = np.asarray(mu, dtype=float)
    fvec = np.zeros(n)
    alive = np.zeros(n, dtype=bool)
    for idx, x in enumerate(S):
        alive[x] = True
        fvec[x] = float(f[idx])
    in_r = dist <= r
    in_R = dist <= R
    ball_r_mass = in_r @ mu
    ball_R_mass = in_R @ mu
    ratio = ball_R_mass / ball_r_mass
    clusters: list[tuple[int, ...]] = []
    centers: list[int] = []
    while alive.any():
        g = np.where(alive, ratio * fvec * mu, 0.0)
        b = np.where(alive, fvec * mu, 0.0)
        A = in_r @ g
        B = in_R @ b
        if check_identity:
            lhs = float(np.dot(A, mu))
            rhs = float(np.dot(B, mu))
            scale = max(abs(lhs), abs(rhs), 1.0)
            if abs(lhs - rhs) > 1e-9 * scale:
                raise ValidationError(
                    f"carve averaging identity off: {lhs} != {rhs}"
                )
        margin = A - B
        has_capture = (in_r & alive[None, :]).any(axis=1)
        margin = np.where(has_capture, margin, -np.inf)
        y = int(np.argmax(margin))
        captured = np.nonzero(in_r[y] & alive)[0]
        clusters.append(tuple(int(x) for x in captured))
        centers.append(y)
        alive &= ~in_R[y]
    return ClusterStage(stage_index, r, R, tuple(clusters), tuple(centers))


def shift_breakpoints(dist: np.ndarray, epsilon: float) -> list[float]:
    """Shift values at which some pairwise distance crosses some r_n or R_n.

    Crossings of r_n land at frac(log_sigma t); crossings of R_n for n >= 2
    land at frac(log_sigma t + eps) because R_n = sigma**(n-1-eps+delta);
    stage 1 has R_1 = sigma**delta + 2/D, contributing log_sigma(t - 2/D).
    """
    sigma = (1.0 - epsilon) ** (1.0 / epsilon)
    D = distortion_bound(epsilon)
    log_s = math.log(sigma)
    n = dist.shape[0]
    iu = np.triu_indices(n, 1)
    ts = np.unique(dist[iu])
    pts = {0.0, 1.0}
    for t in ts:
        t = float(t)
        if t <= 0:
            continue
        x = math.log(t) / log_s
        pts.add(x % 1.0)
        pts.add((x + epsilon) % 1.0)
        if t > 2.0 / D:
            y = math.log(t - 2.0 / D) / log_s
            if 0.0 <= y <= 1.0:
                pts.add(y)
    return sorted(pts)


def evaluate_shift(
    dist: np.ndarray,
    w1: np.ndarray,
    w2: np.ndarray,
    epsilon: float,
    shift: float,
    *,
    collect: bool = False,
    check_identity: bool = False,
):
    """Run the full carving pipeline at one shift value.

    Returns (score, survivors) or, with ``collect``, (score, survivors,
    schedule, stages) where stages are the ClusterStage records needed to
    price the ultrametric.  ``dist`` must have diameter <= 2.
    """
    sched = radii_schedule(epsilon, shift)
    n = dist.shape[0]
    mu = np.asarray(w2, dtype=float)
    if n == 1:
        out = (float(w1[0]), [0])
        return out + ((sched, []) if collect else ())
    iu = np.triu_indices(n, 1)
    min_dist = float(dist[iu].min())
    N = sched.cutoff(min_dist)
    radii = [(sched.r(m), sched.R(m)) for m in range(1, N)]

    # f_1(x) = (w1/w2)(x) * prod over active stages of mass ratio
    f = np.asarray(w1, dtype=float) / mu
    for r, R in radii:
        br = (dist <= r) @ mu
        bR = (dist <= R) @ mu
        f = f * (br / bR)

    alive = list(range(n))
    stages: list[ClusterStage] = []
    for m, (r, R) in enumerate(radii, start=1):
        stage = carve(
            dist,
            alive,
            [f[x] for x in alive],
            r,
            R,
            mu,
            stage_index=m,
            check_identity=check_identity,
        )
        if collect:
            stages.append(stage)
        alive = sorted(x for cl in stage.clusters for x in cl)
        br = (dist[alive] <= r) @ mu
        bR = (dist[alive] <= R) @ mu
        f[alive] = f[alive] * (bR / br)
        if not alive:
            break
    score = float(math.fsum(float(w1[x]) for x in alive))
    if collect:
        return score, alive, sched, stages
    return score, alive


def _ultrametric_from_stages(
    survivors: list[int], stages: list[ClusterStage], sched: RadiiSchedule
) -> np.ndarray:
    """rho(x, y) = 2 r_{n-1} at the first stage n whose clusters split x, y."""
    m = len(survivors)
    pos = {x: i for i, x in enumerate(survivors)}
    rho = np.zeros((m, m))
    sep = np.zeros((m, m), dtype=bool)
    n_last = 0
    for stage in stages:
        cid = {}
        for ci, cl in enumerate(stage.clusters):
            for x in cl:
                if x in pos:
                    cid[pos[x]] = ci
        for i in range(m):
            for j in range(i + 1, m):
                if not sep[i, j] and cid.get(i) != cid.get(j):
                    sep[i, j] = True
                    rho[i, j] = rho[j, i] = 2.0 * sched.r(stage.n - 1)
        n_last = stage.n
    for i in range(m):
        for j in range(i + 1, m):
            if not sep[i, j]:
                rho[i, j] = rho[j, i] = 2.0 * sched.r(n_last)
    return rho


@dataclass(frozen=True)
class RamseyCertificate:
    shift_interval: tuple[float, float]
    shift: float
    achieved: float
    required: float
    expectation: Optional[float]
    distortion_bound: float
    epsilon: float
    ok: bool


@dataclass(frozen=True)
class RamseyResult:
    subset: list[int]
    rho: np.ndarray
    certificate: RamseyCertificate


def ramsey_subset(
    ms: MetricSpace,
    w1: Sequence[float],
    w2: Sequence[float],
    epsilon: float,
    *,
    mode: str = "derandomized",
    seed: Optional[int] = None,
    check_identity: bool = False,
) -> RamseyResult:
    """Subset with (sum_S w1) * (sum_X w2)**eps >= sum_X w1 * w2**eps and an
    ultrametric within distortion 2/(eps*(1-eps)**((1-eps)/eps)).

    In derandomized mode the guarantee is certified: the returned shift
    interval maximizes sum_S w1 over the breakpoint partition, and that
    maximum dominates the shift-average, which dominates the target.
    Sampled mode draws one shift from ``seed`` and only flags shortfalls.
    """
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    n = ms.n
    if np.any(w1 <= 0) or np.any(w2 <= 0):
        raise DomainError("weights must be strictly positive")
    if not 0 < epsilon < 1:
        raise DomainError(f"epsilon must lie in (0,1), got {epsilon}")
    D = distortion_bound(epsilon)
    total_w2 = math.fsum(w2.tolist())
    required = float(
        math.fsum(
            float(w1[x]) * (float(w2[x]) / total_w2) ** epsilon for x in range(n)
        )
    )
    if n == 1:
        cert = RamseyCertificate((0.0, 1.0), 0.5, float(w1[0]), required, float(w1[0]), D, epsilon, True)
        return RamseyResult([0], np.zeros((1, 1)), cert)

    diam = ms.diameter()
    scale = diam / 2.0
    dist = np.asarray(ms.dist) / scale

    if mode == "derandomized":
        from . import backend

        bps = shift_breakpoints(dist, epsilon)
        mids = [(bps[i] + bps[i + 1]) / 2.0 for i in range(len(bps) - 1)]
        lens = [bps[i + 1] - bps[i] for i in range(len(bps) - 1)]
        scores = backend.sweep_scores(dist, w1, w2, epsilon, np.asarray(mids))
        best = int(np.argmax(scores))
        expectation = float(math.fsum(l * s for l, s in zip(lens, scores)))
        shift = mids[best]
        interval = (bps[best], bps[best + 1])
    elif mode == "sampled":
        if seed is None:
            raise DomainError("sampled mode requires a seed")
        shift = float(np.random.default_rng(seed).random())
        interval = (shift, shift)
        expectation = None
    else:
        raise DomainError(f"unknown mode {mode!r}")

    score, survivors, sched, stages = evaluate_shift(
        dist, w1, w2, epsilon, shift, collect=True, check_identity=check_identity
    )
    rho = _ultrametric_from_stages(survivors, stages, sched) * scale
    ok = score >= required * (1 - 1e-12)
    cert = RamseyCertificate(interval, shift, score, required, expectation, D, epsilon, ok)
    return RamseyResult(survivors, rho, cert)


@dataclass(frozen=True)
class DvoretzkyResult:
    subset: list[int]
    rho: np.ndarray
    theta: float
    power_sum: float
    power_bound: float
    certificate: RamseyCertificate


def dvoretzky_subset(
    ms: MetricSpace, w: Sequence[float], D: float, **kw
) -> DvoretzkyResult:
    """Weighted subset extraction at distortion D > 2.

    Reduces to the two-weight result with w1 = w**theta(D), w2 = w and
    eps = 1 - theta(D), guaranteeing sum_S w**theta >= (sum_X w)**theta.
    """
    theta = theta_of_D(D).theta
    w = np.asarray(w, dtype=float)
    res = ramsey_subset(ms, w**theta, w, 1.0 - theta, **kw)
    power_sum = float(math.fsum(float(w[x]) ** theta for x in res.subset))
    power_bound = float(math.fsum(w.tolist()) ** theta)
    return DvoretzkyResult(
        res.subset, res.rho, theta, power_sum, power_bound, res.certificate
    )
