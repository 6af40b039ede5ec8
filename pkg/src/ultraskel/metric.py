"""Finite metric measure spaces: validation, normalization, balls, ingestion.

Distances are stored as 64-bit floats and all threshold comparisons are exact
``<=`` / ``<`` on the stored values; the downstream algorithms are
comparison-based, so no epsilon is applied here.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from heapq import heappop, heappush
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import (
    AsymmetryError,
    DisconnectedGraph,
    NegativeDistanceError,
    ParseError,
    SinglePointSpace,
    TriangleViolation,
    ValidationError,
    ZeroOffDiagonal,
)

__all__ = [
    "MetricSpace",
    "MeasuredMetricSpace",
    "Ball",
    "validate_metric",
    "normalize_diameter",
    "ball_members",
    "ingest",
    "points_metric",
    "graph_metric",
    "to_fraction_matrix",
]


@dataclass(frozen=True)
class MetricSpace:
    """A validated finite metric space given by its distance matrix."""

    dist: np.ndarray
    labels: Optional[tuple[str, ...]] = None

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    def diameter(self) -> float:
        return float(self.dist.max()) if self.n > 1 else 0.0

    def min_distance(self) -> float:
        if self.n < 2:
            return math.inf
        iu = np.triu_indices(self.n, 1)
        return float(self.dist[iu].min())

    def submatrix(self, points: Sequence[int]) -> np.ndarray:
        idx = np.asarray(list(points), dtype=int)
        return self.dist[np.ix_(idx, idx)]


@dataclass(frozen=True)
class MeasuredMetricSpace:
    """A metric space together with a strictly positive per-point measure."""

    space: MetricSpace
    mu: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.shape != (self.space.n,):
            raise ValidationError("measure length does not match point count")
        if not np.all(np.isfinite(mu)) or not np.all(mu > 0):
            raise ValidationError("measure must be strictly positive and finite")
        mu = mu.copy()
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def n(self) -> int:
        return self.space.n

    def mass(self) -> float:
        return float(math.fsum(self.mu.tolist()))

    def ball_mass(self, center: int, r: float) -> float:
        sel = self.space.dist[center] <= r
        return float(math.fsum(self.mu[sel].tolist()))


@dataclass(frozen=True)
class Ball:
    """Closed ball: membership is { y : d(center, y) <= radius }."""

    center: int
    radius: float


def validate_metric(matrix, labels: Optional[Sequence[str]] = None) -> MetricSpace:
    """Check symmetry, positivity and the triangle inequality exactly.

    The triangle check is O(n^3); there is no approximate acceptance.
    """
    dist = np.asarray(matrix, dtype=float)
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise ValidationError("distance matrix must be square")
    n = dist.shape[0]
    if not np.all(np.isfinite(dist)):
        bad = np.argwhere(~np.isfinite(dist))[0]
        raise NegativeDistanceError(int(bad[0]), int(bad[1]))
    if np.any(dist < 0):
        bad = np.argwhere(dist < 0)[0]
        raise NegativeDistanceError(int(bad[0]), int(bad[1]))
    if np.any(np.diag(dist) != 0):
        i = int(np.nonzero(np.diag(dist))[0][0])
        raise ValidationError(f"nonzero diagonal entry at {i}")
    neq = dist != dist.T
    if neq.any():
        bad = np.argwhere(neq)[0]
        raise AsymmetryError(int(bad[0]), int(bad[1]))
    off = dist + np.eye(n)
    if np.any(off == 0):
        bad = np.argwhere(off == 0)[0]
        raise ZeroOffDiagonal(int(bad[0]), int(bad[1]))
    for z in range(n):
        viol = dist > dist[:, z][:, None] + dist[z, :][None, :]
        if viol.any():
            x, y = np.argwhere(viol)[0]
            raise TriangleViolation(int(x), int(y), z)
    dist = dist.copy()
    dist.setflags(write=False)
    return MetricSpace(dist, tuple(labels) if labels is not None else None)


def normalize_diameter(ms: MetricSpace) -> tuple[MetricSpace, float]:
    """Rescale so the diameter is exactly 1; returns (space, original diameter)."""
    if ms.n < 2:
        raise SinglePointSpace("cannot normalize a space with fewer than 2 points")
    scale = ms.diameter()
    dist = ms.dist / scale
    dist.setflags(write=False)
    return MetricSpace(dist, ms.labels), scale


def ball_members(ms: MetricSpace, center: int, r: float) -> list[int]:
    """Members of the closed ball B(center, r)."""
    if r < 0:
        raise ValidationError("ball radius must be nonnegative")
    return [int(i) for i in np.nonzero(ms.dist[center] <= r)[0]]


def points_metric(points, rule: str = "l2") -> MetricSpace:
    """Metric from a coordinate list under an lp rule (l1, l2 or linf)."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    diff = pts[:, None, :] - pts[None, :, :]
    if rule == "l1":
        dist = np.abs(diff).sum(axis=2)
    elif rule == "l2":
        dist = np.sqrt((diff * diff).sum(axis=2))
    elif rule == "linf":
        dist = np.abs(diff).max(axis=2)
    else:
        raise ParseError(f"unknown metric rule {rule!r}")
    dist = (dist + dist.T) / 2.0
    np.fill_diagonal(dist, 0.0)
    return validate_metric(dist)


def graph_metric(edges: Iterable[tuple], labels: Optional[Sequence[str]] = None) -> MetricSpace:
    """Shortest-path metric of a weighted undirected graph.

    ``edges`` yields (u, v, w) triples; vertex names may be arbitrary strings
    or integers and are ordered by first appearance unless ``labels`` fixes
    the ordering.
    """
    edges = list(edges)
    if labels is None:
        names: list = []
        seen = set()
        for u, v, _ in edges:
            for x in (u, v):
                if x not in seen:
                    seen.add(x)
                    names.append(x)
    else:
        names = list(labels)
    index = {x: i for i, x in enumerate(names)}
    n = len(names)
    if n == 0:
        raise ParseError("empty edge list")
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for u, v, w in edges:
        w = float(w)
        if not math.isfinite(w) or w < 0:
            raise ParseError(f"bad edge weight {w!r}")
        adj[index[u]].append((index[v], w))
        adj[index[v]].append((index[u], w))
    dist = np.full((n, n), np.inf)
    for s in range(n):
        dvec = dist[s]
        dvec[s] = 0.0
        heap = [(0.0, s)]
        while heap:
            du, u = heappop(heap)
            if du > dvec[u]:
                continue
            for v, w in adj[u]:
                alt = du + w
                if alt < dvec[v]:
                    dvec[v] = alt
                    heappush(heap, (alt, v))
    if not np.all(np.isfinite(dist)):
        raise DisconnectedGraph("graph metric undefined: graph is not connected")
    return validate_metric(dist, labels=[str(x) for x in names])


def _parse_csv(text: str) -> tuple[np.ndarray, Optional[list[str]]]:
    rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV input")
    labels = None

    def numeric(row):
        try:
            return [float(c) for c in row]
        except ValueError:
            return None

    first = numeric(rows[0])
    if first is None:
        labels = [c.strip() for c in rows[0]]
        rows = rows[1:]
    data = []
    for r in rows:
        vals = numeric(r)
        if vals is None:
            # leading label column
            vals = numeric(r[1:])
            if vals is None:
                raise ParseError(f"non-numeric CSV row: {r!r}")
        data.append(vals)
    mat = np.asarray(data, dtype=float)
    if np.isnan(mat).any():
        raise ParseError("CSV contains NaN")
    return mat, labels


def _parse_json(text: str) -> tuple[np.ndarray, Optional[list[str]], Optional[list[float]]]:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ParseError("JSON input must be an object")
    labels = obj.get("labels")
    measure = obj.get("measure")
    if "distances" in obj:
        mat = np.asarray(obj["distances"], dtype=float)
    elif "points" in obj:
        rule = obj.get("metric", "l2")
        ms = points_metric(obj["points"], rule)
        mat = np.asarray(ms.dist)
    else:
        raise ParseError("JSON input needs 'distances' or 'points'")
    if np.isnan(mat).any():
        raise ParseError("JSON contains NaN distances")
    return mat, labels, measure


def _parse_edges(text: str) -> MetricSpace:
    edges = []
    for ln, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) == 2:
            parts.append("1")
        if len(parts) != 3:
            raise ParseError(f"line {ln}: expected 'u v w'")
        try:
            w = float(parts[2])
        except ValueError as exc:
            raise ParseError(f"line {ln}: bad weight {parts[2]!r}") from exc
        if math.isnan(w):
            raise ParseError(f"line {ln}: NaN weight")
        edges.append((parts[0], parts[1], w))
    return graph_metric(edges)


def ingest(source, fmt: Optional[str] = None) -> MeasuredMetricSpace:
    """Read a metric measure space from a file path, file object or string.

    Formats: ``csv`` (dense matrix, header optional), ``json``
    ({"labels", "distances", "measure"} or {"points", "metric"}) and
    ``edges`` (shortest-path closure of lines "u v w").  The measure
    defaults to the counting measure when absent.
    """
    if hasattr(source, "read"):
        text = source.read()
        name = getattr(source, "name", "")
    else:
        name = str(source)
        try:
            with open(name, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError:
            if fmt is None:
                raise
            text = name
            name = ""
    if fmt is None:
        low = name.lower()
        if low.endswith(".json"):
            fmt = "json"
        elif low.endswith(".csv"):
            fmt = "csv"
        else:
            fmt = "edges" if not text.lstrip().startswith(("{", "[")) else "json"
    measure = None
    if fmt == "csv":
        mat, labels = _parse_csv(text)
        ms = validate_metric(mat, labels)
    elif fmt == "json":
        mat, labels, measure = _parse_json(text)
        ms = validate_metric(mat, labels)
    elif fmt == "edges":
        ms = _parse_edges(text)
    else:
        raise ParseError(f"unknown format {fmt!r}")
    if measure is None:
        mu = np.ones(ms.n)
    else:
        mu = np.asarray(measure, dtype=float)
    return MeasuredMetricSpace(ms, mu)


def to_fraction_matrix(ms: MetricSpace) -> list[list[Fraction]]:
    """Exact-rational view of the stored distances (for oracle runs, n <= 64)."""
    n = ms.n
    return [[Fraction(float(ms.dist[i, j])) for j in range(n)] for i in range(n)]


def counting_measure(ms: MetricSpace) -> MeasuredMetricSpace:
    return MeasuredMetricSpace(ms, np.ones(ms.n))
