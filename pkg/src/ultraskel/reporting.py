"""Canonical report serialization, Newick dendrograms and merge lists.

Reports must be byte-identical across runs for the same config and seed, so
floats are printed with 17 significant digits (lossless round-trip) and dict
keys are emitted sorted.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

__all__ = ["canonical_json", "dendrogram_merges", "newick"]


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("reports must not contain NaN")
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(float(x), ".17g")
    # make sure it reads back as a float, not an int
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def canonical_json(obj) -> str:
    """Deterministic JSON: sorted keys, fixed float formatting, newline end."""

    def emit(o) -> str:
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, (int, np.integer)):
            return str(int(o))
        if isinstance(o, (float, np.floating)):
            return _fmt_float(float(o))
        if isinstance(o, str):
            return '"' + o.replace("\\", "\\\\").replace('"', '\\"') + '"'
        if isinstance(o, (list, tuple, np.ndarray)):
            return "[" + ",".join(emit(x) for x in (o.tolist() if isinstance(o, np.ndarray) else o)) + "]"
        if isinstance(o, dict):
            items = sorted(o.items(), key=lambda kv: str(kv[0]))
            return "{" + ",".join(emit(str(k)) + ":" + emit(v) for k, v in items) + "}"
        raise TypeError(f"cannot serialize {type(o)!r}")

    return emit(obj) + "\n"


def dendrogram_merges(labels: Sequence, rho: np.ndarray) -> list[list]:
    """Single-linkage merge list of an ultrametric: [a, b, level] triples.

    On an ultrametric, single linkage reproduces the tree exactly: clusters
    merge at each distinct rho level.
    """
    n = len(labels)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    iu = np.triu_indices(n, 1)
    pairs = sorted(zip(rho[iu].tolist(), iu[0].tolist(), iu[1].tolist()))
    merges = []
    for lvl, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
            merges.append([labels[i], labels[j], float(lvl)])
    return merges


def newick(labels: Sequence, rho: np.ndarray) -> str:
    """Newick dendrogram of an ultrametric; branch lengths are level/2 gaps."""
    n = len(labels)
    if n == 0:
        return ";"
    if n == 1:
        return f"{labels[0]}:0;"
    nodes = {i: (str(labels[i]), 0.0) for i in range(n)}  # id -> (newick, height)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    iu = np.triu_indices(n, 1)
    pairs = sorted(zip(rho[iu].tolist(), iu[0].tolist(), iu[1].tolist()))
    for lvl, i, j in pairs:
        ri, rj = find(i), find(j)
        if ri == rj:
            continue
        height = float(lvl) / 2.0
        si, hi = nodes.pop(ri)
        sj, hj = nodes.pop(rj)
        merged = f"({si}:{height - hi:.17g},{sj}:{height - hj:.17g})"
        root = min(ri, rj)
        parent[max(ri, rj)] = root
        nodes[root] = (merged, height)
    (s, _), = nodes.values()
    return s + ";"
