"""Iterated Hölder level selection and recursive tree sparsification.

``holder_levels`` finds, inside one h-level block, at least h-k+1 levels at
which pruning every non-designated branch keeps the power-sum of the leaf
weights above the root's.  ``sparsify_tree`` applies this block by block,
aligning the chosen level across sibling subtrees by a pigeonhole/averaging
argument, and returns the pruned subtree together with the checkpoint set R
(kept vertices at depths divisible by h) and the separated set S (kept
designated children that lost all their siblings).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import HTooSmall, PreconditionViolation
from .initial import WeightedTree, _check_uniform_leaf_depth
from .trees import RootedTree

__all__ = [
    "SparsifiedTree",
    "sparsify_level",
    "holder_levels",
    "holder_sums_closed_form",
    "f_values",
    "sparsify_tree",
    "check_sparsified",
]

_LOG_SLACK = 1e-9


@dataclass(frozen=True)
class SparsifiedTree:
    """Subtree T' of the input tree with its checkpoint and separated sets."""

    tree: RootedTree
    kept: frozenset
    R: frozenset
    S: frozenset
    h: int
    k: int

    def kept_children(self, u: int) -> list[int]:
        return [c for c in self.tree.children[u] if c in self.kept]

    def r_descendants(self, u: int) -> list[int]:
        """D_{T'}(u, R): the next kept checkpoint level below u."""
        out = []
        stack = self.kept_children(u)
        while stack:
            v = stack.pop()
            if v in self.R:
                out.append(v)
            else:
                stack.extend(self.kept_children(v))
        return sorted(out)

    def s_descendants(self, u: int) -> list[int]:
        out = []
        stack = self.kept_children(u)
        while stack:
            v = stack.pop()
            if v in self.S:
                out.append(v)
            else:
                stack.extend(self.kept_children(v))
        return sorted(out)


def sparsify_level(tree: RootedTree, designated: Sequence[int], i: int) -> frozenset:
    """Vertices of T^(i): drop subtrees rooted at depth-i non-designated children."""
    if i <= 0 or i > tree.height():
        return frozenset(range(tree.n))
    kept = []
    stack = [tree.root]
    while stack:
        v = stack.pop()
        kept.append(v)
        for c in tree.children[v]:
            if tree.depth[c] == i and designated[tree.parent[c]] != c:
                continue
            stack.append(c)
    return frozenset(kept)


def _block_levels(tree: RootedTree, root: int, h: int) -> list[list[int]]:
    """Vertices of the subtree at ``root`` grouped by relative depth 0..h."""
    levels = [[root]]
    for _ in range(h):
        nxt: list[int] = []
        for u in levels[-1]:
            nxt.extend(tree.children[u])
        if not nxt:
            break
        levels.append(sorted(nxt))
    return levels


def _f_matrix(
    tree: RootedTree,
    w: Sequence[float],
    designated: Sequence[int],
    h: int,
    k: int,
    levels: list[list[int]],
) -> dict[int, np.ndarray]:
    """f_i(u) for i = 1..h on a block, by the defining recursion.

    Vertices at relative depth h act as leaves: f_i = w**((k-1)/k) for all i.
    One level up, the column i = depth+1 takes the max over children instead
    of the sum; that is exactly the weight surviving the level-i pruning.
    """
    e = (k - 1) / k
    f: dict[int, np.ndarray] = {}
    bottom = len(levels) - 1
    for u in levels[bottom]:
        f[u] = np.full(h, float(w[u]) ** e)
    for b in range(bottom - 1, -1, -1):
        for u in levels[b]:
            rows = [f[c] for c in tree.children[u]]
            vec = rows[0].copy()
            for r in rows[1:]:
                vec += r
            col = b  # i = b + 1 in 1-based level numbering
            vec[col] = max(r[col] for r in rows)
            f[u] = vec
    return f


def f_values(wt: WeightedTree) -> dict[int, np.ndarray]:
    """f_i over a whole tree whose leaves sit at depth h (testing hook)."""
    tree = wt.tree
    depth = _check_uniform_leaf_depth(tree, wt.h)
    if depth != wt.h:
        raise PreconditionViolation("f_values expects leaves exactly at depth h")
    levels = _block_levels(tree, tree.root, wt.h)
    return _f_matrix(tree, wt.w, wt.designated, wt.h, wt.k, levels)


def holder_sums_closed_form(
    tree: RootedTree,
    w: Sequence[float],
    designated: Sequence[int],
    h: int,
    k: int,
    root: int = -1,
) -> np.ndarray:
    """S_i = sum over leaves of T^(i) of w**((k-1)/k), evaluated directly.

    For each relative-depth-h vertex, record which of its ancestors are
    designated children; the vertex survives the level-i pruning iff its
    relative-depth-i ancestor is designated.
    """
    if root < 0:
        root = tree.root
    e = (k - 1) / k
    levels = _block_levels(tree, root, h)
    sums = np.zeros(h)
    for v in levels[-1]:
        contrib = float(w[v]) ** e
        chain = [False] * (h + 1)
        u = v
        for b in range(len(levels) - 1, 0, -1):
            chain[b] = designated[tree.parent[u]] == u
            u = tree.parent[u]
        for i in range(1, h + 1):
            if i >= len(levels) or chain[i]:
                sums[i - 1] += contrib
    return sums


def _pigeonhole_levels(sums: np.ndarray, bound: float, h: int, k: int) -> list[int]:
    """The iterative selection: start from H = {1..k}, repeatedly take a level
    whose leaf power-sum clears the bound, replace it with a fresh level."""
    H = list(range(1, k + 1))
    L: list[int] = []
    nxt = k + 1
    for _ in range(h - k + 1):
        ok = [i for i in sorted(H) if sums[i - 1] >= bound * (1 - 1e-12)]
        if ok:
            pick = ok[0]
        else:
            # numerically flat case: the product bound still guarantees the
            # best level is within rounding of the target
            pick = max(sorted(H), key=lambda i: sums[i - 1])
        L.append(pick)
        H.remove(pick)
        if nxt <= h:
            H.append(nxt)
            nxt += 1
    return sorted(L)


def holder_levels(
    tree: RootedTree,
    w: Sequence[float],
    designated: Sequence[int],
    h: int,
    k: int,
) -> list[int]:
    """Levels L, |L| >= h-k+1, at which level-pruning preserves the power-sum."""
    if not (h >= k >= 2):
        raise PreconditionViolation(f"need h >= k >= 2, got h={h}, k={k}")
    depth = _check_uniform_leaf_depth(tree, h)
    if depth != h:
        raise PreconditionViolation("holder_levels expects leaves exactly at depth h")
    levels = _block_levels(tree, tree.root, h)
    f = _f_matrix(tree, w, designated, h, k, levels)
    sums = f[tree.root]
    bound = float(w[tree.root]) ** ((k - 1) / k)
    return _pigeonhole_levels(sums, bound, h, k)


def _sparsify_forest(
    tree: RootedTree,
    w: Sequence[float],
    designated: Sequence[int],
    h: int,
    k: int,
    roots: list[int],
    leaf_depth: int,
    report: Optional[list] = None,
):
    """Returns (C, parts) where C indexes the kept roots and parts maps each
    kept root to its (kept, R, S) vertex sets."""
    d0 = tree.depth[roots[0]]
    if d0 == leaf_depth:
        return list(range(len(roots))), {
            j: ({roots[j]}, {roots[j]}, {roots[j]}) for j in range(len(roots))
        }

    ell = len(roots)
    ee = (k - 1) / k
    L_sets: list[set[int]] = []
    for r in roots:
        levels = _block_levels(tree, r, h)
        f = _f_matrix(tree, w, designated, h, k, levels)
        L_sets.append(set(_pigeonhole_levels(f[r], float(w[r]) ** ee, h, k)))

    j0 = min(range(ell), key=lambda j: (-w[roots[j]], j))
    if ell == 1:
        s0 = min(L_sets[0])
    else:
        def gain(s: int) -> float:
            return math.fsum(
                w[roots[j]] ** ee
                for j in range(ell)
                if j != j0 and s in L_sets[j] and s in L_sets[j0]
            )

        s0 = min(sorted(L_sets[j0]), key=lambda s: (-gain(s), s))
    C = [j for j in range(ell) if s0 in L_sets[j]]

    lhs = math.fsum(w[roots[j]] ** ((1 - 1 / k) ** 2) for j in C)
    rhs = math.fsum(w[roots[j]] ** (1 - 1 / k) for j in range(ell)) ** (1 - 1 / k)
    if report is not None:
        report.append((lhs, rhs))
    if math.log(lhs) < math.log(rhs) - _LOG_SLACK:
        raise PreconditionViolation(
            f"double-power inequality failed at depth {d0}: {lhs} < {rhs}"
        )

    parts = {}
    for j in C:
        r = roots[j]
        levels = _block_levels(tree, r, h)
        # survivors of the level-s0 pruning inside this block
        kept_block = {r}
        for b in range(1, len(levels)):
            for v in levels[b]:
                p = tree.parent[v]
                if p not in kept_block:
                    continue
                if b == s0 and designated[p] != v:
                    continue
                kept_block.add(v)
        frontier = sorted(v for v in levels[-1] if v in kept_block)
        C_j, sub = _sparsify_forest(
            tree, w, designated, h, k, frontier, leaf_depth, report
        )
        kept: set[int] = set()
        R: set[int] = {r}
        S: set[int] = {r}
        for pos in C_j:
            u_i = frontier[pos]
            sk, sr, ss = sub[pos]
            kept |= sk
            R |= sr
            S |= ss - {u_i}
            v = u_i
            while v != r:
                kept.add(v)
                v = tree.parent[v]
        kept.add(r)
        S |= {v for v in kept if tree.depth[v] - d0 == s0}
        parts[j] = (kept, R, S)
    return C, parts


def sparsify_tree(wt: WeightedTree, *, collect_double_power: bool = False):
    """Prune a subadditive weighted tree, returning (T', R, S).

    Guarantees the checkpoint power inequality: for every non-leaf u in R,
    the kept next-checkpoint weights satisfy
        sum w(v)**((1-1/k)**2)  >=  w(u)**((1-1/k)**2).
    """
    tree, h, k = wt.tree, wt.h, wt.k
    if h < 2 * k * k:
        raise HTooSmall(f"need h >= 2*k^2 = {2*k*k}, got {h}")
    leaf_depth = _check_uniform_leaf_depth(tree, h)
    report: Optional[list] = [] if collect_double_power else None
    C, parts = _sparsify_forest(
        tree, wt.w, wt.designated, h, k, [tree.root], leaf_depth, report
    )
    kept, R, S = parts[C[0]]
    st = SparsifiedTree(tree, frozenset(kept), frozenset(R), frozenset(S), h, k)
    _assert_power_kids(st, wt.w, k)
    if collect_double_power:
        return st, report
    return st


def _assert_power_kids(st: SparsifiedTree, w: Sequence[float], k: int) -> None:
    e2 = (1 - 1 / k) ** 2
    for u in sorted(st.R):
        if st.tree.is_leaf(u):
            continue
        kids = st.r_descendants(u)
        lhs = math.fsum(float(w[v]) ** e2 for v in kids)
        rhs = float(w[u]) ** e2
        if math.log(lhs) < math.log(rhs) - _LOG_SLACK:
            raise PreconditionViolation(
                f"checkpoint power inequality failed at {u}: {lhs} < {rhs}"
            )


def check_sparsified(st: SparsifiedTree, wt: WeightedTree) -> dict:
    """Structural report on a sparsification result (used by tests)."""
    tree, h, k = st.tree, st.h, st.k
    kept, R, S = st.kept, st.R, st.S
    rep: dict[str, bool] = {}
    root = tree.root
    rep["root_in_R_and_S"] = root in R and root in S
    rep["R_definition"] = R == frozenset(
        v for v in kept if tree.depth[v] % h == 0
    )
    rep["kept_connected"] = all(
        v == root or tree.parent[v] in kept for v in kept
    )
    rep["leaves_preserved"] = all(
        tree.is_leaf(v) or any(c in kept for c in tree.children[v]) for v in kept
    )
    rep["closed_under_designated"] = all(
        tree.is_leaf(v) or wt.designated[v] in kept for v in kept
    )
    ok = True
    for v in S:
        if v == root:
            continue
        p = tree.parent[v]
        if wt.designated[p] != v:
            ok = False
        if any(c in kept and c != v for c in tree.children[p]):
            ok = False
    rep["sparsified_at_S"] = ok

    ok = True
    for u in sorted(R):
        for v in st.r_descendants(u):
            path = []
            x = v
            while x != u:
                path.append(x)
                x = tree.parent[x]
            hits = [x for x in path if x in S]
            if len(hits) != 1:
                ok = False
    rep["alternating"] = ok

    ok = True
    for u in kept:
        down = st.s_descendants(u)
        if down:
            rel = {tree.depth[v] - tree.depth[u] for v in down}
            if len(rel) != 1 or not 1 <= rel.pop() <= 2 * h:
                ok = False
    rep["same_relative_depth"] = ok

    e2 = (1 - 1 / k) ** 2
    ok = True
    for u in sorted(R):
        if tree.is_leaf(u):
            continue
        kids = st.r_descendants(u)
        lhs = math.fsum(float(wt.w[v]) ** e2 for v in kids)
        if math.log(lhs) < math.log(float(wt.w[u]) ** e2) - _LOG_SLACK:
            ok = False
    rep["power_kids"] = ok
    return rep
