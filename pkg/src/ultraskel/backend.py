"""Backend selection for the derandomized shift sweep.

The sweep evaluates the whole carving pipeline once per shift interval and is
the hot loop of derandomized extraction (intervals scale with the number of
distinct pairwise distances).  A compiled kernel is used when the extension
module built from ``_sweep.pyx`` is importable; otherwise a pure-Python
fallback runs the same algorithm through :func:`ultraskel.ramsey.evaluate_shift`.

Set ``ULTRASKEL_BACKEND=python`` or ``=compiled`` to force a choice.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from . import _sweep as _compiled
except ImportError:  # pragma: no cover - depends on build environment
    _compiled = None


def available_backends() -> list[str]:
    out = ["python"]
    if _compiled is not None:
        out.insert(0, "compiled")
    return out


def get_backend() -> str:
    forced = os.environ.get("ULTRASKEL_BACKEND")
    if forced:
        if forced not in ("python", "compiled"):
            raise ValueError(f"unknown backend {forced!r}")
        if forced == "compiled" and _compiled is None:
            raise RuntimeError("compiled backend requested but not built")
        return forced
    return "compiled" if _compiled is not None else "python"


def sweep_scores(dist, w1, w2, epsilon, deltas, backend=None):
    """Surviving w1-mass for each shift in ``deltas`` (diameter-2 input)."""
    # the kernel takes writable buffers; inputs may be read-only views
    dist = np.array(dist, dtype=np.float64, order="C", copy=True)
    w1 = np.array(w1, dtype=np.float64, order="C", copy=True)
    w2 = np.array(w2, dtype=np.float64, order="C", copy=True)
    deltas = np.array(deltas, dtype=np.float64, order="C", copy=True)
    if backend is None:
        backend = get_backend()
    if backend == "compiled":
        return np.asarray(_compiled.sweep_scores(dist, w1, w2, float(epsilon), deltas))
    return _python_sweep(dist, w1, w2, float(epsilon), deltas)


def _python_sweep(dist, w1, w2, epsilon, deltas):
    from .ramsey import evaluate_shift

    out = np.empty(len(deltas))
    for i, d in enumerate(deltas):
        out[i] = evaluate_shift(dist, w1, w2, epsilon, float(d))[0]
    return out
