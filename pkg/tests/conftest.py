import numpy as np
import pytest

from ultraskel.metric import MeasuredMetricSpace, MetricSpace, points_metric, validate_metric


def random_planar_metric(n: int, seed: int) -> MetricSpace:
    rng = np.random.default_rng(seed)
    return points_metric(rng.random((n, 2)))


def random_range_metric(n: int, seed: int, lo: float = 1.0, hi: float = 2.0) -> MetricSpace:
    """Any symmetric matrix with off-diagonal values in [lo, 2*lo] is a metric."""
    rng = np.random.default_rng(seed)
    m = rng.uniform(lo, min(hi, 2 * lo), size=(n, n))
    m = np.triu(m, 1)
    m = m + m.T
    return validate_metric(m)


def counting(ms: MetricSpace) -> MeasuredMetricSpace:
    return MeasuredMetricSpace(ms, np.ones(ms.n))


@pytest.fixture
def path3() -> MetricSpace:
    return validate_metric([[0, 1, 2], [1, 0, 1], [2, 1, 0]])


@pytest.fixture
def equilateral4() -> MetricSpace:
    return validate_metric(np.ones((4, 4)) - np.eye(4))


@pytest.fixture
def two_cluster4() -> MetricSpace:
    """Two tight pairs (inner distance 0.1) at mutual distance 1."""
    d = np.full((4, 4), 1.0)
    d[0, 1] = d[1, 0] = 0.1
    d[2, 3] = d[3, 2] = 0.1
    np.fill_diagonal(d, 0.0)
    return validate_metric(d)
