"""Certified ultrametric skeletons of finite metric measure spaces.

Extracts subsets embedding into explicit ultrametrics with certified
distortion, emits machine-checkable covering/cut-set certificates, and ships
exact verification oracles plus adversarial instance generators.
"""

__version__ = "0.1.0"

from .errors import UltraskelError, ValidationError
from .metric import (
    Ball,
    MeasuredMetricSpace,
    MetricSpace,
    ball_members,
    counting_measure,
    ingest,
    normalize_diameter,
    points_metric,
    validate_metric,
)
from .oracles import (
    brute_force_ramsey,
    distortion_of_pair,
    min_cost_set_cover,
    optimal_ultrametric_distortion,
    subdominant,
)
from .pipeline import (
    PipelineParams,
    SkeletonResult,
    build_skeleton,
    metric_composition,
    solve_measure,
    solve_measure_2plus,
    verify_cover,
)
from .ramsey import (
    carve,
    distortion_bound,
    dvoretzky_subset,
    radii_schedule,
    ramsey_subset,
    theta_inverse,
    theta_of_D,
)
from .trees import (
    FragmentationMap,
    RootedTree,
    boundary,
    descendants_in,
    descendants_in_star,
    enumerate_cutsets,
    is_lacunary,
    is_separated,
    min_cutset_cost,
    ultrametric_from_lacunary,
    validate_fragmentation,
)

__all__ = [
    "__version__",
    "UltraskelError",
    "ValidationError",
    "MetricSpace",
    "MeasuredMetricSpace",
    "Ball",
    "validate_metric",
    "normalize_diameter",
    "ball_members",
    "ingest",
    "points_metric",
    "counting_measure",
    "RootedTree",
    "FragmentationMap",
    "validate_fragmentation",
    "boundary",
    "descendants_in",
    "descendants_in_star",
    "is_lacunary",
    "is_separated",
    "ultrametric_from_lacunary",
    "min_cutset_cost",
    "enumerate_cutsets",
    "theta_of_D",
    "theta_inverse",
    "distortion_bound",
    "radii_schedule",
    "carve",
    "ramsey_subset",
    "dvoretzky_subset",
    "subdominant",
    "optimal_ultrametric_distortion",
    "distortion_of_pair",
    "min_cost_set_cover",
    "brute_force_ramsey",
    "PipelineParams",
    "SkeletonResult",
    "build_skeleton",
    "metric_composition",
    "solve_measure",
    "solve_measure_2plus",
    "verify_cover",
]
