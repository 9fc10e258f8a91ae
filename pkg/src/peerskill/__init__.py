"""Graph-signal analysis of peer-interaction networks.

Ratings are treated as signals on per-prompt interaction graphs: their
Laplacian total variation measures homogeneity, consensus-regularized
regressions predict future ratings, and a projected diffusion model
simulates how ratings evolve.
"""

from .diffusion import DiffusionConfig, TrajectoryStats, generate_er_graph, simulate, step
from .graph import (
    InteractionGraph,
    LaplacianMatrix,
    average_rating,
    build_laplacian,
    normalize_series,
    total_variation,
)
from .ingest import (
    CommentEvent,
    CommunitySeries,
    RatingEvent,
    assemble_series,
    generate_synthetic_dataset,
    parse_events,
)
from .regression import (
    ConsensusRegressor,
    ConsensusRegressorCV,
    FeatureSet,
    HyperParams,
    ModelCoefficients,
    PredictionTask,
    compare_models,
    cross_validate,
    fit,
    predict,
    relative_error,
)
from .trend import TrendResult, group_average_trend, linear_trend

__version__ = "0.1.0"

__all__ = [
    "CommentEvent",
    "CommunitySeries",
    "ConsensusRegressor",
    "ConsensusRegressorCV",
    "DiffusionConfig",
    "FeatureSet",
    "HyperParams",
    "InteractionGraph",
    "LaplacianMatrix",
    "ModelCoefficients",
    "PredictionTask",
    "RatingEvent",
    "TrajectoryStats",
    "TrendResult",
    "assemble_series",
    "average_rating",
    "build_laplacian",
    "compare_models",
    "cross_validate",
    "fit",
    "generate_er_graph",
    "generate_synthetic_dataset",
    "group_average_trend",
    "linear_trend",
    "normalize_series",
    "parse_events",
    "predict",
    "relative_error",
    "simulate",
    "step",
    "total_variation",
]
