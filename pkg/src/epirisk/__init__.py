"""Epidemic exposure risk estimation over regional case-count data.

The pipeline: calibrate an SIR model per region to get reproduction
numbers, bucket them into three risk levels, couple regions through a
gravity mobility graph, and train a transmission-aware graph network to
predict the risk level from region features. A synthetic scenario
generator with known ground truth exercises every stage.
"""
from .autodiff import (
    Adam,
    Tape,
    Tensor,
    adam_step,
    add,
    concat_cols,
    cross_entropy,
    linear,
    relu,
    softmax_rows,
    sub,
    weighted_neighbor_sum,
)
from .errors import (
    ConfigError,
    DataError,
    DegenerateSeriesError,
    EpiriskError,
    GraphError,
    InvalidStateError,
    ShapeError,
    TrainingError,
)
from .gcn import (
    VARIANTS,
    EpiGcnConfig,
    EpiGcnModel,
    TrainResult,
    evaluate,
    run_ablations,
    train,
)
from .gravity import (
    Edge,
    GravityConfig,
    MobilityGraph,
    Region,
    aggregate_node_features,
    build_graph,
    gravity_weight,
)
from .metrics import MetricsReport, confusion_matrix, weighted_metrics
from .sir import (
    DEFAULT_THRESHOLD_MULTIPLIER,
    CalibConfig,
    CalibrationResult,
    CaseSeries,
    LabelingResult,
    RiskLabel,
    SirParams,
    SirTrajectory,
    basic_reproduction_number,
    calibrate_sir,
    categorize_r0,
    integrate_sir,
    sir_derivatives,
)
from .synth import (
    DatasetSplit,
    ScenarioConfig,
    SynthDataset,
    coupled_daily_states,
    generate_regions,
    make_dataset,
    make_split,
    simulate_coupled_cases,
)

__version__ = "0.1.0"

__all__ = [
    "Adam", "Tape", "Tensor", "adam_step", "add", "concat_cols",
    "cross_entropy", "linear", "relu", "softmax_rows", "sub",
    "weighted_neighbor_sum",
    "ConfigError", "DataError", "DegenerateSeriesError", "EpiriskError",
    "GraphError", "InvalidStateError", "ShapeError", "TrainingError",
    "VARIANTS", "EpiGcnConfig", "EpiGcnModel", "TrainResult", "evaluate",
    "run_ablations", "train",
    "Edge", "GravityConfig", "MobilityGraph", "Region",
    "aggregate_node_features", "build_graph", "gravity_weight",
    "MetricsReport", "confusion_matrix", "weighted_metrics",
    "DEFAULT_THRESHOLD_MULTIPLIER", "CalibConfig", "CalibrationResult",
    "CaseSeries", "LabelingResult", "RiskLabel", "SirParams",
    "SirTrajectory", "basic_reproduction_number", "calibrate_sir",
    "categorize_r0", "integrate_sir", "sir_derivatives",
    "DatasetSplit", "ScenarioConfig", "SynthDataset", "coupled_daily_states",
    "generate_regions", "make_dataset", "make_split",
    "simulate_coupled_cases",
    "__version__",
]
