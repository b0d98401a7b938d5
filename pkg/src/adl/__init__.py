"""Archetypal dictionary learning: free and archetypal sparse autoencoders,
classical baselines, dictionary metrics, and synthetic benchmarks."""

from .benchmarks import (
    BenchSettings,
    gen_identifiability,
    gen_planted,
    gen_plausibility,
    identifiability_accuracy,
    plausibility_score,
    run_identifiability,
    run_plausibility,
)
from .dictionaries import (
    ArchetypalDictionary,
    FreeDictionary,
    clamp_relaxation,
    decode,
    materialize,
    project_row_stochastic,
)
from .distillation import DistillConfig, distill
from .encoders import EncoderParams, encode, silverman_kernel, topk_select
from .errors import (
    InvalidInputError,
    TrainingDivergedError,
    UndefinedClassError,
    UndefinedMetricError,
)
from .metrics import MetricsReport, model_report, report, stability, stability_protocol
from .training import SaeModel, TrainConfig, standardize_fit, train

__version__ = "0.1.0"
