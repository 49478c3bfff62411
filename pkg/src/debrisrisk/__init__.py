"""Landing-point regression and ground-risk scoring for reentry debris."""
from .core import (FEATURE_NAMES, TARGET_NAMES, DataError, Dataset, DomainError, FeatureVector,
                   FragmentSpec, GeometryClass, LabelVector, ModelHyperparams, RangeError, Sample,
                   read_dataset, validate_sample, write_dataset)
from .datagen import BallisticConfig, generate_dataset, simulate_landing
from .fragments import MassDistribution, default_fragment_set, fragment_count
from .learners import TrainedModel
from .metrics import mse, r2_score
from .pipeline import RunConfig, run_all, split
from .risk import DangerLevel, RiskReport, assess, danger_level

__version__ = "0.1.0"

__all__ = [
    "FEATURE_NAMES", "TARGET_NAMES", "DataError", "Dataset", "DomainError", "FeatureVector",
    "FragmentSpec", "GeometryClass", "LabelVector", "ModelHyperparams", "RangeError", "Sample",
    "read_dataset", "validate_sample", "write_dataset", "BallisticConfig", "generate_dataset",
    "simulate_landing", "MassDistribution", "default_fragment_set", "fragment_count",
    "TrainedModel", "mse", "r2_score", "RunConfig", "run_all", "split", "DangerLevel",
    "RiskReport", "assess", "danger_level",
]
