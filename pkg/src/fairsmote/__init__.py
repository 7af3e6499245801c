"""Bias detection and repair for tabular binary classification data."""
from .data import (
    ClassSpec,
    Dataset,
    FeatureKind,
    ProtectedSpec,
    ingest_csv,
    preprocess,
    split_cv,
    subgroup_counts,
)
from .errors import ConfigError, DataError, FairSmoteError, PipelineError
from .learner import LogisticHP, TrainedModel, fit_logistic, predict
from .metrics import MetricsReport, confusion, evaluate, fairness, performance
from .sampler import FairSmoteConfig, fair_smote, ros, rus, smote
from .situation import SituationReport, fair_pipeline, remove_biased, situation_test
from .stats import ResultGroup, scott_knott

__version__ = "0.1.0"

__all__ = [
    "ClassSpec", "Dataset", "FeatureKind", "ProtectedSpec", "ingest_csv", "preprocess", "split_cv",
    "subgroup_counts", "ConfigError", "DataError", "FairSmoteError", "PipelineError", "LogisticHP",
    "TrainedModel", "fit_logistic", "predict", "MetricsReport", "confusion", "evaluate", "fairness",
    "performance", "FairSmoteConfig", "fair_smote", "ros", "rus", "smote", "SituationReport",
    "fair_pipeline", "remove_biased", "situation_test", "ResultGroup", "scott_knott",
]
