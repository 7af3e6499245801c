"""Situation testing: flag rows whose prediction flips with the protected bit."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ProtectedSpec, _attr_names
from .errors import DataError
from .learner import LogisticHP, TrainedModel, fit_logistic
from .sampler import FairSmoteConfig, fair_smote


@dataclass(frozen=True)
class SituationReport:
    attribute: str
    total: int
    failing: tuple[int, ...]

    @property
    def fraction(self) -> float:
        return len(self.failing) / self.total if self.total else 0.0

    def to_json(self) -> str:
        return json.dumps(
            {"attribute": self.attribute, "total": self.total,
             "failing": list(self.failing), "fraction": self.fraction},
            sort_keys=True,
        )


def situation_test(train: Dataset, attr: str | ProtectedSpec, model: TrainedModel) -> SituationReport:
    name = train.protected_spec(attr).column
    X = model.encoder.transform(train)
    before = model.predict(X)
    after = model.predict(X.flipped(name))
    failing = np.flatnonzero(before != after)
    return SituationReport(name, len(train), tuple(int(i) for i in failing))


def remove_biased(train: Dataset, report: SituationReport | set | list) -> Dataset:
    """Drop the failing rows; accepts a report or a collection of row positions."""
    failing = report.failing if isinstance(report, SituationReport) else tuple(report)
    if isinstance(report, SituationReport) and report.total != len(train):
        raise DataError("report was produced for a dataset of a different size")
    idx = np.asarray(sorted(set(failing)), dtype=np.int64)
    if len(idx) and (idx[0] < 0 or idx[-1] >= len(train)):
        raise DataError("failing row index out of range")
    keep = np.ones(len(train), dtype=bool)
    keep[idx] = False
    return train.take(np.flatnonzero(keep))


def situation_failures(train: Dataset, attrs, model: TrainedModel) -> set[int]:
    """Union of failing rows, flipping one attribute at a time."""
    failing: set[int] = set()
    for name in _attr_names(train, attrs):
        failing.update(situation_test(train, name, model).failing)
    return failing


def fair_pipeline(
    train: Dataset,
    attrs,
    smote_cfg: FairSmoteConfig = FairSmoteConfig(),
    learner_hp: LogisticHP = LogisticHP(),
) -> Dataset:
    """Balance with Fair-SMOTE, then remove rows failing situation testing."""
    balanced = fair_smote(train, attrs, smote_cfg)
    model = fit_logistic(balanced, learner_hp)
    return remove_biased(balanced, situation_failures(balanced, attrs, model))
