"""Performance and group-fairness scores computed from binary predictions."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DataError

PERFORMANCE = ("recall", "false_alarm", "precision", "accuracy", "f1")
FAIRNESS = ("aod", "eod", "spd", "di_deviation")
METRICS = PERFORMANCE + FAIRNESS
HIGHER_IS_BETTER = frozenset({"recall", "precision", "accuracy", "f1"})


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)


@dataclass(frozen=True)
class GroupedConfusion:
    privileged: ConfusionMatrix
    unprivileged: ConfusionMatrix

    @property
    def overall(self) -> ConfusionMatrix:
        return self.privileged + self.unprivileged


@dataclass(frozen=True)
class MetricsReport:
    recall: float
    false_alarm: float
    precision: float
    accuracy: float
    f1: float
    aod: float
    eod: float
    spd: float
    di_deviation: float

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def _ratio(num, den) -> float:
    return num / den if den else 0.0


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = np.asarray(y_true).astype(bool)
    y_pred = np.asarray(y_pred).astype(bool)
    if y_true.shape != y_pred.shape:
        raise DataError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size == 0:
        raise DataError("cannot score an empty prediction vector")
    return ConfusionMatrix(
        tp=int(np.sum(y_true & y_pred)),
        fp=int(np.sum(~y_true & y_pred)),
        tn=int(np.sum(~y_true & ~y_pred)),
        fn=int(np.sum(y_true & ~y_pred)),
    )


def grouped_confusion(y_true, y_pred, protected_bits) -> GroupedConfusion:
    y_true, y_pred = np.asarray(y_true), np.asarray(y_pred)
    priv = np.asarray(protected_bits).astype(bool)
    if priv.shape != y_true.shape:
        raise DataError("protected bits must align with labels")
    if priv.all() or not priv.any():
        raise DataError("both protected groups need at least one scored row")
    return GroupedConfusion(confusion(y_true[priv], y_pred[priv]), confusion(y_true[~priv], y_pred[~priv]))


def performance(cm: ConfusionMatrix) -> tuple[float, float, float, float, float]:
    """(recall, false_alarm, precision, accuracy, f1); empty denominators give 0."""
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    false_alarm = _ratio(cm.fp, cm.fp + cm.tn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    accuracy = _ratio(cm.tp + cm.tn, cm.total)
    f1 = _ratio(2 * precision * recall, precision + recall)
    return recall, false_alarm, precision, accuracy, f1


def favorable_rate(cm: ConfusionMatrix) -> float:
    return _ratio(cm.tp + cm.fp, cm.total)


def fairness(gc: GroupedConfusion, rates: tuple[float, float] | None = None, di_ceiling: float = 1.0):
    """(aod, eod, spd, di_deviation) as absolute values.

    ``rates`` is (P[pred=1 | unprivileged], P[pred=1 | privileged]); it is
    derived from the group matrices when omitted.
    """
    u, p = gc.unprivileged, gc.privileged
    if u.total == 0 or p.total == 0:
        raise DataError("both protected groups need at least one scored row")
    tpr_u, tpr_p = _ratio(u.tp, u.tp + u.fn), _ratio(p.tp, p.tp + p.fn)
    fpr_u, fpr_p = _ratio(u.fp, u.fp + u.tn), _ratio(p.fp, p.fp + p.tn)
    rate_u, rate_p = rates if rates is not None else (favorable_rate(u), favorable_rate(p))

    aod = abs(((fpr_u - fpr_p) + (tpr_u - tpr_p)) * 0.5)
    eod = abs(tpr_u - tpr_p)
    spd = abs(rate_u - rate_p)
    if rate_p == 0:
        di_dev = 0.0 if rate_u == 0 else di_ceiling
    else:
        di_dev = abs(1.0 - rate_u / rate_p)
    return aod, eod, spd, di_dev


def evaluate(y_true, y_pred, protected_bits, di_ceiling: float = 1.0) -> MetricsReport:
    gc = grouped_confusion(y_true, y_pred, protected_bits)
    return MetricsReport(*performance(gc.overall), *fairness(gc, di_ceiling=di_ceiling))


def metric_names() -> list[str]:
    return [f.name for f in fields(MetricsReport)]
