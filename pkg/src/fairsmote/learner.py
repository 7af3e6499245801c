"""Feature encoding and a full-batch gradient-descent logistic regression."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .data import Dataset, FeatureKind
from .errors import DataError, TrainingError


@dataclass(frozen=True)
class FeatureEncoder:
    """Maps schema columns to dense matrix columns.

    Numeric and boolean columns take one matrix column each; categorical
    columns take a one-hot block over the vocabulary seen at fit time.
    """

    schema: tuple[tuple[str, FeatureKind], ...]
    vocab: dict[str, tuple]
    blocks: dict[str, slice]
    width: int

    @classmethod
    def fit(cls, ds: Dataset) -> "FeatureEncoder":
        vocab, blocks, at = {}, {}, 0
        for name, kind in ds.schema:
            if kind is FeatureKind.CATEGORICAL:
                vocab[name] = tuple(sorted(set(ds.columns[name].tolist()), key=str))
                size = len(vocab[name])
            else:
                size = 1
            blocks[name] = slice(at, at + size)
            at += size
        return cls(ds.schema, vocab, blocks, at)

    def position(self, column: str) -> int:
        """Matrix column of a boolean or numeric feature (e.g. a protected bit)."""
        block = self.blocks[column]
        if block.stop - block.start != 1 or column in self.vocab:
            raise DataError(f"{column!r} is one-hot encoded and has no single position")
        return block.start

    def transform(self, ds: Dataset) -> "FeatureMatrix":
        if dict(ds.schema) != dict(self.schema):
            raise DataError("dataset schema does not match the fitted encoding")
        out = np.zeros((len(ds), self.width))
        for name, _ in self.schema:
            block, col = self.blocks[name], ds.columns[name]
            if name in self.vocab:
                lookup = {v: i for i, v in enumerate(self.vocab[name])}
                codes = np.fromiter((lookup.get(v, -1) for v in col), dtype=np.int64, count=len(col))
                seen = codes >= 0
                # unseen values keep an all-zero block
                out[np.flatnonzero(seen), block.start + codes[seen]] = 1.0
            else:
                out[:, block.start] = col
        return FeatureMatrix(out, self)


@dataclass(frozen=True)
class FeatureMatrix:
    values: np.ndarray
    encoder: FeatureEncoder

    def flipped(self, column: str) -> "FeatureMatrix":
        """Copy with a boolean column inverted."""
        pos = self.encoder.position(column)
        v = self.values.copy()
        v[:, pos] = 1.0 - v[:, pos]
        return FeatureMatrix(v, self.encoder)


@dataclass(frozen=True)
class LogisticHP:
    learning_rate: float = 0.1
    iterations: int = 1000
    l2: float = 1e-4
    seed: int = 0
    # stop early once the gradient max-norm drops to this value
    tol: float = 0.0


def loss(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float, counts=None) -> float:
    """Mean log-loss plus ``l2/2 * |w|^2``; the bias is not penalized.

    ``counts`` weights each row as that many identical copies.
    """
    z = X @ w + b
    per_row = np.logaddexp(0.0, z) - y * z
    n = len(y) if counts is None else counts.sum()
    total = per_row.sum() if counts is None else per_row @ counts
    return float(total / n + 0.5 * l2 * (w @ w))


def gradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float, counts=None):
    """Analytic gradient of :func:`loss` as (dw, db)."""
    r = _sigmoid(X @ w + b) - y
    n = len(y)
    if counts is not None:
        r = r * counts
        n = counts.sum()
    return X.T @ r / n + l2 * w, float(r.sum() / n)


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def collapse_duplicates(X: np.ndarray, y: np.ndarray):
    """Unique (row, label) pairs with their multiplicities.

    The mean loss over the full data equals the count-weighted mean over the
    unique pairs, so fitting on the collapsed form gives the same optimum.
    """
    uniq, counts = np.unique(np.column_stack([X, y]), axis=0, return_counts=True)
    return uniq[:, :-1], uniq[:, -1], counts.astype(np.float64)


@dataclass(frozen=True)
class TrainedModel:
    weights: np.ndarray
    bias: float
    encoder: FeatureEncoder
    hp: LogisticHP
    loss_history: tuple[float, ...] = field(default=(), repr=False)

    def _matrix(self, rows) -> np.ndarray:
        if isinstance(rows, FeatureMatrix):
            if rows.encoder is not self.encoder and rows.encoder != self.encoder:
                raise DataError("feature matrix was encoded for a different model")
            return rows.values
        return self.encoder.transform(rows).values

    def decision(self, rows) -> np.ndarray:
        return self._matrix(rows) @ self.weights + self.bias

    def predict_proba(self, rows) -> np.ndarray:
        return _sigmoid(self.decision(rows))

    def predict(self, rows) -> np.ndarray:
        # sigmoid(z) >= 0.5 exactly when z >= 0
        return (self.decision(rows) >= 0).astype(np.int8)


class Learner(Protocol):
    def fit(self, train: Dataset) -> TrainedModel: ...


def fit_logistic(train: Dataset, hp: LogisticHP = LogisticHP(), record_loss: bool = False) -> TrainedModel:
    y = train.labels.astype(np.float64)
    if len(y) == 0 or y.min() == y.max():
        raise DataError("training data must contain both classes")
    encoder = FeatureEncoder.fit(train)
    X, y, counts = collapse_duplicates(encoder.transform(train).values, y)
    w, b = np.zeros(X.shape[1]), 0.0
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        w, b = _descend(w, b, X, y, counts, hp, history if record_loss else None)
    if not (np.all(np.isfinite(w)) and np.isfinite(b) and np.isfinite(loss(w, b, X, y, hp.l2, counts))):
        raise TrainingError(f"loss diverged (learning rate {hp.learning_rate})")
    return TrainedModel(w, float(b), encoder, hp, tuple(history))


def _descend(w, b, X, y, counts, hp: LogisticHP, history):
    for _ in range(hp.iterations):
        if history is not None:
            history.append(loss(w, b, X, y, hp.l2, counts))
        dw, db = gradient(w, b, X, y, hp.l2, counts)
        if not np.isfinite(db):
            raise TrainingError(f"gradient diverged (learning rate {hp.learning_rate})")
        if hp.tol and max(np.abs(dw).max(initial=0.0), abs(db)) <= hp.tol:
            break
        w = w - hp.learning_rate * dw
        b = b - hp.learning_rate * db
    return w, b


def predict(model: TrainedModel, rows) -> np.ndarray:
    return model.predict(rows)


@dataclass(frozen=True)
class LogisticRegression:
    hp: LogisticHP = LogisticHP()

    def fit(self, train: Dataset) -> TrainedModel:
        return fit_logistic(train, self.hp)
