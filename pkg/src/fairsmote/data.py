"""Dataset container, CSV ingestion and preprocessing."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

DEFAULT_MISSING = ("?",)

# (class bit, protected bit, ...) in the order of the requested attributes
SubgroupKey = tuple


class FeatureKind(str, Enum):
    BOOLEAN = "boolean"
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"


def _as_values(v) -> tuple[str, ...]:
    if isinstance(v, (list, tuple, set, frozenset)):
        return tuple(str(x) for x in v)
    return (str(v),)


@dataclass(frozen=True)
class ClassSpec:
    """Binary class column. ``favorable`` raw values map to 1, ``unfavorable`` to 0.

    Either side may list several raw values.
    """

    column: str
    favorable: tuple[str, ...]
    unfavorable: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "favorable", _as_values(self.favorable))
        object.__setattr__(self, "unfavorable", _as_values(self.unfavorable))
        if set(self.favorable) & set(self.unfavorable):
            raise ConfigError(f"class {self.column!r}: favorable and unfavorable values overlap")


@dataclass(frozen=True)
class ProtectedSpec:
    column: str
    privileged: tuple[str, ...]
    unprivileged: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "privileged", _as_values(self.privileged))
        object.__setattr__(self, "unprivileged", _as_values(self.unprivileged))
        if set(self.privileged) & set(self.unprivileged):
            raise ConfigError(f"protected {self.column!r}: privileged and unprivileged values overlap")


@dataclass(frozen=True)
class BinRule:
    """One interval of a binning rule: values ``< below`` get ``label``.

    The last rule of a column has ``below=None`` and catches the rest.
    """

    label: str
    below: float | None = None


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column-oriented table.

    ``schema`` lists the feature columns (protected columns included, as
    booleans). The class column lives apart in ``labels``. ``origin`` holds
    each row's index in the originally ingested table, or -1 for synthetic
    rows.
    """

    schema: tuple[tuple[str, FeatureKind], ...]
    columns: Mapping[str, np.ndarray]
    labels: np.ndarray
    class_spec: ClassSpec
    protected: tuple[ProtectedSpec, ...]
    origin: np.ndarray = field(default=None)

    def __post_init__(self):
        n = len(self.labels)
        cols = {}
        for name, kind in self.schema:
            if name not in self.columns:
                raise DataError(f"column {name!r} has no values")
            a = np.asarray(self.columns[name])
            if kind is FeatureKind.NUMERIC:
                a = a.astype(np.float64, copy=False)
            elif kind is FeatureKind.BOOLEAN:
                a = a.astype(np.int8, copy=False)
            else:
                a = a.astype(object, copy=False)
            if len(a) != n:
                raise DataError(f"column {name!r} has {len(a)} cells, expected {n}")
            cols[name] = _freeze(a)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "labels", _freeze(np.asarray(self.labels, dtype=np.int8)))
        origin = np.arange(n) if self.origin is None else np.asarray(self.origin, dtype=np.int64)
        if len(origin) != n:
            raise DataError("origin length does not match row count")
        object.__setattr__(self, "origin", _freeze(origin))
        if not self.protected:
            raise ConfigError("at least one protected attribute is required")
        kinds = dict(self.schema)
        for p in self.protected:
            if kinds.get(p.column) is not FeatureKind.BOOLEAN:
                raise ConfigError(f"protected column {p.column!r} must be a boolean schema column")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_names(self) -> list[str]:
        return [name for name, _ in self.schema]

    def kind(self, name: str) -> FeatureKind:
        for n, k in self.schema:
            if n == name:
                return k
        raise ConfigError(f"unknown column {name!r}")

    def protected_spec(self, attr: str | ProtectedSpec) -> ProtectedSpec:
        name = attr.column if isinstance(attr, ProtectedSpec) else attr
        for p in self.protected:
            if p.column == name:
                return p
        raise ConfigError(f"{name!r} is not a declared protected attribute")

    def take(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.schema,
            {k: v[idx] for k, v in self.columns.items()},
            self.labels[idx],
            self.class_spec,
            self.protected,
            self.origin[idx],
        )

    def replace(self, columns: Mapping[str, np.ndarray] | None = None, schema=None) -> "Dataset":
        return Dataset(
            tuple(schema) if schema is not None else self.schema,
            {**self.columns, **(columns or {})},
            self.labels,
            self.class_spec,
            self.protected,
            self.origin,
        )

    def append(self, other: "Dataset") -> "Dataset":
        if other.schema != self.schema:
            raise DataError("cannot append datasets with different schemas")
        return Dataset(
            self.schema,
            {k: np.concatenate([v, other.columns[k]]) for k, v in self.columns.items()},
            np.concatenate([self.labels, other.labels]),
            self.class_spec,
            self.protected,
            np.concatenate([self.origin, other.origin]),
        )

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame({name: self.columns[name] for name in self.feature_names})
        df[self.class_spec.column] = self.labels
        return df


def _encode_binary(values: np.ndarray, one: Sequence[str], zero: Sequence[str], what: str) -> np.ndarray:
    is_one = np.isin(values, list(one))
    is_zero = np.isin(values, list(zero))
    bad = ~(is_one | is_zero)
    if bad.any():
        extra = sorted(set(values[bad].tolist()))[:5]
        raise DataError(f"{what}: values {extra} are not covered by the declared mapping")
    return is_one.astype(np.int8)


_BOOL_TOKENS = {"1": 1, "0": 0, "true": 1, "false": 0, "yes": 1, "no": 0}


def ingest_csv(
    path: str | Path,
    schema: Mapping[str, FeatureKind | str],
    class_spec: ClassSpec,
    protected: Sequence[ProtectedSpec],
    missing: Iterable[str] = DEFAULT_MISSING,
) -> Dataset:
    """Load a CSV file into a :class:`Dataset`.

    Only the declared columns are read. A row is dropped when any declared
    cell is empty or equals one of the ``missing`` sentinels.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"data file not found: {path}")
    schema = {name: FeatureKind(kind) for name, kind in schema.items()}
    if class_spec.column in schema:
        raise ConfigError(f"class column {class_spec.column!r} must not be listed as a feature")
    for p in protected:
        if p.column not in schema:
            raise ConfigError(f"protected column {p.column!r} is not declared in the schema")
        if schema[p.column] is FeatureKind.NUMERIC:
            raise ConfigError(f"protected column {p.column!r} cannot be numeric")

    wanted = list(schema) + [class_spec.column]
    df = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    df.columns = [c.strip() for c in df.columns]
    absent = [c for c in wanted if c not in df.columns]
    if absent:
        raise ConfigError(f"columns {absent} not found in {path.name}")
    df = df[wanted].apply(lambda s: s.str.strip())

    sentinels = {""} | {str(m) for m in missing}
    keep = ~df.isin(sentinels).any(axis=1).to_numpy()
    dropped = int((~keep).sum())
    if dropped:
        log.info("%s: dropped %d rows with missing values", path.name, dropped)
    df = df[keep]
    if df.empty:
        raise DataError(f"{path.name}: no rows left after dropping missing values")

    protected_by_name = {p.column: p for p in protected}
    cols: dict[str, np.ndarray] = {}
    out_schema = []
    for name, kind in schema.items():
        raw = df[name].to_numpy(dtype=object)
        if name in protected_by_name:
            p = protected_by_name[name]
            cols[name] = _encode_binary(raw, p.privileged, p.unprivileged, f"protected {name!r}")
            kind = FeatureKind.BOOLEAN
        elif kind is FeatureKind.NUMERIC:
            try:
                cols[name] = raw.astype(np.float64)
            except ValueError as e:
                raise DataError(f"column {name!r}: non-numeric value ({e})") from None
        elif kind is FeatureKind.BOOLEAN:
            low = [str(v).lower() for v in raw]
            if any(v not in _BOOL_TOKENS for v in low):
                raise DataError(f"column {name!r}: boolean columns take 0/1, true/false or yes/no")
            cols[name] = np.array([_BOOL_TOKENS[v] for v in low], dtype=np.int8)
        else:
            cols[name] = raw
        out_schema.append((name, kind))

    labels = _encode_binary(
        df[class_spec.column].to_numpy(dtype=object),
        class_spec.favorable,
        class_spec.unfavorable,
        f"class {class_spec.column!r}",
    )
    return Dataset(tuple(out_schema), cols, labels, class_spec, tuple(protected))


def _bin(values: np.ndarray, rules: Sequence[BinRule]) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    done = np.zeros(len(values), dtype=bool)
    for rule in rules:
        hit = ~done if rule.below is None else (~done & (values < rule.below))
        out[hit] = rule.label
        done |= hit
    return out


def _check_rules(name: str, rules: Sequence[BinRule]) -> None:
    if not rules or rules[-1].below is not None:
        raise ConfigError(f"binning for {name!r} must end with a catch-all rule (no threshold)")
    bounds = [r.below for r in rules[:-1]]
    if any(b is None for b in bounds) or bounds != sorted(bounds):
        raise ConfigError(f"binning thresholds for {name!r} must be increasing")


def preprocess(ds: Dataset, binning: Mapping[str, Sequence[BinRule]] | None = None) -> Dataset:
    """Bin rule-covered numeric columns and min-max normalize the rest.

    Running it twice gives the same result as running it once: a rule whose
    column is already categorical with the rule's labels is skipped, and a
    normalized column already spans exactly [0, 1].
    """
    binning = dict(binning or {})
    schema = list(ds.schema)
    kinds = dict(schema)
    new_cols = {}
    for name, rules in binning.items():
        if name not in kinds:
            raise ConfigError(f"binning rule references unknown column {name!r}")
        rules = list(rules)
        _check_rules(name, rules)
        if kinds[name] is FeatureKind.CATEGORICAL:
            labels = {r.label for r in rules}
            if set(ds.columns[name].tolist()) <= labels:
                continue
        if kinds[name] is not FeatureKind.NUMERIC:
            raise ConfigError(f"binning rule on non-numeric column {name!r}")
        new_cols[name] = _bin(ds.columns[name], rules)
        kinds[name] = FeatureKind.CATEGORICAL

    for name, kind in kinds.items():
        if kind is not FeatureKind.NUMERIC:
            continue
        v = ds.columns[name]
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            log.warning("column %r is constant; normalized to 0", name)
            new_cols[name] = np.zeros_like(v)
        elif lo != 0.0 or hi != 1.0:
            new_cols[name] = (v - lo) / (hi - lo)

    out_schema = [(name, kinds[name]) for name, _ in schema]
    return ds.replace(new_cols, out_schema)


def _attr_names(ds: Dataset, attrs) -> list[str]:
    if isinstance(attrs, (str, ProtectedSpec)):
        attrs = [attrs]
    names = [ds.protected_spec(a).column for a in attrs]
    if not names:
        raise ConfigError("at least one protected attribute is required")
    return names


def subgroup_keys(ds: Dataset, attrs) -> np.ndarray:
    """Per-row subgroup key as an ``(n, 1 + len(attrs))`` int array."""
    names = _attr_names(ds, attrs)
    return np.column_stack([ds.labels] + [ds.columns[n] for n in names]).astype(np.int64)


def subgroup_counts(ds: Dataset, attrs) -> dict[SubgroupKey, int]:
    keys, counts = np.unique(subgroup_keys(ds, attrs), axis=0, return_counts=True)
    return {tuple(int(x) for x in k): int(c) for k, c in zip(keys, counts)}


def split_cv(ds: Dataset, folds: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Shuffled, unstratified k-fold split. Row order is kept inside each part."""
    if folds < 2:
        raise ConfigError("folds must be at least 2")
    if len(ds) < folds:
        raise DataError(f"{len(ds)} rows cannot be split into {folds} folds")
    perm = np.random.default_rng(seed).permutation(len(ds))
    out = []
    for part in np.array_split(perm, folds):
        test = np.sort(part)
        mask = np.ones(len(ds), dtype=bool)
        mask[test] = False
        out.append((ds.take(np.flatnonzero(mask)), ds.take(test)))
    return out
