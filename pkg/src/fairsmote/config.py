"""YAML configuration for datasets and benchmark plans.

A dataset config looks like::

    name: adult
    path: ../data/adult.csv        # relative to the config file
    missing: ["?"]
    columns:
      age: numeric
      sex: categorical
    class: {column: income, favorable: ">50K", unfavorable: "<=50K"}
    protected:
      - {column: sex, privileged: Male, unprivileged: Female}
    binning:
      age: [{below: 25, label: young}, {label: old}]
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .data import (
    DEFAULT_MISSING,
    BinRule,
    ClassSpec,
    Dataset,
    FeatureKind,
    ProtectedSpec,
    ingest_csv,
    preprocess,
)
from .errors import ConfigError


def _read_yaml(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = yaml.safe_load(path.read_text())
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return doc


def _require(doc, key, where):
    if key not in doc:
        raise ConfigError(f"{where}: missing required key {key!r}")
    return doc[key]


@dataclass(frozen=True)
class DatasetConfig:
    name: str
    path: Path
    schema: dict[str, FeatureKind]
    class_spec: ClassSpec
    protected: tuple[ProtectedSpec, ...]
    binning: dict[str, tuple[BinRule, ...]] = field(default_factory=dict)
    missing: tuple[str, ...] = DEFAULT_MISSING

    def load(self) -> Dataset:
        """Ingest and preprocess the configured CSV."""
        ds = ingest_csv(self.path, self.schema, self.class_spec, self.protected, self.missing)
        return preprocess(ds, self.binning)


def parse_dataset_config(doc: dict, base_dir: Path, where: str = "config") -> DatasetConfig:
    try:
        columns = _require(doc, "columns", where)
        schema = {str(k): FeatureKind(str(v).lower()) for k, v in columns.items()}
    except (ValueError, AttributeError) as e:
        raise ConfigError(f"{where}: bad column kinds: {e}") from None
    cls = _require(doc, "class", where)
    try:
        class_spec = ClassSpec(str(cls["column"]), cls["favorable"], cls["unfavorable"])
        protected = tuple(
            ProtectedSpec(str(p["column"]), p["privileged"], p["unprivileged"])
            for p in _require(doc, "protected", where)
        )
        binning = {
            str(col): tuple(BinRule(str(r["label"]), r.get("below")) for r in rules)
            for col, rules in (doc.get("binning") or {}).items()
        }
    except (KeyError, TypeError) as e:
        raise ConfigError(f"{where}: malformed class/protected/binning entry: {e}") from None
    if not protected:
        raise ConfigError(f"{where}: at least one protected attribute is required")
    path = Path(str(_require(doc, "path", where)))
    if not path.is_absolute():
        path = base_dir / path
    return DatasetConfig(
        name=str(doc.get("name", path.stem)),
        path=path,
        schema=schema,
        class_spec=class_spec,
        protected=protected,
        binning=binning,
        missing=tuple(str(m) for m in doc.get("missing", DEFAULT_MISSING)),
    )


def load_dataset_config(path) -> DatasetConfig:
    path = Path(path)
    return parse_dataset_config(_read_yaml(path), path.resolve().parent, str(path))
