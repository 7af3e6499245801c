"""Cross-validated benchmark runner and report writers."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import DatasetConfig, _read_yaml, load_dataset_config, parse_dataset_config
from .data import Dataset, split_cv, subgroup_counts
from .errors import ConfigError, DataError, FairSmoteError, PipelineError
from .learner import LogisticHP, fit_logistic
from .metrics import FAIRNESS, HIGHER_IS_BETTER, METRICS, MetricsReport, confusion, performance, evaluate
from .sampler import FairSmoteConfig, apply_sampler
from .situation import remove_biased, situation_failures, situation_test
from .stats import RankTable, ResultGroup, SignificanceConfig, scott_knott

log = logging.getLogger(__name__)

PIPELINES = ("default", "rus", "ros", "smote", "fair_smote", "fair_smote+situation")
LEARNER = "lsr"
RECORD_KEYS = ("dataset", "protected", "pipeline", "learner", "repeat", "fold")


def derive_seed(*parts: int) -> int:
    """Deterministic 63-bit seed from a master seed and coordinates."""
    seq = np.random.SeedSequence([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])
    return int(seq.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def pipeline_tag(name: str) -> int:
    return zlib.crc32(name.encode())


@dataclass(frozen=True)
class RunPlan:
    dataset: DatasetConfig
    protected: tuple[str, ...]
    pipelines: tuple[str, ...] = ("default", "smote", "fair_smote+situation")
    learner: LogisticHP = LogisticHP()
    smote: FairSmoteConfig = FairSmoteConfig()
    folds: int = 5
    repeats: int = 10
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be at least 1")
        if self.folds < 2:
            raise ConfigError("folds must be at least 2")
        if not self.pipelines:
            raise ConfigError("at least one pipeline is required")
        unknown = [p for p in self.pipelines if p not in PIPELINES]
        if unknown:
            raise ConfigError(f"unknown pipelines {unknown}; choose from {', '.join(PIPELINES)}")
        if len(set(self.pipelines)) != len(self.pipelines):
            raise ConfigError("pipelines must be unique")
        if not self.protected:
            raise ConfigError("at least one protected attribute is required")
        declared = {p.column for p in self.dataset.protected}
        missing = [a for a in self.protected if a not in declared]
        if missing:
            raise ConfigError(f"protected attributes {missing} are not declared in the dataset config")


def load_plan(path, **overrides) -> RunPlan:
    """Read a YAML plan. ``dataset`` is a path to a dataset config or an inline mapping."""
    path = Path(path)
    doc = _read_yaml(path)
    base = path.resolve().parent
    ds = doc.get("dataset")
    if isinstance(ds, dict):
        dataset = parse_dataset_config(ds, base, f"{path}:dataset")
    elif isinstance(ds, str):
        dataset = load_dataset_config(base / ds)
    else:
        raise ConfigError(f"{path}: 'dataset' must be a config path or mapping")
    try:
        learner = LogisticHP(**(doc.get("learner") or {}))
        smote_cfg = FairSmoteConfig(**(doc.get("fair_smote") or {}))
    except TypeError as e:
        raise ConfigError(f"{path}: {e}") from None
    protected = doc.get("protected") or [p.column for p in dataset.protected]
    if isinstance(protected, str):
        protected = [protected]
    fields_ = dict(
        dataset=dataset,
        protected=tuple(protected),
        pipelines=tuple(doc.get("pipelines") or RunPlan.pipelines),
        learner=learner,
        smote=smote_cfg,
        folds=int(doc.get("folds", 5)),
        repeats=int(doc.get("repeats", 10)),
        seed=int(doc.get("seed", 0)),
        workers=int(doc.get("workers", 1)),
    )
    fields_.update({k: v for k, v in overrides.items() if v is not None})
    return RunPlan(**fields_)


@dataclass(frozen=True)
class FoldRecord:
    dataset: str
    protected: str
    pipeline: str
    learner: str
    repeat: int
    fold: int
    report: MetricsReport
    train_rows: int
    # origin ids of the scored test rows, kept for hygiene checks
    test_origin: np.ndarray = field(repr=False, compare=False, default=None)

    def row(self) -> dict:
        return {
            "dataset": self.dataset, "protected": self.protected, "pipeline": self.pipeline,
            "learner": self.learner, "repeat": self.repeat, "fold": self.fold,
            **self.report.as_dict(), "train_rows": self.train_rows,
        }


@dataclass
class BenchmarkResult:
    records: list[FoldRecord]
    # (pipeline, protected) -> metric -> median over repeats
    summary: dict[tuple[str, str], dict[str, float]]
    # (protected, metric) -> ranks over pipelines
    ranks: dict[tuple[str, str], RankTable]
    pipelines: tuple[str, ...]
    protected: tuple[str, ...]


def train_pipeline(name: str, train: Dataset, attrs, learner: LogisticHP, cfg: FairSmoteConfig) -> Dataset:
    """Apply a pipeline's training-data treatment. Test data never passes through here."""
    if name == "default":
        return train
    if name == "fair_smote+situation":
        balanced = apply_sampler("fair_smote", train, attrs, cfg)
        model = fit_logistic(balanced, learner)
        return remove_biased(balanced, situation_failures(balanced, attrs, model))
    return apply_sampler(name, train, attrs, cfg)


def score_fold(test: Dataset, pred: np.ndarray, attr: str) -> MetricsReport:
    """Metrics for one test fold; fairness is NaN when a protected group is absent."""
    bits = test.columns[attr]
    if bits.all() or not bits.any():
        warnings.warn(f"test fold has only one {attr!r} group; fairness metrics recorded as missing")
        perf = performance(confusion(test.labels, pred))
        return MetricsReport(*perf, *(math.nan,) * len(FAIRNESS))
    return evaluate(test.labels, pred, bits)


def _run_cell(args):
    plan, train, test, pipeline, repeat, fold = args
    cfg = replace(plan.smote, seed=derive_seed(plan.seed, repeat, fold, pipeline_tag(pipeline)))
    try:
        treated = train_pipeline(pipeline, train, plan.protected, plan.learner, cfg)
        model = fit_logistic(treated, plan.learner)
        pred = model.predict(test)
    except FairSmoteError as e:
        raise PipelineError(pipeline, repeat, fold, e) from e
    return [
        FoldRecord(plan.dataset.name, attr, pipeline, LEARNER, repeat, fold,
                   score_fold(test, pred, attr), len(treated), test.origin.copy())
        for attr in plan.protected
    ]


def run(plan: RunPlan, ds: Dataset | None = None) -> BenchmarkResult:
    ds = plan.dataset.load() if ds is None else ds
    cells = []
    for r in range(plan.repeats):
        for f, (train, test) in enumerate(split_cv(ds, plan.folds, derive_seed(plan.seed, r))):
            for p in plan.pipelines:
                cells.append((plan, train, test, p, r, f))
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            chunks = list(pool.map(_run_cell, cells))
    else:
        chunks = []
        for c in cells:
            log.info("repeat %d fold %d pipeline %s", c[4], c[5], c[3])
            chunks.append(_run_cell(c))
    records = [rec for chunk in chunks for rec in chunk]
    summary, ranks = summarize(records)
    return BenchmarkResult(records, summary, ranks, tuple(plan.pipelines), tuple(plan.protected))


def repeat_means(records: Sequence[FoldRecord | dict]) -> dict[tuple[str, str], dict[str, list[float]]]:
    """Fold-averaged metrics per repeat: (pipeline, protected) -> metric -> values by repeat."""
    cells: dict[tuple[str, str, int], list[dict]] = {}
    for rec in records:
        row = rec.row() if isinstance(rec, FoldRecord) else rec
        cells.setdefault((row["pipeline"], row["protected"], int(row["repeat"])), []).append(row)
    out: dict[tuple[str, str], dict[str, list[float]]] = {}
    for (pipe, attr, _), rows in sorted(cells.items()):
        per = out.setdefault((pipe, attr), {m: [] for m in METRICS})
        for m in METRICS:
            vals = [float(r[m]) for r in rows if not math.isnan(float(r[m]))]
            per[m].append(float(np.mean(vals)) if vals else math.nan)
    return out


def summarize(records, significance: SignificanceConfig = SignificanceConfig()):
    per_repeat = repeat_means(records)
    summary = {}
    for key, metrics in per_repeat.items():
        summary[key] = {}
        for m, vals in metrics.items():
            finite = [v for v in vals if not math.isnan(v)]
            summary[key][m] = float(np.median(finite)) if finite else math.nan
    ranks = {}
    for attr in sorted({a for _, a in per_repeat}):
        for m in METRICS:
            groups = []
            for (pipe, a), metrics in per_repeat.items():
                finite = [v for v in metrics[m] if not math.isnan(v)]
                if a == attr and finite:
                    groups.append(ResultGroup(pipe, tuple(finite)))
            if groups:
                direction = "higher" if m in HIGHER_IS_BETTER else "lower"
                ranks[(attr, m)] = scott_knott(groups, direction, significance)
    return summary, ranks


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(result: BenchmarkResult, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        cols = list(RECORD_KEYS) + list(METRICS) + ["train_rows"]
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for rec in result.records:
            w.writerow({k: _fmt(v) for k, v in rec.row().items()})
        return buf.getvalue()
    if fmt == "json":
        doc = {
            "records": [rec.row() for rec in result.records],
            "summary": [
                {"pipeline": p, "protected": a, **vals} for (p, a), vals in result.summary.items()
            ],
            "ranks": [
                {"protected": a, "metric": m, "ranks": table.ranks}
                for (a, m), table in result.ranks.items()
            ],
        }
        return json.dumps(_nan_to_none(doc), indent=2, sort_keys=True, allow_nan=False) + "\n"
    if fmt == "markdown":
        return markdown_table(result.summary, result.ranks, result.pipelines, result.protected)
    raise ConfigError(f"unsupported report format {fmt!r}; use csv, json or markdown")


def _nan_to_none(obj):
    if isinstance(obj, float) and math.isnan(obj):
        return None
    if isinstance(obj, dict):
        return {k: _nan_to_none(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_nan_to_none(v) for v in obj]
    return obj


def markdown_table(summary, ranks, pipelines=None, protected=None) -> str:
    """Pipelines x metrics grid; each cell shows the median and its Scott-Knott rank."""
    protected = protected or sorted({a for _, a in summary})
    pipelines = pipelines or sorted({p for p, _ in summary})
    heads = [m + ("(+)" if m in HIGHER_IS_BETTER else "(-)") for m in METRICS]
    out = []
    for attr in protected:
        out.append(f"### Protected attribute: {attr}\n")
        out.append("| pipeline | " + " | ".join(heads) + " |")
        out.append("|---|" + "---|" * len(METRICS))
        for p in pipelines:
            if (p, attr) not in summary:
                continue
            cells = []
            for m in METRICS:
                v = summary[(p, attr)][m]
                table = ranks.get((attr, m))
                rank = table.ranks.get(p) if table else None
                txt = "n/a" if math.isnan(v) else f"{v:.2f}"
                cells.append(txt + (f" [{rank}]" if rank is not None else ""))
            out.append(f"| {p} | " + " | ".join(cells) + " |")
        out.append("")
    return "\n".join(out)


def read_records(path) -> list[dict]:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"results file not found: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    need = set(RECORD_KEYS) | set(METRICS)
    if not rows or not need <= set(rows[0]):
        raise DataError(f"{path} is not a bench CSV report")
    return rows


def audit(ds: Dataset) -> dict:
    """Class balance and per-attribute subgroup counts for one dataset."""
    n = len(ds)
    fav = int(ds.labels.sum())
    doc = {"rows": n, "favorable": fav, "unfavorable": n - fav, "favorable_share": fav / n, "attributes": {}}
    for p in ds.protected:
        counts = subgroup_counts(ds, [p.column])
        by_class = {}
        for cls in (1, 0):
            total = counts.get((cls, 0), 0) + counts.get((cls, 1), 0)
            by_class["favorable" if cls else "unfavorable"] = {
                "privileged_share": counts.get((cls, 1), 0) / total if total else math.nan,
                "unprivileged_share": counts.get((cls, 0), 0) / total if total else math.nan,
            }
        doc["attributes"][p.column] = {
            "counts": {f"class={k[0]},{p.column}={k[1]}": v for k, v in sorted(counts.items())},
            "shares": by_class,
            "imbalance_ratio": max(counts.values()) / min(counts.values()) if len(counts) == 4 else math.inf,
        }
    return doc


def situation_fractions(
    ds: Dataset, attrs, learner: LogisticHP = LogisticHP(), folds: int = 5, repeats: int = 10, seed: int = 0
) -> dict[str, dict]:
    """Share of training rows failing situation testing, median over repeats.

    Each repeat averages the failing share over its CV training folds.
    """
    attrs = [ds.protected_spec(a).column for a in attrs]
    per = {a: [] for a in attrs}
    for r in range(repeats):
        fold_vals = {a: [] for a in attrs}
        for train, _ in split_cv(ds, folds, derive_seed(seed, r)):
            model = fit_logistic(train, learner)
            for a in attrs:
                fold_vals[a].append(situation_test(train, a, model).fraction)
        for a in attrs:
            per[a].append(float(np.mean(fold_vals[a])))
    return {a: {"median_fraction": float(np.median(v)), "per_repeat": v} for a, v in per.items()}
