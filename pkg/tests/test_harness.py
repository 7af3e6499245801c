import json
import math

import numpy as np
import pytest

from fairsmote.config import load_dataset_config
from fairsmote.errors import ConfigError, PipelineError
from fairsmote.harness import (
    RunPlan,
    audit,
    derive_seed,
    emit_report,
    load_plan,
    read_records,
    run,
    score_fold,
    situation_fractions,
    summarize,
)
from fairsmote.metrics import METRICS

from conftest import write_bench_files


def test_small_run_shape(tmp_path):
    plan = load_plan(write_bench_files(tmp_path, n=20))
    res = run(plan)
    assert len(res.records) == 2
    assert list(res.summary) == [("default", "sex")]
    assert set(res.summary[("default", "sex")]) == set(METRICS)
    # each test row is scored exactly once per repeat
    seen = np.concatenate([r.test_origin for r in res.records])
    assert sorted(seen.tolist()) == list(range(20))


@pytest.fixture(scope="module")
def bench(tmp_path_factory):
    path = write_bench_files(tmp_path_factory.mktemp("bench"),
                             pipelines=("default", "smote", "fair_smote", "fair_smote+situation"),
                             folds=3, repeats=2)
    return load_plan(path), run(load_plan(path))


def test_records_and_determinism(bench):
    plan, res = bench
    assert len(res.records) == 4 * 3 * 2
    assert emit_report(run(plan)) == emit_report(res)


def test_hygiene(bench):
    plan, res = bench
    ds = plan.dataset.load()
    for rec in res.records:
        # test rows are real rows and the train set never saw them
        assert (rec.test_origin >= 0).all()
        assert len(set(rec.test_origin.tolist())) == len(rec.test_origin)
    by_cell = {}
    for rec in res.records:
        by_cell.setdefault((rec.repeat, rec.fold), set()).update([tuple(rec.test_origin.tolist())])
    for (r, f), variants in by_cell.items():
        # every pipeline scored on the same test fold
        assert len(variants) == 1
    for r in range(plan.repeats):
        folds = [set(next(iter(v))) for (rr, _), v in by_cell.items() if rr == r]
        assert set().union(*folds) == set(range(len(ds)))
        assert sum(map(len, folds)) == len(ds)


def test_fair_smote_grows_training_set(bench):
    _, res = bench
    rows = {(r.pipeline, r.repeat, r.fold): r.train_rows for r in res.records}
    for (p, r, f), n in rows.items():
        if p == "fair_smote":
            assert n > rows[("default", r, f)]


def test_csv_roundtrip(bench, tmp_path):
    _, res = bench
    path = tmp_path / "out.csv"
    path.write_text(emit_report(res))
    rows = read_records(path)
    assert len(rows) == len(res.records)
    for row, rec in zip(rows, res.records):
        for m in METRICS:
            assert float(row[m]) == getattr(rec.report, m) or (
                math.isnan(float(row[m])) and math.isnan(getattr(rec.report, m)))
    summary, ranks = summarize(rows)
    assert summary == res.summary
    assert {k: t.ranks for k, t in ranks.items()} == {k: t.ranks for k, t in res.ranks.items()}


def test_json_and_markdown(bench):
    _, res = bench
    doc = json.loads(emit_report(res, "json"))
    assert len(doc["records"]) == len(res.records)
    md = emit_report(res, "markdown")
    table_rows = [l for l in md.splitlines() if l.startswith("| ") and not l.startswith("| pipeline")]
    assert len(table_rows) == 4
    with pytest.raises(ConfigError):
        emit_report(res, "xml")


def test_summary_is_median_of_fold_means(bench):
    _, res = bench
    vals = {}
    for rec in res.records:
        if rec.pipeline == "default":
            vals.setdefault(rec.repeat, []).append(rec.report.recall)
    expected = float(np.median([np.mean(v) for v in vals.values()]))
    assert res.summary[("default", "sex")]["recall"] == pytest.approx(expected, abs=1e-15)


def test_degenerate_fold_records_nan(mixed):
    test = mixed.take(np.flatnonzero(mixed.columns["sex"] == 1))
    with pytest.warns(UserWarning, match="only one"):
        rep = score_fold(test, test.labels.copy(), "sex")
    assert rep.accuracy == 1.0
    assert math.isnan(rep.aod) and math.isnan(rep.spd)


def test_pipeline_error_names_the_cell(tmp_path):
    plan = load_plan(write_bench_files(tmp_path, n=12, pipelines=("fair_smote",), folds=2))
    with pytest.raises(PipelineError) as info:
        run(plan)
    assert info.value.pipeline == "fair_smote"
    assert "fair_smote" in str(info.value)


def test_plan_validation(tmp_path):
    path = write_bench_files(tmp_path, n=20)
    plan = load_plan(path)
    with pytest.raises(ConfigError):
        RunPlan(plan.dataset, ("sex",), pipelines=())
    with pytest.raises(ConfigError):
        RunPlan(plan.dataset, ("sex",), pipelines=("magic",))
    with pytest.raises(ConfigError):
        RunPlan(plan.dataset, ("race",))
    with pytest.raises(ConfigError):
        RunPlan(plan.dataset, ("sex",), folds=1)
    with pytest.raises(ConfigError):
        load_plan(tmp_path / "missing.yaml")
    assert load_plan(path, repeats=4).repeats == 4


def test_seed_lattice():
    assert derive_seed(0, 1) == derive_seed(0, 1)
    assert len({derive_seed(0, r) for r in range(100)}) == 100
    assert derive_seed(0, 1, 2) != derive_seed(0, 2, 1)


def test_audit_and_situation(tmp_path):
    write_bench_files(tmp_path, n=200)
    ds = load_dataset_config(tmp_path / "toy.yaml").load()
    doc = audit(ds)
    assert doc["rows"] == 200
    assert sum(doc["attributes"]["sex"]["counts"].values()) == 200
    frac = situation_fractions(ds, ["sex"], folds=2, repeats=3)
    assert len(frac["sex"]["per_repeat"]) == 3
    assert 0.0 <= frac["sex"]["median_fraction"] <= 1.0


def test_read_records_errors(tmp_path):
    with pytest.raises(ConfigError):
        read_records(tmp_path / "nope.csv")
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n1,2\n")
    with pytest.raises(Exception):
        read_records(bad)
