import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fairsmote.data import Dataset, FeatureKind, subgroup_counts
from fairsmote.errors import ConfigError, DataError
from fairsmote.sampler import (
    FairSmoteConfig,
    NeighborIndex,
    _crossover,
    apply_sampler,
    fair_smote,
    ros,
    rus,
    smote,
    smote_point,
)

from conftest import INCOME, SEX, make_dataset


def with_counts(counts, seed=0):
    """Fixture whose (class, sex) subgroup sizes are exactly ``counts``."""
    rng = np.random.default_rng(seed)
    y, s = [], []
    for (cls, sex), n in counts.items():
        y += [cls] * n
        s += [sex] * n
    n = len(y)
    schema = (("x", FeatureKind.NUMERIC), ("c", FeatureKind.CATEGORICAL),
              ("b", FeatureKind.BOOLEAN), ("sex", FeatureKind.BOOLEAN))
    cols = {"x": rng.random(n), "c": rng.choice(np.array(["p", "q", "r"], dtype=object), n),
            "b": rng.integers(0, 2, n), "sex": np.array(s)}
    return Dataset(schema, cols, np.array(y), INCOME, (SEX,))


def rows_of(ds):
    return [tuple(ds.columns[n][i] for n in ds.feature_names) + (ds.labels[i],) for i in range(len(ds))]


def test_max_equalization():
    ds = with_counts({(1, 1): 100, (1, 0): 30, (0, 1): 60, (0, 0): 10})
    out = fair_smote(ds, ["sex"], FairSmoteConfig(seed=4))
    assert subgroup_counts(out, ["sex"]) == {k: 100 for k in [(0, 0), (0, 1), (1, 0), (1, 1)]}
    synth = out.take(np.flatnonzero(out.origin < 0))
    assert subgroup_counts(synth, ["sex"]) == {(0, 0): 90, (0, 1): 40, (1, 0): 70}


def test_balanced_input_unchanged():
    ds = with_counts({(1, 1): 5, (1, 0): 5, (0, 1): 5, (0, 0): 5})
    out = fair_smote(ds, ["sex"])
    assert rows_of(out) == rows_of(ds)


def test_numeric_crossover_value():
    schema = (("x", FeatureKind.NUMERIC), ("sex", FeatureKind.BOOLEAN))
    sub = Dataset(schema, {"x": np.array([0.5, 0.7, 0.3]), "sex": np.ones(3)}, np.ones(3), INCOME, (SEX,))
    cfg = FairSmoteConfig(cr=1.0, f=0.8)
    cols = _crossover(sub, np.array([0]), np.array([1]), np.array([2]), cfg, np.random.default_rng(0), {"sex"})
    assert cols["x"][0] == pytest.approx(0.82)
    never = _crossover(sub, np.array([0]), np.array([1]), np.array([2]),
                       FairSmoteConfig(cr=0.0), np.random.default_rng(0), {"sex"})
    assert never["x"][0] == 0.5


def test_neighbours_of_middle_point():
    schema = (("x", FeatureKind.NUMERIC), ("sex", FeatureKind.BOOLEAN))
    sub = Dataset(schema, {"x": np.array([0.5, 0.7, 0.3, 0.95]), "sex": np.ones(4)}, np.ones(4), INCOME, (SEX,))
    assert NeighborIndex(sub, skip={"sex"}).kneighbors([0], 2).tolist() == [[1, 2]]


def test_two_attributes_eight_subgroups(mixed2):
    out = fair_smote(mixed2, ["sex", "race"], FairSmoteConfig(seed=2))
    counts = subgroup_counts(out, ["sex", "race"])
    assert len(counts) == 8
    assert len(set(counts.values())) == 1


def test_subgroup_too_small():
    ds = with_counts({(1, 1): 10, (1, 0): 2, (0, 1): 10, (0, 0): 10})
    with pytest.raises(DataError, match="at least 3"):
        fair_smote(ds, ["sex"])
    with pytest.raises(ConfigError):
        fair_smote(ds, [])


def test_config_validation():
    with pytest.raises(ConfigError):
        FairSmoteConfig(cr=1.5)
    with pytest.raises(ConfigError):
        FairSmoteConfig(k_neighbors=1)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.booleans(), st.sampled_from([2, 3, 5]))
def test_fair_smote_properties(seed, per_row, k):
    ds = make_dataset(n=150, seed=seed % 50)
    cfg = FairSmoteConfig(seed=seed, crossover_per_row=per_row, k_neighbors=k)
    out = fair_smote(ds, ["sex"], cfg)
    counts = subgroup_counts(out, ["sex"])
    assert max(counts.values()) == min(counts.values())
    # originals survive untouched, in order
    assert rows_of(out.take(np.arange(len(ds)))) == rows_of(ds)
    assert (out.origin[len(ds):] == -1).all()
    synth = out.take(np.arange(len(ds), len(out)))
    keys_ds = np.column_stack([ds.labels, ds.columns["sex"]])
    for cls in (0, 1):
        for sex in (0, 1):
            members = (keys_ds == (cls, sex)).all(axis=1)
            made = (synth.labels == cls) & (synth.columns["sex"] == sex)
            for col in ("x", "z"):
                v = ds.columns[col][members]
                lo, hi = v.min() - cfg.f * np.ptp(v), v.max() + cfg.f * np.ptp(v)
                s = synth.columns[col][made]
                assert ((s >= max(lo, 0.0) - 1e-12) & (s <= min(hi, 1.0) + 1e-12)).all()
            assert set(synth.columns["color"][made]) <= set(ds.columns["color"][members])
    again = fair_smote(ds, ["sex"], cfg)
    assert rows_of(again) == rows_of(out)


def test_categorical_values_come_from_the_triple():
    rng = np.random.default_rng(0)
    n = 30
    schema = (("c", FeatureKind.CATEGORICAL), ("b", FeatureKind.BOOLEAN), ("sex", FeatureKind.BOOLEAN))
    sub = Dataset(schema, {"c": np.array([f"v{i}" for i in range(n)], dtype=object),
                           "b": rng.integers(0, 2, n), "sex": np.ones(n)}, np.ones(n), INCOME, (SEX,))
    p, a, b = rng.integers(0, n, 200), rng.integers(0, n, 200), rng.integers(0, n, 200)
    cols = _crossover(sub, p, a, b, FairSmoteConfig(), rng, {"sex"})
    for i in range(200):
        assert cols["c"][i] in {f"v{p[i]}", f"v{a[i]}", f"v{b[i]}"}
        assert cols["b"][i] in {sub.columns["b"][j] for j in (p[i], a[i], b[i])}


def test_seed_changes_output(mixed):
    a = fair_smote(mixed, ["sex"], FairSmoteConfig(seed=1))
    b = fair_smote(mixed, ["sex"], FairSmoteConfig(seed=2))
    assert rows_of(a) != rows_of(b)


def _brute_knn(ds, q, k):
    def dist(i, j):
        num = sum((ds.columns[c][i] - ds.columns[c][j]) ** 2 for c in ("x", "z")) ** 0.5
        return num + sum(ds.columns[c][i] != ds.columns[c][j] for c in ("color", "flag", "sex"))

    others = sorted((round(dist(q, j), 9), j) for j in range(len(ds)) if j != q)
    return [j for _, j in others[:k]]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 500), st.integers(2, 4))
def test_neighbor_index_matches_brute_force(seed, k):
    ds = make_dataset(n=25, seed=seed)
    # round to create exact distance ties
    ds = ds.replace({"x": np.round(ds.columns["x"], 1), "z": np.round(ds.columns["z"], 1)})
    got = NeighborIndex(ds).kneighbors(np.arange(len(ds)), k)
    for q in range(len(ds)):
        assert got[q].tolist() == _brute_knn(ds, q, k)


def test_neighbor_index_never_returns_self():
    ds = make_dataset(n=20).take([0] * 5 + list(range(1, 6)))
    nb = NeighborIndex(ds).kneighbors(np.arange(10), 3)
    assert all(q not in row for q, row in enumerate(nb.tolist()))
    # exact duplicates are each other's nearest neighbours
    assert nb[0].tolist() == [1, 2, 3]


def test_smote_counts_and_identity():
    ds = with_counts({(1, 1): 60, (1, 0): 40, (0, 1): 30, (0, 0): 10})
    out = smote(ds, FairSmoteConfig(seed=3))
    assert (out.labels == 1).sum() == (out.labels == 0).sum() == 100
    balanced = with_counts({(1, 1): 5, (1, 0): 5, (0, 1): 5, (0, 0): 5})
    assert rows_of(smote(balanced)) == rows_of(balanced)


def test_smote_formula():
    assert smote_point(np.array([0.2]), np.array([0.6]), 0.5)[0] == pytest.approx(0.0)
    assert smote_point(np.array([0.6]), np.array([0.2]), 0.5)[0] == pytest.approx(0.8)


def test_smote_ignores_protected_balance():
    ds = make_dataset(n=300, seed=5)
    out = smote(ds, FairSmoteConfig(seed=1))
    assert (out.labels == 1).sum() == (out.labels == 0).sum()
    counts = subgroup_counts(out, ["sex"])
    assert max(counts.values()) != min(counts.values())
    assert rows_of(out.take(np.arange(len(ds)))) == rows_of(ds)


def test_smote_single_class():
    ds = with_counts({(1, 1): 5, (1, 0): 5})
    for fn in (smote, ros, rus):
        with pytest.raises(DataError):
            fn(ds)


def test_ros_rus_counts():
    ds = with_counts({(1, 1): 60, (1, 0): 40, (0, 1): 30, (0, 0): 10})
    up = ros(ds, seed=1)
    assert ((up.labels == 1).sum(), (up.labels == 0).sum()) == (100, 100)
    down = rus(ds, seed=1)
    assert ((down.labels == 1).sum(), (down.labels == 0).sum()) == (40, 40)
    # ROS keeps every original row and only adds copies of minority rows
    assert rows_of(up.take(np.arange(len(ds)))) == rows_of(ds)
    minority = set(rows_of(ds.take(np.flatnonzero(ds.labels == 0))))
    assert set(rows_of(up.take(np.arange(len(ds), len(up))))) <= minority
    # RUS keeps every minority row
    assert sorted(rows_of(down.take(np.flatnonzero(down.labels == 0)))) == sorted(minority)
    assert rows_of(rus(ds, seed=1)) == rows_of(down)


def test_ros_rus_identity():
    ds = with_counts({(1, 1): 5, (1, 0): 5, (0, 1): 5, (0, 0): 5})
    assert rows_of(ros(ds)) == rows_of(ds)
    assert rows_of(rus(ds)) == rows_of(ds)


def test_apply_sampler_dispatch(mixed):
    assert apply_sampler("none", mixed, ["sex"], FairSmoteConfig()) is mixed
    with pytest.raises(ConfigError):
        apply_sampler("kmeans_smote", mixed, ["sex"], FairSmoteConfig())
