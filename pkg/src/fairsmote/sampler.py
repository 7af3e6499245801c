"""Fair-SMOTE and the baseline class balancers (RUS, ROS, SMOTE)."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np

from .data import Dataset, FeatureKind, _attr_names, subgroup_keys
from .errors import ConfigError, DataError

log = logging.getLogger(__name__)

SAMPLERS = ("none", "rus", "ros", "smote", "fair_smote")

_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class FairSmoteConfig:
    cr: float = 0.8
    f: float = 0.8
    k_neighbors: int = 2
    seed: int = 0
    # one crossover draw per synthetic row instead of one per column
    crossover_per_row: bool = False

    def __post_init__(self):
        if not (0.0 <= self.cr <= 1.0 and 0.0 <= self.f <= 1.0):
            raise ConfigError("cr and f must lie in [0, 1]")
        if self.k_neighbors < 2:
            raise ConfigError("k_neighbors must be at least 2")


def _rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng([int(p) & 0xFFFFFFFFFFFFFFFF for p in parts])


class NeighborIndex:
    """Exact k-nearest-neighbour lookup over a fixed set of rows.

    Distance is Euclidean over numeric columns plus the count of mismatching
    boolean/categorical cells. Ties break on row position; distances are
    rounded to 12 decimals first so that float noise does not split ties.
    """

    def __init__(self, ds: Dataset, skip=()):
        num, codes = [], []
        for name, kind in ds.schema:
            if name in skip:
                continue
            col = ds.columns[name]
            if kind is FeatureKind.NUMERIC:
                num.append(col)
            else:
                codes.append(np.unique(col, return_inverse=True)[1])
        n = len(ds)
        numeric = np.column_stack(num) if num else np.zeros((n, 0))
        codes = np.column_stack(codes) if codes else np.zeros((n, 0), dtype=np.int64)
        # distances are computed between distinct rows, then gathered
        uniq, self.inverse = np.unique(np.column_stack([numeric, codes]), axis=0, return_inverse=True)
        self.inverse = self.inverse.ravel()
        self.numeric = uniq[:, : numeric.shape[1]]
        self.codes = uniq[:, numeric.shape[1]:]
        self.size = n

    def _unique_distances(self, uq) -> np.ndarray:
        sq = np.zeros((len(uq), len(self.numeric)))
        for j in range(self.numeric.shape[1]):
            col = self.numeric[:, j]
            sq += (col[None, :] - col[uq][:, None]) ** 2
        d = np.sqrt(sq)
        for j in range(self.codes.shape[1]):
            col = self.codes[:, j]
            d += col[None, :] != col[uq][:, None]
        return d

    def distances(self, rows) -> np.ndarray:
        """Distance matrix from the indexed rows ``rows`` to every indexed row."""
        uq, back = np.unique(self.inverse[np.asarray(rows)], return_inverse=True)
        return self._unique_distances(uq)[back.ravel()][:, self.inverse]

    def kneighbors(self, rows, k: int) -> np.ndarray:
        """The ``k`` nearest rows to each of ``rows``, excluding the row itself.

        Returns positions in nondecreasing distance order, shape (len(rows), k).
        """
        rows = np.asarray(rows, dtype=np.int64)
        if k > self.size - 1:
            raise DataError(f"need more than {k} rows to find {k} neighbours, have {self.size}")
        out = np.empty((len(rows), k), dtype=np.int64)
        step = max(1, _CHUNK_CELLS // max(self.size, 1))
        for start in range(0, len(rows), step):
            chunk = rows[start:start + step]
            d = np.round(self.distances(chunk), 12)
            d[np.arange(len(chunk)), chunk] = np.inf
            kth = np.partition(d, k - 1, axis=1)[:, k - 1]
            for i, row in enumerate(d):
                closer = np.flatnonzero(row < kth[i])
                closer = closer[np.argsort(row[closer], kind="stable")]
                tied = np.flatnonzero(row == kth[i])[: k - len(closer)]
                out[start + i] = np.concatenate([closer, tied])
        return out


def _pick3(choice, p, c1, c2):
    return np.where(choice == 0, p, np.where(choice == 1, c1, c2))


def _crossover(sub: Dataset, parents, c1, c2, cfg: FairSmoteConfig, rng, keep: set) -> dict:
    """Build synthetic columns from parent/neighbour triples."""
    m = len(parents)
    row_fire = rng.random(m) < cfg.cr if cfg.crossover_per_row else None
    cols = {}
    for name, kind in sub.schema:
        col = sub.columns[name]
        p, a, b = col[parents], col[c1], col[c2]
        if name in keep:
            cols[name] = p
            continue
        if kind is FeatureKind.CATEGORICAL:
            cols[name] = _pick3(rng.integers(0, 3, m), p, a, b)
            continue
        fire = row_fire if row_fire is not None else rng.random(m) < cfg.cr
        if kind is FeatureKind.BOOLEAN:
            cols[name] = np.where(fire, _pick3(rng.integers(0, 3, m), p, a, b), p)
        else:
            cols[name] = np.clip(np.where(fire, p + cfg.f * (a - b), p), 0.0, 1.0)
    return cols


def _synthetic(template: Dataset, cols: dict, label: int, m: int) -> Dataset:
    return Dataset(
        template.schema,
        cols,
        np.full(m, label, dtype=np.int8),
        template.class_spec,
        template.protected,
        np.full(m, -1, dtype=np.int64),
    )


def generate_for_subgroup(sub: Dataset, to_generate: int, cfg: FairSmoteConfig, rng, keep=()) -> Dataset:
    """Synthesize ``to_generate`` rows from one (class x protected) subgroup."""
    keep = set(keep)
    if len(sub) < cfg.k_neighbors + 1:
        raise DataError(f"subgroup has {len(sub)} rows; Fair-SMOTE needs at least {cfg.k_neighbors + 1}")
    parents = rng.integers(0, len(sub), size=to_generate)
    uniq, inverse = np.unique(parents, return_inverse=True)
    nbrs = NeighborIndex(sub, skip=keep).kneighbors(uniq, cfg.k_neighbors)[inverse]
    if cfg.k_neighbors == 2:
        c1, c2 = nbrs[:, 0], nbrs[:, 1]
    else:
        # two distinct neighbours drawn from the k nearest
        first = rng.integers(0, cfg.k_neighbors, size=to_generate)
        second = (first + rng.integers(1, cfg.k_neighbors, size=to_generate)) % cfg.k_neighbors
        rows = np.arange(to_generate)
        c1, c2 = nbrs[rows, first], nbrs[rows, second]
    cols = _crossover(sub, parents, c1, c2, cfg, rng, keep)
    return _synthetic(sub, cols, int(sub.labels[0]), to_generate)


def fair_smote(train: Dataset, attrs, cfg: FairSmoteConfig = FairSmoteConfig()) -> Dataset:
    """Oversample every (class x protected attrs) subgroup up to the largest one.

    Each subgroup draws from its own generator seeded by ``cfg.seed`` and the
    subgroup key, so the output does not depend on processing order.
    """
    names = _attr_names(train, attrs)
    keys = subgroup_keys(train, names)
    all_keys = list(product((0, 1), repeat=1 + len(names)))
    members = {k: np.flatnonzero((keys == k).all(axis=1)) for k in all_keys}
    for k, idx in members.items():
        if len(idx) < cfg.k_neighbors + 1:
            raise DataError(
                f"subgroup (class, {', '.join(names)}) = {k} has {len(idx)} rows; "
                f"at least {cfg.k_neighbors + 1} are needed"
            )
    target = max(len(idx) for idx in members.values())
    out = train
    for k in all_keys:
        need = target - len(members[k])
        if need == 0:
            continue
        rng = _rng(cfg.seed, *k, len(names))
        out = out.append(generate_for_subgroup(train.take(members[k]), need, cfg, rng, keep=names))
    log.debug("fair_smote: %d -> %d rows", len(train), len(out))
    return out


def _class_split(train: Dataset):
    pos = np.flatnonzero(train.labels == 1)
    neg = np.flatnonzero(train.labels == 0)
    if len(pos) == 0 or len(neg) == 0:
        raise DataError("balancing needs both classes present")
    return (pos, neg) if len(pos) < len(neg) else (neg, pos)


def ros(train: Dataset, seed: int = 0) -> Dataset:
    minority, majority = _class_split(train)
    need = len(majority) - len(minority)
    if need == 0:
        return train
    extra = _rng(seed, 1).choice(minority, size=need, replace=True)
    dup = train.take(extra)
    return train.append(dup)


def rus(train: Dataset, seed: int = 0) -> Dataset:
    minority, majority = _class_split(train)
    if len(majority) == len(minority):
        return train
    kept = _rng(seed, 2).choice(majority, size=len(minority), replace=False)
    return train.take(np.sort(np.concatenate([minority, kept])))


def smote_point(x, neighbor, r):
    """``x + r * (x - neighbor)``, clamped to [0, 1]."""
    return np.clip(x + r * (x - neighbor), 0.0, 1.0)


def smote(train: Dataset, cfg: FairSmoteConfig = FairSmoteConfig()) -> Dataset:
    """Class-only SMOTE: ``Y = X + r * (X - X')`` on numeric columns.

    ``r`` is drawn once per synthetic row; non-numeric cells come from X.
    Protected attributes get no special treatment.
    """
    minority, majority = _class_split(train)
    need = len(majority) - len(minority)
    if need == 0:
        return train
    if len(minority) < 2:
        raise DataError("SMOTE needs at least two minority rows")
    sub = train.take(minority)
    k = min(cfg.k_neighbors, len(sub) - 1)
    rng = _rng(cfg.seed, 3)
    parents = rng.integers(0, len(sub), size=need)
    uniq, inverse = np.unique(parents, return_inverse=True)
    nbrs = NeighborIndex(sub).kneighbors(uniq, k)[inverse]
    other = nbrs[np.arange(need), rng.integers(0, k, size=need)]
    r = rng.random(need)
    cols = {}
    for name, kind in sub.schema:
        x = sub.columns[name][parents]
        if kind is FeatureKind.NUMERIC:
            x = smote_point(x, sub.columns[name][other], r)
        cols[name] = x
    return train.append(_synthetic(sub, cols, int(sub.labels[0]), need))


def apply_sampler(name: str, train: Dataset, attrs, cfg: FairSmoteConfig) -> Dataset:
    if name == "none":
        return train
    if name == "rus":
        return rus(train, cfg.seed)
    if name == "ros":
        return ros(train, cfg.seed)
    if name == "smote":
        return smote(train, cfg)
    if name == "fair_smote":
        return fair_smote(train, attrs, cfg)
    raise ConfigError(f"unknown sampler {name!r}; choose from {', '.join(SAMPLERS)}")
