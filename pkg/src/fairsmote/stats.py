"""Scott-Knott ranking of treatment result distributions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DataError


@dataclass(frozen=True)
class ResultGroup:
    label: str
    observations: tuple[float, ...]

    def __post_init__(self):
        obs = tuple(float(x) for x in self.observations)
        if not obs:
            raise DataError(f"group {self.label!r} has no observations")
        if not all(np.isfinite(obs)):
            raise DataError(f"group {self.label!r} has non-finite observations")
        object.__setattr__(self, "observations", obs)

    @property
    def mean(self) -> float:
        return float(np.mean(self.observations))


@dataclass(frozen=True)
class SignificanceConfig:
    resamples: int = 512
    confidence: float = 0.95
    # Cohen's d below this is treated as no difference
    min_effect: float = 0.2
    seed: int = 0


@dataclass
class RankTable:
    ranks: dict[str, int] = field(default_factory=dict)

    def __getitem__(self, label: str) -> int:
        return self.ranks[label]

    def __len__(self) -> int:
        return len(self.ranks)


def expected_delta(left: np.ndarray, right: np.ndarray) -> float:
    """Size-weighted squared deviation of the two part means from the pooled mean."""
    a, b = len(left), len(right)
    ma, mb = float(np.mean(left)), float(np.mean(right))
    mu = (a * ma + b * mb) / (a + b)
    return a / (a + b) * (ma - mu) ** 2 + b / (a + b) * (mb - mu) ** 2


def best_split(groups: Sequence[ResultGroup]) -> tuple[int, float]:
    """Split position (1..len-1) maximizing E[delta]; the first maximum wins.

    Scores within float noise (1e-12 relative) of the running best count as ties.
    """
    best, best_score = 0, -np.inf
    for i in range(1, len(groups)):
        left = np.concatenate([g.observations for g in groups[:i]])
        right = np.concatenate([g.observations for g in groups[i:]])
        score = expected_delta(left, right)
        if best == 0 or score > best_score + 1e-12 * abs(best_score):
            best, best_score = i, score
    return best, best_score


def cohens_d(left: np.ndarray, right: np.ndarray) -> float:
    a, b = len(left), len(right)
    diff = abs(float(np.mean(left)) - float(np.mean(right)))
    dof = a + b - 2
    var = ((a - 1) * np.var(left, ddof=1 if a > 1 else 0) + (b - 1) * np.var(right, ddof=1 if b > 1 else 0))
    sd = np.sqrt(var / dof) if dof > 0 else 0.0
    if sd == 0:
        return np.inf if diff > 0 else 0.0
    return diff / sd


def significant(left, right, cfg: SignificanceConfig, rng: np.random.Generator) -> bool:
    """Effect-size floor plus a pooled bootstrap on E[delta]."""
    left, right = np.asarray(left, float), np.asarray(right, float)
    if cohens_d(left, right) < cfg.min_effect:
        return False
    observed = expected_delta(left, right)
    pooled = np.concatenate([left, right])
    n, a = len(pooled), len(left)
    draws = pooled[rng.integers(0, n, size=(cfg.resamples, n))]
    ma = draws[:, :a].mean(axis=1)
    mb = draws[:, a:].mean(axis=1)
    mu = (a * ma + (n - a) * mb) / n
    null = a / n * (ma - mu) ** 2 + (n - a) / n * (mb - mu) ** 2
    return observed > np.quantile(null, cfg.confidence)


def scott_knott(
    groups: Iterable[ResultGroup],
    direction: str = "higher",
    significance: SignificanceConfig = SignificanceConfig(),
) -> RankTable:
    """Rank groups by recursive bi-clustering; rank 1 is best.

    ``direction`` is ``"higher"`` when larger observations are better and
    ``"lower"`` otherwise.
    """
    groups = list(groups)
    if not groups:
        raise DataError("scott_knott needs at least one group")
    if direction not in ("higher", "lower"):
        raise ConfigError(f"direction must be 'higher' or 'lower', not {direction!r}")
    labels = [g.label for g in groups]
    if len(set(labels)) != len(labels):
        raise DataError("group labels must be unique")
    sign = -1.0 if direction == "higher" else 1.0
    ordered = sorted(groups, key=lambda g: (sign * g.mean, g.label))

    leaves: list[list[ResultGroup]] = []

    def recurse(lo: int, hi: int) -> None:
        part = ordered[lo:hi]
        if len(part) > 1:
            cut, _ = best_split(part)
            left = np.concatenate([g.observations for g in part[:cut]])
            right = np.concatenate([g.observations for g in part[cut:]])
            rng = np.random.default_rng([significance.seed, lo, hi])
            if significant(left, right, significance, rng):
                recurse(lo, lo + cut)
                recurse(lo + cut, hi)
                return
        leaves.append(part)

    recurse(0, len(ordered))
    return RankTable({g.label: rank for rank, leaf in enumerate(leaves, 1) for g in leaf})


def win_tie_loss(tables: Iterable[RankTable], ours: str, other: str) -> tuple[int, int, int]:
    """Count tables where ``ours`` ranks better, equal, or worse than ``other``."""
    win = tie = loss = 0
    for t in tables:
        if t[ours] < t[other]:
            win += 1
        elif t[ours] == t[other]:
            tie += 1
        else:
            loss += 1
    return win, tie, loss
