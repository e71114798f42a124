"""Importance scoring over catalog popularity features.

Each title gets three component scores in [0, 1]: release year on a linear
min-max scale, rank and rating count on a log min-max scale (rank inverted,
lower rank means more popular). The importance score is the weighted sum of
the components under simplex weights.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .catalog import Catalog, Title
from .errors import ConfigError, IngestError
from .jsonl import read_lines, write_jsonl

WEIGHT_SUM_TOL = 1e-9
IMPORTANCE_TOL = 1e-12

POLICY_DEFAULT_SCORE = "default_score"
POLICY_EXCLUDE_TITLE = "exclude_title"
_POLICIES = (POLICY_DEFAULT_SCORE, POLICY_EXCLUDE_TITLE)


@dataclass(frozen=True)
class ComponentScores:
    release_year_score: float
    rank_score: float
    rating_count_score: float

    def __post_init__(self):
        for name in ("release_year_score", "rank_score", "rating_count_score"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} {value} outside [0, 1]")


@dataclass(frozen=True)
class ScoreBounds:
    """Normalization endpoints, either fixed up front or fit from a catalog."""

    min_year: int
    max_year: int
    min_rank: int
    max_rank: int
    max_rating_count: int


@dataclass(frozen=True)
class ImportanceConfig:
    """Weights, missing-feature policy, and optional fixed bounds.

    ``bounds=None`` means fit bounds from the catalog being scored. Weights
    must be nonnegative and sum to 1 (within 1e-9).
    """

    weights: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    missing_feature_policy: str = POLICY_DEFAULT_SCORE
    default_component_score: float = 0.5
    bounds: ScoreBounds | None = None

    def __post_init__(self):
        if len(self.weights) != 3:
            raise ConfigError("weights must be a (year, rank, count) triple")
        if any(w < 0 for w in self.weights):
            raise ConfigError(f"weights must be nonnegative, got {self.weights}")
        total = sum(self.weights)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ConfigError(f"weights must sum to 1, got {total!r}")
        if self.missing_feature_policy not in _POLICIES:
            raise ConfigError(
                f"missing_feature_policy must be one of {_POLICIES}, "
                f"got {self.missing_feature_policy!r}")
        if not 0.0 <= self.default_component_score <= 1.0:
            raise ConfigError(
                f"default_component_score {self.default_component_score} "
                f"outside [0, 1]")


@dataclass(frozen=True)
class ScoredTitle:
    entity_id: str
    components: ComponentScores
    importance: float


def linear_score(x: float, lo: float, hi: float) -> float:
    """Min-max normalize ``x`` into [0, 1], clamping outside values."""
    if lo >= hi:
        raise ConfigError(f"linear bounds need lo < hi, got lo={lo} hi={hi}")
    return min(1.0, max(0.0, (x - lo) / (hi - lo)))


def log_scale_score(x: float, lo: float, hi: float, invert: bool = False) -> float:
    """Min-max normalize ``ln x`` into [0, 1]; ``invert`` flips the scale.

    Inversion serves rank, where 1 is the most popular title and should
    score highest.
    """
    if x <= 0:
        raise ValueError(f"log scale needs x > 0, got {x}")
    if lo <= 0 or hi <= 0:
        raise ValueError(f"log scale needs positive bounds, got lo={lo} hi={hi}")
    if lo >= hi:
        raise ConfigError(f"log bounds need lo < hi, got lo={lo} hi={hi}")
    s = (math.log(x) - math.log(lo)) / (math.log(hi) - math.log(lo))
    s = min(1.0, max(0.0, s))
    return 1.0 - s if invert else s


def importance_score(components: ComponentScores,
                     config: ImportanceConfig) -> float:
    w_year, w_rank, w_count = config.weights
    return (w_year * components.release_year_score
            + w_rank * components.rank_score
            + w_count * components.rating_count_score)


def fit_bounds(catalog: Catalog) -> ScoreBounds:
    """Derive normalization endpoints from the feature values present.

    Raises :class:`ConfigError` naming the feature when no title carries it,
    since min-max over an empty set is meaningless.
    """
    years = [t.release_year for t in catalog.titles if t.release_year is not None]
    ranks = [t.rank for t in catalog.titles if t.rank is not None]
    counts = [t.rating_count for t in catalog.titles if t.rating_count is not None]
    if not years:
        raise ConfigError("cannot fit bounds: no title has release_year")
    if not ranks:
        raise ConfigError("cannot fit bounds: no title has rank")
    if not counts:
        raise ConfigError("cannot fit bounds: no title has rating_count")
    return ScoreBounds(
        min_year=min(years),
        max_year=max(years),
        min_rank=min(ranks),
        max_rank=max(ranks),
        max_rating_count=max(counts),
    )


def _component(value, score_fn, lo, hi, config: ImportanceConfig, **kwargs):
    """Score one feature; None means absent and defers to the policy.

    Returns the score, or None when the policy excludes the title.
    Degenerate bounds (lo == hi) carry no information, so every present
    value scores 1.0.
    """
    if value is None:
        if config.missing_feature_policy == POLICY_EXCLUDE_TITLE:
            return None
        return config.default_component_score
    if lo == hi:
        return 1.0
    return score_fn(value, lo, hi, **kwargs)


def score_title(title: Title, bounds: ScoreBounds,
                config: ImportanceConfig) -> ScoredTitle | None:
    """Score one title, or return None when the policy excludes it."""
    # Rating counts can legitimately be 0; the log scale needs positives,
    # so counts floor at 1 and the lower bound is pinned there.
    count = title.rating_count
    if count is not None:
        count = max(1, count)
    year = _component(title.release_year, linear_score,
                      bounds.min_year, bounds.max_year, config)
    rank = _component(title.rank, log_scale_score,
                      bounds.min_rank, bounds.max_rank, config, invert=True)
    count_score = _component(count, log_scale_score,
                             1, max(1, bounds.max_rating_count), config)
    if year is None or rank is None or count_score is None:
        return None
    components = ComponentScores(year, rank, count_score)
    return ScoredTitle(
        entity_id=title.entity_id,
        components=components,
        importance=importance_score(components, config),
    )


def score_catalog(catalog: Catalog,
                  config: ImportanceConfig) -> tuple[list[ScoredTitle], int]:
    """Score every title; returns (scored sorted by entity_id, excluded tally)."""
    bounds = config.bounds
    if bounds is None:
        if not catalog.titles:
            raise ConfigError("cannot fit bounds from an empty catalog")
        bounds = fit_bounds(catalog)
    scored = []
    excluded = 0
    for title in catalog.titles:
        result = score_title(title, bounds, config)
        if result is None:
            excluded += 1
        else:
            scored.append(result)
    scored.sort(key=lambda s: s.entity_id)
    return scored, excluded


def write_scored(scored: Iterable[ScoredTitle], path: str | Path) -> int:
    def records():
        for item in scored:
            yield {
                "entity_id": item.entity_id,
                "release_year_score": item.components.release_year_score,
                "rank_score": item.components.rank_score,
                "rating_count_score": item.components.rating_count_score,
                "importance": item.importance,
            }

    return write_jsonl(path, records())


def load_scored(path: str | Path) -> list[ScoredTitle]:
    out = []
    for lineno, line in read_lines(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        try:
            components = ComponentScores(
                rec["release_year_score"], rec["rank_score"],
                rec["rating_count_score"])
            out.append(ScoredTitle(rec["entity_id"], components,
                                   rec["importance"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise IngestError(f"{path}:{lineno}: not a scored record: {exc}") from exc
    return out
