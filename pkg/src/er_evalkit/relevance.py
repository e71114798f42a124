"""Relevance test-set construction.

Joins filtered CTR pairs with importance-scored titles: a (query, entity)
pair becomes a relevance judgment when the entity is scored and its
importance clears the threshold. Each judgment carries provenance (ctr,
nimp, importance) so the thresholds it passed stay auditable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .clickstream import CtrRecord
from .errors import ConfigError, IngestError
from .importance import ScoredTitle
from .jsonl import read_lines, write_jsonl

DEFAULT_MIN_IMPORTANCE = 0.3


@dataclass(frozen=True)
class ProvenanceRecord:
    ctr: float
    nimp: int
    importance: float


@dataclass
class RelevanceSet:
    """Query → relevant entity ids, with per-pair provenance on the side."""

    entries: dict[str, set[str]] = field(default_factory=dict)
    provenance: dict[tuple[str, str], ProvenanceRecord] = field(default_factory=dict)

    def __len__(self) -> int:
        return sum(len(ids) for ids in self.entries.values())


@dataclass(frozen=True)
class MergeSummary:
    included: int
    dropped_unscored: int
    dropped_low_importance: int


def merge_relevance(ctr_records: Iterable[CtrRecord],
                    scored: Iterable[ScoredTitle],
                    min_importance: float = DEFAULT_MIN_IMPORTANCE,
                    ) -> tuple[RelevanceSet, MergeSummary]:
    """Join CTR pairs with scored titles into a RelevanceSet.

    Pairs whose entity is not in ``scored`` are dropped (unjoinable), as are
    pairs whose importance falls below ``min_importance``; both outcomes are
    tallied, never raised. Output is independent of input order.
    """
    if not 0.0 <= min_importance <= 1.0:
        raise ConfigError(f"min_importance {min_importance} outside [0, 1]")
    importance_by_id = {s.entity_id: s.importance for s in scored}
    relset = RelevanceSet()
    included = dropped_unscored = dropped_low = 0
    for rec in sorted(ctr_records, key=lambda r: (r.query, r.entity_id)):
        importance = importance_by_id.get(rec.entity_id)
        if importance is None:
            dropped_unscored += 1
            continue
        if importance < min_importance:
            dropped_low += 1
            continue
        relset.entries.setdefault(rec.query, set()).add(rec.entity_id)
        relset.provenance[(rec.query, rec.entity_id)] = ProvenanceRecord(
            ctr=rec.ctr, nimp=rec.nimp, importance=importance)
        included += 1
    return relset, MergeSummary(included=included,
                                dropped_unscored=dropped_unscored,
                                dropped_low_importance=dropped_low)


def default_provenance_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".provenance.jsonl")


def emit_qrels(relset: RelevanceSet, path: str | Path,
               provenance_path: str | Path | None = None) -> int:
    """Write qrels JSONL plus the provenance sidecar; returns queries written.

    One line per query: {"query", "relevant": [ids, sorted]}. The sidecar
    holds one line per (query, entity) with the justifying ctr, nimp and
    importance.
    """
    if provenance_path is None:
        provenance_path = default_provenance_path(path)

    def qrel_rows():
        for query in sorted(relset.entries):
            yield {"query": query,
                   "relevant": sorted(relset.entries[query])}

    def provenance_rows():
        for (query, entity_id) in sorted(relset.provenance):
            prov = relset.provenance[(query, entity_id)]
            yield {"query": query, "entity_id": entity_id, "ctr": prov.ctr,
                   "nimp": prov.nimp, "importance": prov.importance}

    written = write_jsonl(path, qrel_rows())
    write_jsonl(provenance_path, provenance_rows())
    return written


def load_qrels(path: str | Path) -> RelevanceSet:
    """Load qrels written by :func:`emit_qrels` (provenance not restored)."""
    relset = RelevanceSet()
    for lineno, line in read_lines(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if (not isinstance(rec, dict) or not isinstance(rec.get("query"), str)
                or not isinstance(rec.get("relevant"), list)):
            raise IngestError(f"{path}:{lineno}: not a qrels record")
        query = rec["query"]
        relevant = rec["relevant"]
        if query in relset.entries:
            raise IngestError(f"{path}:{lineno}: duplicate query {query!r}")
        if not relevant:
            raise IngestError(f"{path}:{lineno}: empty relevant set")
        ids = set(relevant)
        if len(ids) != len(relevant):
            raise IngestError(f"{path}:{lineno}: duplicate entity in relevant set")
        relset.entries[query] = ids
    return relset
