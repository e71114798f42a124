"""IMDb-style catalog ingestion.

Reads tab-separated dumps with a header row (basics plus ratings, optionally
a ranks file), joins them by entity id, and materializes an immutable,
id-indexed catalog. The placeholder token ``\\N`` in any cell parses as
absent, matching the public dump convention. When no ranks file is given, a
pseudo-rank is derived by ordering titles by rating count descending (ties
broken by entity id ascending), preserving the lower-rank-is-more-popular
semantics.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IngestError
from .jsonl import read_lines, write_jsonl

MISSING_TOKEN = "\\N"
DEFAULT_YEAR_WINDOW = (1870, 2100)

BASICS_COLUMNS = ("tconst", "primaryTitle", "startYear")
RATINGS_COLUMNS = ("tconst", "averageRating", "numVotes")
RANKS_COLUMNS = ("tconst", "rank")


@dataclass(frozen=True)
class Title:
    """One catalog entity with its popularity signals."""

    entity_id: str
    name: str
    release_year: int | None = None
    rank: int | None = None
    rating_count: int | None = None
    rating: float | None = None


@dataclass
class IngestStats:
    """Row-level bookkeeping for one parse run.

    Basics rows are either materialized as titles or rejected, so
    ``len(catalog) + basics_rejected`` always equals the number of data rows
    read from the basics file. Ratings/ranks rows referencing ids absent
    from basics are orphans, not rejects.
    """

    basics_rows: int = 0
    basics_rejected: int = 0
    ratings_rows: int = 0
    ratings_rejected: int = 0
    ratings_orphaned: int = 0
    ranks_rows: int = 0
    ranks_rejected: int = 0
    ranks_orphaned: int = 0

    @property
    def rejects(self) -> int:
        return self.basics_rejected + self.ratings_rejected + self.ranks_rejected

    def as_dict(self) -> dict:
        return {
            "basics_rows": self.basics_rows,
            "basics_rejected": self.basics_rejected,
            "ratings_rows": self.ratings_rows,
            "ratings_rejected": self.ratings_rejected,
            "ratings_orphaned": self.ratings_orphaned,
            "ranks_rows": self.ranks_rows,
            "ranks_rejected": self.ranks_rejected,
            "ranks_orphaned": self.ranks_orphaned,
        }


@dataclass
class Catalog:
    """All titles in ingest order plus an entity-id index over them."""

    titles: list[Title]
    index: dict[str, Title] = field(default_factory=dict)
    stats: IngestStats = field(default_factory=IngestStats)

    def __post_init__(self):
        if not self.index:
            self.index = {t.entity_id: t for t in self.titles}
        if len(self.index) != len(self.titles):
            raise IngestError("catalog contains duplicate entity ids")

    def __len__(self) -> int:
        return len(self.titles)

    def lookup(self, entity_id: str) -> Title | None:
        """Return the title for ``entity_id``; absence is a normal outcome."""
        return self.index.get(entity_id)


def _open_tsv(path: str | Path, required: tuple[str, ...]):
    """Open a TSV and map required column names to indexes from the header."""
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc
    reader = csv.reader(fh, delimiter="\t", quoting=csv.QUOTE_NONE)
    try:
        header = next(reader)
    except StopIteration:
        fh.close()
        raise IngestError(f"{path}: missing header row")
    positions = {}
    for name in required:
        if name not in header:
            fh.close()
            raise IngestError(f"{path}: missing required column {name!r}")
        positions[name] = header.index(name)
    return fh, reader, positions


def _cell(row: list[str], idx: int) -> str | None:
    value = row[idx].strip()
    if not value or value == MISSING_TOKEN:
        return None
    return value


def _parse_int(value: str) -> int:
    # Reject floats and signs that int() would also reject anyway, but keep
    # plain digit runs like "0123" out too: dump rows never zero-pad counts.
    if not value.isdigit():
        raise ValueError(value)
    return int(value)


def parse_catalog(
    basics_path: str | Path,
    ratings_path: str | Path,
    ranks_path: str | Path | None = None,
    *,
    strict: bool = False,
    year_window: tuple[int, int] = DEFAULT_YEAR_WINDOW,
) -> Catalog:
    """Join basics, ratings and optional ranks dumps into a Catalog.

    Basics is the entity universe: every valid basics row becomes a title,
    and ratings/ranks rows for unknown ids are ignored and tallied. A
    malformed row is skipped and counted unless ``strict`` is set, in which
    case it raises :class:`IngestError` naming the file and line. A
    duplicated entity id is always an error.
    """
    stats = IngestStats()
    min_year, max_year = year_window

    def bad_row(counter: str, path, lineno: int, why: str):
        setattr(stats, counter, getattr(stats, counter) + 1)
        if strict:
            raise IngestError(f"{path}:{lineno}: {why}")

    # basics: entity universe, file order preserved
    rows: dict[str, dict] = {}
    fh, reader, pos = _open_tsv(basics_path, BASICS_COLUMNS)
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            stats.basics_rows += 1
            if len(row) <= max(pos.values()):
                bad_row("basics_rejected", basics_path, lineno, "too few columns")
                continue
            entity_id = _cell(row, pos["tconst"])
            name = _cell(row, pos["primaryTitle"])
            if entity_id is None or name is None:
                bad_row("basics_rejected", basics_path, lineno, "missing id or title")
                continue
            year_raw = _cell(row, pos["startYear"])
            year = None
            if year_raw is not None:
                try:
                    year = _parse_int(year_raw)
                except ValueError:
                    bad_row("basics_rejected", basics_path, lineno,
                            f"unparseable year {year_raw!r}")
                    continue
                if not (min_year <= year <= max_year):
                    bad_row("basics_rejected", basics_path, lineno,
                            f"implausible year {year}")
                    continue
            if entity_id in rows:
                raise IngestError(
                    f"{basics_path}:{lineno}: duplicate entity_id {entity_id!r}")
            rows[entity_id] = {"entity_id": entity_id, "name": name,
                               "release_year": year, "rank": None,
                               "rating_count": None, "rating": None}

    # ratings: left join on entity id
    fh, reader, pos = _open_tsv(ratings_path, RATINGS_COLUMNS)
    seen_rating_ids: set[str] = set()
    with fh:
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            stats.ratings_rows += 1
            if len(row) <= max(pos.values()):
                bad_row("ratings_rejected", ratings_path, lineno, "too few columns")
                continue
            entity_id = _cell(row, pos["tconst"])
            if entity_id is None:
                bad_row("ratings_rejected", ratings_path, lineno, "missing id")
                continue
            rating_raw = _cell(row, pos["averageRating"])
            votes_raw = _cell(row, pos["numVotes"])
            try:
                rating = None if rating_raw is None else float(rating_raw)
                votes = None if votes_raw is None else _parse_int(votes_raw)
            except ValueError:
                bad_row("ratings_rejected", ratings_path, lineno,
                        "unparseable rating or vote count")
                continue
            if rating is not None and not (0.0 <= rating <= 10.0):
                bad_row("ratings_rejected", ratings_path, lineno,
                        f"rating {rating} outside [0, 10]")
                continue
            if entity_id in seen_rating_ids:
                raise IngestError(
                    f"{ratings_path}:{lineno}: duplicate entity_id {entity_id!r}")
            seen_rating_ids.add(entity_id)
            target = rows.get(entity_id)
            if target is None:
                stats.ratings_orphaned += 1
                continue
            target["rating"] = rating
            target["rating_count"] = votes

    # ranks: optional left join; else derive pseudo-rank from rating counts
    if ranks_path is not None:
        fh, reader, pos = _open_tsv(ranks_path, RANKS_COLUMNS)
        seen_rank_ids: set[str] = set()
        with fh:
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                stats.ranks_rows += 1
                if len(row) <= max(pos.values()):
                    bad_row("ranks_rejected", ranks_path, lineno, "too few columns")
                    continue
                entity_id = _cell(row, pos["tconst"])
                rank_raw = _cell(row, pos["rank"])
                if entity_id is None or rank_raw is None:
                    bad_row("ranks_rejected", ranks_path, lineno, "missing id or rank")
                    continue
                try:
                    rank = _parse_int(rank_raw)
                except ValueError:
                    bad_row("ranks_rejected", ranks_path, lineno,
                            f"unparseable rank {rank_raw!r}")
                    continue
                if rank < 1:
                    bad_row("ranks_rejected", ranks_path, lineno, f"rank {rank} < 1")
                    continue
                if entity_id in seen_rank_ids:
                    raise IngestError(
                        f"{ranks_path}:{lineno}: duplicate entity_id {entity_id!r}")
                seen_rank_ids.add(entity_id)
                target = rows.get(entity_id)
                if target is None:
                    stats.ranks_orphaned += 1
                    continue
                target["rank"] = rank
    else:
        assign_pseudo_ranks(rows)

    titles = [Title(**fields) for fields in rows.values()]
    return Catalog(titles=titles, stats=stats)


def assign_pseudo_ranks(rows: dict[str, dict]) -> None:
    """Set rank to the ordinal under rating-count-descending order.

    Absent rating counts sort as zero; ties break by entity id ascending so
    the assignment is a total order and the resulting ranks are a bijection
    onto 1..N.
    """
    ordering = sorted(rows, key=lambda eid: (-(rows[eid]["rating_count"] or 0), eid))
    for ordinal, entity_id in enumerate(ordering, start=1):
        rows[entity_id]["rank"] = ordinal


_JSONL_FIELDS = ("entity_id", "name", "release_year", "rank", "rating_count", "rating")


def write_catalog(catalog: Catalog, path: str | Path) -> None:
    """Write the canonical catalog JSONL (absent fields omitted)."""
    def records():
        for title in catalog.titles:
            rec = {}
            for name in _JSONL_FIELDS:
                value = getattr(title, name)
                if value is not None:
                    rec[name] = value
            yield rec

    write_jsonl(path, records())


def load_catalog(path: str | Path) -> Catalog:
    """Load a catalog previously written by :func:`write_catalog`."""
    titles = []
    seen: set[str] = set()
    for lineno, line in read_lines(path):
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
        if not isinstance(rec, dict) or "entity_id" not in rec or "name" not in rec:
            raise IngestError(f"{path}:{lineno}: not a catalog record")
        entity_id = rec["entity_id"]
        if entity_id in seen:
            raise IngestError(f"{path}:{lineno}: duplicate entity_id {entity_id!r}")
        seen.add(entity_id)
        titles.append(Title(
            entity_id=entity_id,
            name=rec["name"],
            release_year=rec.get("release_year"),
            rank=rec.get("rank"),
            rating_count=rec.get("rating_count"),
            rating=rec.get("rating"),
        ))
    return Catalog(titles=titles)
