"""Line-oriented JSON helpers with deterministic serialization.

All files the toolkit writes go through :func:`dumps`, which keeps key
insertion order and compact separators so identical data always produces
identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import IngestError


def dumps(obj: Any) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_jsonl(path: str | Path, records: Iterable[Any]) -> int:
    """Write one JSON document per line; returns the number of lines."""
    count = 0
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for rec in records:
                fh.write(dumps(rec))
                fh.write("\n")
                count += 1
    except OSError as exc:
        raise IngestError(f"cannot write {path}: {exc}") from exc
    return count


def read_lines(path: str | Path) -> Iterator[tuple[int, str]]:
    """Yield (line_number, raw_line) pairs, skipping blank lines."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if stripped:
                    yield lineno, stripped
    except OSError as exc:
        raise IngestError(f"cannot read {path}: {exc}") from exc


def load_jsonl(path: str | Path) -> list[Any]:
    """Strict loader: any malformed line is an ingest error."""
    records = []
    for lineno, line in read_lines(path):
        try:
            records.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
    return records
