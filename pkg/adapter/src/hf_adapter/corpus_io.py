"""Minimal readers/writers for the alqs JSONL file contracts.

The adapter talks to the query-strategy engine only through these formats;
it deliberately does not import that package.
"""

from __future__ import annotations

import json
from pathlib import Path


def read_corpus(path: str | Path) -> list[dict]:
    """Corpus JSONL: objects with ``id``, ``document``, optional ``summary``."""
    records = []
    seen = set()
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            rec = json.loads(line)
            for field in ("id", "document"):
                if field not in rec:
                    raise ValueError(f"line {lineno}: missing field {field!r}")
            if rec["id"] in seen:
                raise ValueError(f"line {lineno}: duplicate id {rec['id']!r}")
            seen.add(rec["id"])
            records.append(rec)
    return records


def write_embeddings(rows: list[tuple[str, list[float]]], dim: int, path: str | Path) -> None:
    """Embedding JSONL: ``{"dim", "count"}`` header then one vector per doc."""
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": dim, "count": len(rows)}) + "\n")
        for doc_id, vector in rows:
            fh.write(json.dumps({"id": doc_id, "vector": vector}) + "\n")


def write_records(records: list[dict], path: str | Path) -> None:
    """Generation-record JSONL, one decode pass per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def read_records(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_pseudo(rows: list[dict], path: str | Path) -> None:
    """Pseudo-label JSONL: ``doc_id``, ``summary``, ``nsp`` per line."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for rec in rows:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
