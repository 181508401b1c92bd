"""Percentile filtering of pseudo-labeled summaries and corpus augmentation.

Pseudo summaries are scored with the greedy-decode uncertainty (one minus
sequence probability); the lowest k_l percent and highest k_h percent are
dropped before the survivors are appended to the gold corpus.

Pseudo-label JSONL format: one object per line with ``doc_id``, ``summary``
(string) and ``nsp`` (float).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

from .corpus import PROVENANCE_PSEUDO, Corpus, LabeledExample
from .errors import ValidationError
from .metrics import tokenize


@dataclass(frozen=True)
class SelfLearnConfig:
    k_l: float = 10.0
    k_h: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.k_l <= 100.0 or not 0.0 <= self.k_h <= 100.0:
            raise ValidationError("k_l and k_h must be percentages in [0, 100]")
        if self.k_l + self.k_h >= 100.0:
            raise ValidationError(
                f"k_l + k_h must be < 100, got {self.k_l} + {self.k_h}"
            )


@dataclass(frozen=True)
class PseudoExample:
    doc_id: str
    summary_tokens: tuple[str, ...]
    nsp_score: float

    def __post_init__(self):
        if not math.isfinite(self.nsp_score):
            raise ValidationError(f"non-finite nsp score for doc {self.doc_id!r}")


def _drop_count(n: int, percent: float) -> int:
    if float(percent).is_integer():
        return (n * int(percent)) // 100
    return math.floor(n * percent / 100.0)


def filter_pseudo(items: list[PseudoExample], cfg: SelfLearnConfig) -> list[PseudoExample]:
    """Drop the floor(N*k_l/100) lowest- and floor(N*k_h/100) highest-scored items.

    Ranking is by (score, doc_id) ascending; survivors come back in the
    original input order.
    """
    n = len(items)
    low = _drop_count(n, cfg.k_l)
    high = _drop_count(n, cfg.k_h)
    order = sorted(range(n), key=lambda i: (items[i].nsp_score, items[i].doc_id, i))
    dropped = set(order[:low]) | set(order[n - high :])
    return [items[i] for i in range(n) if i not in dropped]


def augment(labeled: Corpus, kept: list[PseudoExample], source: Corpus) -> Corpus:
    """Append kept pseudo examples (flagged as such) to the labeled corpus."""
    labeled_ids = set(labeled.ids())
    extra = []
    for item in kept:
        if item.doc_id in labeled_ids:
            raise ValidationError(
                f"pseudo doc {item.doc_id!r} collides with the labeled set"
            )
        try:
            src = source.get(item.doc_id)
        except KeyError:
            raise ValidationError(
                f"pseudo doc {item.doc_id!r} not found in the source corpus"
            ) from None
        extra.append(
            LabeledExample(
                doc=src.doc,
                summary=" ".join(item.summary_tokens),
                provenance=PROVENANCE_PSEUDO,
            )
        )
    return Corpus(examples=labeled.examples + tuple(extra), name=labeled.name)


def load_pseudo(path: str | Path) -> list[PseudoExample]:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"pseudo-label file not found: {path}")
    items = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"parse error at line {lineno}: {exc.msg}") from exc
            missing = [k for k in ("doc_id", "summary", "nsp") if k not in rec]
            if missing:
                raise ValidationError(f"line {lineno}: missing fields {missing}")
            items.append(
                PseudoExample(
                    doc_id=rec["doc_id"],
                    summary_tokens=tuple(tokenize(rec["summary"])),
                    nsp_score=float(rec["nsp"]),
                )
            )
    return items


def save_pseudo(items: list[PseudoExample], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for item in items:
            fh.write(
                json.dumps(
                    {
                        "doc_id": item.doc_id,
                        "summary": " ".join(item.summary_tokens),
                        "nsp": item.nsp_score,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
