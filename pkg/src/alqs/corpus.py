"""Corpus data model and JSONL ingestion.

A corpus file holds one JSON object per line with fields ``id``, ``document``,
``summary`` (may be "") and an optional ``provenance`` of "gold" or "pseudo".
Corpora are immutable after load and keep the source file's line order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .metrics import TokenSeq, tokenize

PROVENANCE_GOLD = "gold"
PROVENANCE_PSEUDO = "pseudo"


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    tokens: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be non-empty")
        if not self.text.strip():
            raise ValidationError(f"document {self.id!r} has empty text")
        object.__setattr__(self, "tokens", tuple(tokenize(self.text)))

    @property
    def token_count(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class LabeledExample:
    doc: Document
    summary: str
    provenance: str = PROVENANCE_GOLD
    summary_tokens: tuple[str, ...] = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.provenance not in (PROVENANCE_GOLD, PROVENANCE_PSEUDO):
            raise ValidationError(
                f"provenance must be 'gold' or 'pseudo', got {self.provenance!r}"
            )
        object.__setattr__(self, "summary_tokens", tuple(tokenize(self.summary)))

    @property
    def summary_token_count(self) -> int:
        return len(self.summary_tokens)

    def has_summary(self) -> bool:
        return bool(self.summary.strip())


@dataclass(frozen=True)
class Corpus:
    examples: tuple[LabeledExample, ...]
    name: str = field(default="", compare=False)

    def __post_init__(self):
        seen = set()
        for ex in self.examples:
            if ex.doc.id in seen:
                raise ValidationError(f"duplicate doc id {ex.doc.id!r} in corpus")
            seen.add(ex.doc.id)

    def __len__(self) -> int:
        return len(self.examples)

    def __iter__(self):
        return iter(self.examples)

    def ids(self) -> list[str]:
        return [ex.doc.id for ex in self.examples]

    def get(self, doc_id: str) -> LabeledExample:
        try:
            return self._by_id[doc_id]
        except AttributeError:
            object.__setattr__(self, "_by_id", {ex.doc.id: ex for ex in self.examples})
            return self.get(doc_id)


@dataclass(frozen=True)
class CorpusStats:
    count: int
    avg_doc_len: float
    avg_summary_len: float


def load_corpus(path: str | Path) -> Corpus:
    """Read a JSONL corpus file, preserving line order.

    Raises ValidationError naming the offending line for malformed JSON,
    missing fields, or duplicate ids.
    """
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"corpus file not found: {path}")
    examples = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"parse error at line {lineno}: {exc.msg}") from exc
            if not isinstance(rec, dict):
                raise ValidationError(f"parse error at line {lineno}: expected an object")
            missing = [k for k in ("id", "document", "summary") if k not in rec]
            if missing:
                raise ValidationError(
                    f"parse error at line {lineno}: missing fields {missing}"
                )
            doc_id = rec["id"]
            if doc_id in seen:
                raise ValidationError(
                    f"duplicate id {doc_id!r} at line {lineno} (first seen at line {seen[doc_id]})"
                )
            seen[doc_id] = lineno
            try:
                examples.append(
                    LabeledExample(
                        doc=Document(id=doc_id, text=rec["document"]),
                        summary=rec["summary"],
                        provenance=rec.get("provenance", PROVENANCE_GOLD),
                    )
                )
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
    return Corpus(examples=tuple(examples), name=path.stem)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    """Write a corpus back to JSONL; inverse of load_corpus."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for ex in corpus:
            rec = {"id": ex.doc.id, "document": ex.doc.text, "summary": ex.summary}
            if ex.provenance != PROVENANCE_GOLD:
                rec["provenance"] = ex.provenance
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def deduplicate(corpus: Corpus) -> Corpus:
    """Drop later examples whose tokenized, lowercased document text repeats an earlier one."""
    seen: set[tuple[str, ...]] = set()
    kept = []
    for ex in corpus:
        key = ex.doc.tokens
        if key in seen:
            continue
        seen.add(key)
        kept.append(ex)
    return Corpus(examples=tuple(kept), name=corpus.name)


def filter_by_length(
    corpus: Corpus, min_doc_tokens: int = 0, min_summary_tokens: int = 0
) -> Corpus:
    """Keep examples whose document and summary token counts meet the minimums."""
    kept = tuple(
        ex
        for ex in corpus
        if ex.doc.token_count >= min_doc_tokens
        and ex.summary_token_count >= min_summary_tokens
    )
    return Corpus(examples=kept, name=corpus.name)


def stats(corpus: Corpus) -> CorpusStats:
    if len(corpus) == 0:
        raise ValidationError("cannot compute stats of an empty corpus")
    n = len(corpus)
    return CorpusStats(
        count=n,
        avg_doc_len=sum(ex.doc.token_count for ex in corpus) / n,
        avg_summary_len=sum(ex.summary_token_count for ex in corpus) / n,
    )
