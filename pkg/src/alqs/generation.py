"""Model-free summary generation: replay of precomputed records or a toy generator.

A generation bundle stands in for one greedy decode plus M stochastic
(dropout-style) decodes of a neural summarizer. The replay generator streams
records exported by real models from a JSONL file; the toy generator is a
pure hash-seeded function of the document, useful for tests and simulations
that must run without any model.

Record JSONL format: one object per line with ``doc_id``, ``pass_index``,
``tokens``, ``token_logprobs``, and optionally ``scoring_mode`` on pass 0
("per_pass" or "rescore_greedy").
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Document
from .errors import CoverageError, ValidationError

SCORING_PER_PASS = "per_pass"
SCORING_RESCORE_GREEDY = "rescore_greedy"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: str) -> int:
    """FNV-1a 64-bit hash of the UTF-8 bytes of ``data``."""
    h = _FNV_OFFSET
    for byte in data.encode("utf-8"):
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class GenerationRecord:
    doc_id: str
    pass_index: int
    tokens: tuple[str, ...]
    token_logprobs: tuple[float, ...]

    def __post_init__(self):
        if self.pass_index < 0:
            raise ValidationError(f"pass_index must be >= 0, got {self.pass_index}")
        if len(self.tokens) != len(self.token_logprobs):
            raise ValidationError(
                f"record {self.doc_id!r} pass {self.pass_index}: "
                f"{len(self.tokens)} tokens vs {len(self.token_logprobs)} logprobs"
            )
        if not self.tokens:
            raise ValidationError(
                f"record {self.doc_id!r} pass {self.pass_index}: no tokens"
            )
        for lp in self.token_logprobs:
            if not math.isfinite(lp) or lp > 0.0:
                raise ValidationError(
                    f"record {self.doc_id!r} pass {self.pass_index}: "
                    f"logprob {lp} not finite and <= 0"
                )


@dataclass(frozen=True)
class GenerationBundle:
    doc_id: str
    greedy: GenerationRecord
    stochastic: tuple[GenerationRecord, ...]
    scoring_mode: str = SCORING_PER_PASS

    def __post_init__(self):
        if self.greedy.pass_index != 0:
            raise ValidationError("greedy record must have pass_index 0")
        if self.scoring_mode not in (SCORING_PER_PASS, SCORING_RESCORE_GREEDY):
            raise ValidationError(f"unknown scoring_mode {self.scoring_mode!r}")
        indices = [r.pass_index for r in self.stochastic]
        if sorted(indices) != list(range(1, len(indices) + 1)):
            raise ValidationError(
                f"bundle {self.doc_id!r}: stochastic pass indices must be 1..M, got {indices}"
            )
        for rec in (self.greedy, *self.stochastic):
            if rec.doc_id != self.doc_id:
                raise ValidationError(
                    f"bundle {self.doc_id!r} contains record for {rec.doc_id!r}"
                )

    @property
    def m_passes(self) -> int:
        return len(self.stochastic)


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str  # "replay" | "toy"
    m_passes: int = 10
    summary_len: int = 8  # toy only
    records_path: str | None = None  # replay only

    def __post_init__(self):
        if self.kind not in ("replay", "toy"):
            raise ValidationError(f"unknown generator kind {self.kind!r}")
        if self.m_passes < 0:
            raise ValidationError("m_passes must be >= 0")
        if self.kind == "toy" and self.summary_len < 1:
            raise ValidationError("toy summary_len must be >= 1")
        if self.kind == "replay" and not self.records_path:
            raise ValidationError("replay generator needs records_path")


def _toy_logprob(position: int) -> float:
    return math.log(max(0.05, 1.0 - 0.05 * position))


def toy_generate(doc: Document, pass_index: int, k: int) -> GenerationRecord:
    """Deterministic stand-in decode: a hash-perturbed document prefix.

    Pass 0 copies the first min(k, len) document tokens with logprob
    ln(max(0.05, 1 - 0.05*i)) at output position i. Stochastic pass j first
    drops input position p when fnv1a64("{id}:{j}:{p}") % 10 == 0, then takes
    the first k survivors and shifts every logprob down by
    0.05 * (fnv1a64("{id}:{j}") % 5).
    """
    if k < 1:
        raise ValidationError(f"toy summary length must be >= 1, got {k}")
    source = list(doc.tokens)
    if not source:
        raise ValidationError(f"document {doc.id!r} has no tokens")
    if pass_index == 0:
        tokens = source[:k]
        logprobs = [_toy_logprob(i) for i in range(len(tokens))]
    else:
        survivors = [
            tok
            for p, tok in enumerate(source)
            if fnv1a64(f"{doc.id}:{pass_index}:{p}") % 10 != 0
        ]
        if not survivors:
            survivors = source  # tiny documents: never emit an empty record
        tokens = survivors[:k]
        shift = 0.05 * (fnv1a64(f"{doc.id}:{pass_index}") % 5)
        logprobs = [_toy_logprob(i) - shift for i in range(len(tokens))]
    return GenerationRecord(
        doc_id=doc.id,
        pass_index=pass_index,
        tokens=tuple(tokens),
        token_logprobs=tuple(logprobs),
    )


class Generator:
    """Base interface: per-document bundles plus a labeled-set context hook."""

    def generate(self, doc: Document) -> GenerationBundle:
        raise NotImplementedError

    def update_labeled(self, labeled_ids: list[str]) -> None:
        """Called once per AL iteration with the current labeled ids.

        File-backed and toy generators ignore the context; the hook exists so
        drivers wired to a real model can retrain between iterations.
        """


class ToyGenerator(Generator):
    def __init__(self, m_passes: int, summary_len: int = 8):
        self.m_passes = m_passes
        self.summary_len = summary_len

    def generate(self, doc: Document) -> GenerationBundle:
        greedy = toy_generate(doc, 0, self.summary_len)
        stochastic = tuple(
            toy_generate(doc, j, self.summary_len) for j in range(1, self.m_passes + 1)
        )
        return GenerationBundle(
            doc_id=doc.id,
            greedy=greedy,
            stochastic=stochastic,
            scoring_mode=SCORING_PER_PASS,
        )


class ReplayGenerator(Generator):
    """Serves bundles verbatim from a record file.

    When a document has more stochastic passes than requested, the lowest
    pass indices win (prefix rule); m_passes=None uses every available pass.
    """

    def __init__(self, records_path: str | Path, m_passes: int | None = None):
        self._bundles = load_record_file(records_path)
        self.m_passes = m_passes

    def coverage(self) -> set[str]:
        return set(self._bundles)

    def generate(self, doc: Document) -> GenerationBundle:
        bundle = self._bundles.get(doc.id)
        if bundle is None:
            raise CoverageError(f"missing bundle for doc {doc.id!r}", doc_id=doc.id)
        if self.m_passes is None or bundle.m_passes == self.m_passes:
            return bundle
        if bundle.m_passes < self.m_passes:
            raise CoverageError(
                f"doc {doc.id!r} has {bundle.m_passes} stochastic passes, "
                f"{self.m_passes} requested",
                doc_id=doc.id,
            )
        return GenerationBundle(
            doc_id=bundle.doc_id,
            greedy=bundle.greedy,
            stochastic=bundle.stochastic[: self.m_passes],
            scoring_mode=bundle.scoring_mode,
        )


def build_generator(spec: GeneratorSpec) -> Generator:
    if spec.kind == "toy":
        return ToyGenerator(m_passes=spec.m_passes, summary_len=spec.summary_len)
    return ReplayGenerator(spec.records_path, m_passes=spec.m_passes)


def load_record_file(path: str | Path) -> dict[str, GenerationBundle]:
    """Parse a generation-record JSONL file into per-document bundles."""
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"record file not found: {path}")
    greedy: dict[str, GenerationRecord] = {}
    modes: dict[str, str] = {}
    stochastic: dict[str, list[GenerationRecord]] = {}
    order: list[str] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"parse error at line {lineno}: {exc.msg}") from exc
            try:
                record = GenerationRecord(
                    doc_id=rec["doc_id"],
                    pass_index=rec["pass_index"],
                    tokens=tuple(rec["tokens"]),
                    token_logprobs=tuple(float(x) for x in rec["token_logprobs"]),
                )
            except (KeyError, TypeError) as exc:
                raise ValidationError(f"malformed record at line {lineno}: {exc}") from exc
            doc_id = record.doc_id
            if doc_id not in stochastic and doc_id not in greedy:
                order.append(doc_id)
            if record.pass_index == 0:
                if doc_id in greedy:
                    raise ValidationError(
                        f"line {lineno}: second greedy record for doc {doc_id!r}"
                    )
                greedy[doc_id] = record
                mode = rec.get("scoring_mode", SCORING_PER_PASS)
                modes[doc_id] = mode
            else:
                stochastic.setdefault(doc_id, []).append(record)
    bundles = {}
    for doc_id in order:
        if doc_id not in greedy:
            raise ValidationError(f"doc {doc_id!r} has stochastic records but no pass 0")
        passes = sorted(stochastic.get(doc_id, []), key=lambda r: r.pass_index)
        bundles[doc_id] = GenerationBundle(
            doc_id=doc_id,
            greedy=greedy[doc_id],
            stochastic=tuple(passes),
            scoring_mode=modes[doc_id],
        )
    return bundles


def save_record_file(bundles: list[GenerationBundle], path: str | Path) -> None:
    """Write bundles as record JSONL; inverse of load_record_file."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for bundle in bundles:
            for rec in (bundle.greedy, *bundle.stochastic):
                obj = {
                    "doc_id": rec.doc_id,
                    "pass_index": rec.pass_index,
                    "tokens": list(rec.tokens),
                    "token_logprobs": list(rec.token_logprobs),
                }
                if rec.pass_index == 0:
                    obj["scoring_mode"] = bundle.scoring_mode
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
