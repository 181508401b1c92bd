"""Text overlap metrics: tokenizer, ROUGE-1/2/L, BLEU, and smoothed BLEU.

All functions operate on token lists produced by :func:`tokenize` and return
values in [0, 1]. They are pure and single-reference; no stemming or stopword
removal is applied anywhere.
"""

from __future__ import annotations

import math
import unicodedata
from dataclasses import dataclass

TokenSeq = list[str]


@dataclass(frozen=True)
class PRF:
    """Precision / recall / F1 triple, each in [0, 1]."""

    precision: float
    recall: float
    f1: float


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(text: str) -> TokenSeq:
    """Lowercase and split on whitespace, trimming edge punctuation per token.

    A chunk that consists entirely of punctuation is kept whole as a single
    token; internal punctuation is never touched ("a--b" stays one token).
    """
    tokens = []
    for chunk in text.lower().split():
        start, end = 0, len(chunk)
        while start < end and _is_punct(chunk[start]):
            start += 1
        while end > start and _is_punct(chunk[end - 1]):
            end -= 1
        tokens.append(chunk[start:end] if start < end else chunk)
    return tokens


def _ngram_counts(tokens: TokenSeq, n: int) -> dict:
    counts: dict = {}
    if n == 1:
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        return counts
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    return counts


def _clipped_overlap(cand_counts: dict, ref_counts: dict) -> int:
    total = 0
    for g, c in cand_counts.items():
        r = ref_counts.get(g)
        if r is not None:
            total += c if c < r else r
    return total


def _prf(overlap: int, cand_total: int, ref_total: int) -> PRF:
    p = overlap / cand_total if cand_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f = 2.0 * p * r / (p + r) if p + r > 0.0 else 0.0
    return PRF(p, r, f)


def rouge_n(candidate: TokenSeq, reference: TokenSeq, n: int = 1) -> PRF:
    """Clipped n-gram overlap precision/recall/F1."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    cand_total = len(candidate) - n + 1
    ref_total = len(reference) - n + 1
    cand_total = cand_total if cand_total > 0 else 0
    ref_total = ref_total if ref_total > 0 else 0
    if cand_total == 0 or ref_total == 0:
        return _prf(0, cand_total, ref_total)
    overlap = _clipped_overlap(_ngram_counts(candidate, n), _ngram_counts(reference, n))
    return _prf(overlap, cand_total, ref_total)


def _lcs_length(a: TokenSeq, b: TokenSeq) -> int:
    if not a or not b:
        return 0
    # Single-row DP; iterate over the longer sequence in the outer loop.
    if len(a) < len(b):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for x in a:
        best = 0
        row = prev
        cur = [0]
        append = cur.append
        for j, y in enumerate(b, start=1):
            if x == y:
                val = row[j - 1] + 1
            else:
                val = row[j] if row[j] >= cur[j - 1] else cur[j - 1]
            append(val)
        prev = cur
    return prev[-1]


def rouge_l(candidate: TokenSeq, reference: TokenSeq) -> PRF:
    """Longest-common-subsequence F1 (balanced harmonic mean)."""
    ell = _lcs_length(candidate, reference)
    return _prf(ell, len(candidate), len(reference))


def _modified_precisions(candidate: TokenSeq, reference: TokenSeq, max_n: int = 4):
    """Yield (overlap, cand_ngram_count) for n = 1..max_n."""
    for n in range(1, max_n + 1):
        denom = len(candidate) - n + 1
        if denom <= 0:
            yield 0, 0
            continue
        overlap = _clipped_overlap(_ngram_counts(candidate, n), _ngram_counts(reference, n))
        yield overlap, denom


def _brevity_penalty(cand_len: int, ref_len: int) -> float:
    if cand_len >= ref_len:
        return 1.0
    return math.exp(1.0 - ref_len / cand_len)


def bleu(candidate: TokenSeq, reference: TokenSeq) -> float:
    """Unsmoothed sentence BLEU: uniform 1..4-gram precisions times brevity penalty.

    Any n-gram order with zero precision (including a candidate shorter than
    4 tokens, which has no 4-grams) makes the whole score 0.
    """
    if not candidate:
        return 0.0
    log_sum = 0.0
    for overlap, denom in _modified_precisions(candidate, reference):
        if overlap == 0 or denom == 0:
            return 0.0
        log_sum += math.log(overlap / denom)
    return _brevity_penalty(len(candidate), len(reference)) * math.exp(log_sum / 4.0)


def sacrebleu(candidate: TokenSeq, reference: TokenSeq) -> float:
    """BLEU with add-half smoothing of zero-count n-gram precisions.

    A precision with zero numerator becomes 1/(2 * candidate n-gram count);
    orders with no candidate n-grams at all are dropped from the geometric
    mean instead of zeroing it, so short candidates still score > 0.
    """
    if not candidate:
        return 0.0
    logs = []
    for overlap, denom in _modified_precisions(candidate, reference):
        if denom == 0:
            continue
        p = overlap / denom if overlap > 0 else 0.5 / denom
        logs.append(math.log(p))
    if not logs:
        return 0.0
    gm = math.exp(sum(logs) / len(logs))
    return _brevity_penalty(len(candidate), len(reference)) * gm
