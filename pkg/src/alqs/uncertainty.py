"""Uncertainty acquisition scores computed from generation bundles.

Every score follows arg-max semantics: a higher value means a higher
annotation priority. The sequence probability underneath is the geometric
mean of per-token probabilities, i.e. exp(mean(token_logprobs)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError
from .generation import GenerationBundle, GenerationRecord
from .metrics import bleu as _bleu
from .metrics import sacrebleu as _sacrebleu

UNCERTAINTY_STRATEGIES = ("nsp", "ensp", "ensv", "bleuvar", "sacrebleuvar")
ALL_STRATEGIES = UNCERTAINTY_STRATEGIES + ("idds", "mmr", "random")


@dataclass(frozen=True)
class AcquisitionScore:
    doc_id: str
    strategy: str
    value: float

    def __post_init__(self):
        if self.strategy not in ALL_STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        if not math.isfinite(self.value):
            raise ValidationError(
                f"non-finite score {self.value} for doc {self.doc_id!r}"
            )


def seq_prob(record: GenerationRecord) -> float:
    """Geometric mean of token probabilities: exp(mean(logprobs))."""
    if not record.tokens:
        raise ValidationError(f"record {record.doc_id!r} has no tokens")
    return math.exp(sum(record.token_logprobs) / len(record.token_logprobs))


def nsp(bundle: GenerationBundle) -> float:
    """One minus the greedy decode's sequence probability."""
    return 1.0 - seq_prob(bundle.greedy)


def _pass_probs(bundle: GenerationBundle) -> list[float]:
    return [seq_prob(rec) for rec in bundle.stochastic]


def ensp(bundle: GenerationBundle) -> float:
    """One minus the mean sequence probability over stochastic passes."""
    if bundle.m_passes < 1:
        raise ValidationError(f"ensp needs >= 1 stochastic pass for {bundle.doc_id!r}")
    probs = _pass_probs(bundle)
    return 1.0 - sum(probs) / len(probs)


def ensv(bundle: GenerationBundle) -> float:
    """Population variance of the per-pass sequence probabilities."""
    if bundle.m_passes < 2:
        raise ValidationError(f"ensv needs >= 2 stochastic passes for {bundle.doc_id!r}")
    probs = _pass_probs(bundle)
    mean = sum(probs) / len(probs)
    return sum((p - mean) ** 2 for p in probs) / len(probs)


def _pairwise_metric_variance(bundle: GenerationBundle, metric) -> float:
    """Mean of (1 - metric(y_i, y_j))^2 over ordered pass pairs i != j."""
    if bundle.m_passes < 2:
        raise ValidationError(
            f"pairwise variance needs >= 2 stochastic passes for {bundle.doc_id!r}"
        )
    passes = [list(rec.tokens) for rec in bundle.stochastic]
    m = len(passes)
    total = 0.0
    for i in range(m):
        for j in range(m):
            if i != j:
                total += (1.0 - metric(passes[i], passes[j])) ** 2
    return total / (m * (m - 1))


def bleuvar(bundle: GenerationBundle) -> float:
    """Mean squared BLEU distance among the stochastic decodes."""
    return _pairwise_metric_variance(bundle, _bleu)


def sacrebleuvar(bundle: GenerationBundle) -> float:
    """bleuvar with smoothed BLEU in place of BLEU."""
    return _pairwise_metric_variance(bundle, _sacrebleu)


_SCORERS = {
    "nsp": nsp,
    "ensp": ensp,
    "ensv": ensv,
    "bleuvar": bleuvar,
    "sacrebleuvar": sacrebleuvar,
}


def score_pool(strategy: str, bundles: list[GenerationBundle]) -> list[AcquisitionScore]:
    """Score every bundle with the named uncertainty strategy, preserving order."""
    scorer = _SCORERS.get(strategy)
    if scorer is None:
        raise ValidationError(
            f"strategy {strategy!r} is not an uncertainty strategy; "
            f"expected one of {list(_SCORERS)}"
        )
    scores = []
    for bundle in bundles:
        try:
            value = scorer(bundle)
        except ValidationError:
            raise
        except Exception as exc:  # surface the offending doc id
            raise ValidationError(f"scoring failed for doc {bundle.doc_id!r}: {exc}") from exc
        scores.append(AcquisitionScore(doc_id=bundle.doc_id, strategy=strategy, value=value))
    return scores
