"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass

SCORING_MODES = ("per_pass", "rescore_greedy")


@dataclass(frozen=True)
class AdapterConfig:
    """Checkpoints and export knobs.

    ``encoder`` and ``summarizer`` are HuggingFace names or local directories.
    ``max_new_tokens=None`` adapts the decode length to the longest summary
    present in the corpus file (falling back to 32 when none carries one).
    """

    encoder: str = ""
    summarizer: str = ""
    tapt_epochs: int = 0
    m_passes: int = 10
    max_seq_len: int = 512
    device: str = "cpu"
    seed: int = 0
    max_new_tokens: int | None = None
    min_new_tokens: int = 2
    scoring_mode: str = "per_pass"
    tapt_lr: float = 5e-5
    tapt_batch_size: int = 8
    tapt_mask_prob: float = 0.15

    def __post_init__(self):
        if self.tapt_epochs < 0:
            raise ValueError("tapt_epochs must be >= 0")
        if self.m_passes < 0:
            raise ValueError("m_passes must be >= 0")
        if self.max_seq_len < 8:
            raise ValueError("max_seq_len must be >= 8")
        if self.min_new_tokens < 1:
            raise ValueError("min_new_tokens must be >= 1")
        if self.scoring_mode not in SCORING_MODES:
            raise ValueError(f"scoring_mode must be one of {SCORING_MODES}")
