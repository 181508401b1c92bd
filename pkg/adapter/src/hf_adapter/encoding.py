"""Document embedding export: [CLS]-pooled encoder states, optional TAPT.

TAPT (task-adaptive pre-training) runs a few epochs of masked-LM training on
the pool documents before extraction, acquainting a generic checkpoint with
the target domain so similarity scores stop saturating.
"""

from __future__ import annotations

import logging
from pathlib import Path

import torch
from transformers import AutoModelForMaskedLM, AutoTokenizer

from .config import AdapterConfig
from .corpus_io import read_corpus, write_embeddings

log = logging.getLogger(__name__)


def _encode(tokenizer, text: str, max_seq_len: int, doc_id: str):
    enc = tokenizer(
        text,
        return_tensors="pt",
        truncation=True,
        max_length=max_seq_len,
        return_overflowing_tokens=False,
    )
    if enc["input_ids"].shape[1] == max_seq_len:
        log.info("document %s truncated to %d tokens", doc_id, max_seq_len)
    return enc


def _tapt(model, tokenizer, documents: list[str], cfg: AdapterConfig) -> None:
    """Masked-LM fine-tuning on the pool (in place)."""
    generator = torch.Generator().manual_seed(cfg.seed)
    optimizer = torch.optim.AdamW(model.parameters(), lr=cfg.tapt_lr)
    mask_id = tokenizer.mask_token_id
    if mask_id is None:
        raise ValueError("tokenizer has no mask token; cannot run TAPT")
    model.train()
    for epoch in range(cfg.tapt_epochs):
        for start in range(0, len(documents), cfg.tapt_batch_size):
            batch = documents[start : start + cfg.tapt_batch_size]
            enc = tokenizer(
                batch,
                return_tensors="pt",
                truncation=True,
                max_length=cfg.max_seq_len,
                padding=True,
            )
            input_ids = enc["input_ids"].clone()  # mask on CPU for seeded rand
            labels = input_ids.clone()
            special = torch.zeros_like(input_ids, dtype=torch.bool)
            for special_id in tokenizer.all_special_ids:
                special |= input_ids == special_id
            rand = torch.rand(input_ids.shape, generator=generator)
            masked = (rand < cfg.tapt_mask_prob) & ~special
            input_ids[masked] = mask_id
            labels[~masked] = -100
            if not masked.any():
                continue
            out = model(
                input_ids=input_ids.to(model.device),
                attention_mask=enc["attention_mask"].to(model.device),
                labels=labels.to(model.device),
            )
            out.loss.backward()
            optimizer.step()
            optimizer.zero_grad()
        log.info("tapt epoch %d/%d done", epoch + 1, cfg.tapt_epochs)
    model.eval()


def export_embeddings(cfg: AdapterConfig, corpus_path: str | Path, out_path: str | Path) -> int:
    """Write one [CLS] vector per corpus document, in corpus order.

    Returns the number of documents exported.
    """
    records = read_corpus(corpus_path)
    torch.manual_seed(cfg.seed)
    tokenizer = AutoTokenizer.from_pretrained(cfg.encoder)
    mlm = AutoModelForMaskedLM.from_pretrained(cfg.encoder).to(cfg.device)
    if cfg.tapt_epochs > 0:
        _tapt(mlm, tokenizer, [rec["document"] for rec in records], cfg)
    encoder = mlm.base_model
    encoder.eval()

    rows = []
    dim = None
    with torch.no_grad():
        for rec in records:
            enc = _encode(tokenizer, rec["document"], cfg.max_seq_len, rec["id"]).to(
                cfg.device
            )
            hidden = encoder(**enc).last_hidden_state
            cls = hidden[0, 0, :].cpu().tolist()
            dim = len(cls)
            rows.append((rec["id"], cls))
    if not rows:
        raise ValueError(f"corpus {corpus_path} is empty")
    write_embeddings(rows, dim, out_path)
    return len(rows)
