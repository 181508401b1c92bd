"""Generation-bundle export: one greedy decode plus M dropout decodes per doc.

Pass 0 is a deterministic greedy decode with per-token log-probabilities.
Passes 1..M keep dropout active as a posterior-sampling stand-in, each pass
seeded from the doc id so re-runs reproduce the file bit-for-bit. In
``per_pass`` mode every stochastic pass decodes its own sequence; in
``rescore_greedy`` mode the passes re-score the greedy tokens under dropout,
so their token lists equal the greedy one. Special tokens are suppressed
during decoding, which keeps every record non-empty.

Decode settings are written to a ``<out>.meta.json`` sidecar; the record
file itself stays plain JSONL so downstream validators accept it unchanged.
"""

from __future__ import annotations

import json
import logging
import math
import zlib
from pathlib import Path

import torch
import torch.nn.functional as F
from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

from .config import AdapterConfig
from .corpus_io import read_corpus, read_records, write_pseudo, write_records

log = logging.getLogger(__name__)


def _pass_seed(doc_id: str, pass_index: int, base: int) -> int:
    return (zlib.crc32(doc_id.encode("utf-8")) + 0x9E3779B9 * pass_index + base) % (2**31)


def _adaptive_max_new_tokens(records: list[dict], tokenizer, cap: int = 64) -> int:
    longest = 0
    for rec in records:
        summary = rec.get("summary") or ""
        if summary.strip():
            longest = max(longest, len(tokenizer.tokenize(summary)))
    return min(max(longest, 4), cap) if longest else 32


class BundleExporter:
    def __init__(self, cfg: AdapterConfig):
        self.cfg = cfg
        self.tokenizer = AutoTokenizer.from_pretrained(cfg.summarizer)
        self.model = AutoModelForSeq2SeqLM.from_pretrained(cfg.summarizer).to(cfg.device)
        self.model.eval()
        self._drop_ids = {
            i for i in self.tokenizer.all_special_ids if i is not None
        } | {self.model.config.decoder_start_token_id}
        eos = self.model.config.eos_token_id
        self._suppress = sorted(
            i for i in self._drop_ids if i is not None and i != eos
        )

    def _encode(self, text: str, doc_id: str):
        enc = self.tokenizer(
            text, return_tensors="pt", truncation=True, max_length=self.cfg.max_seq_len
        )
        if enc["input_ids"].shape[1] == self.cfg.max_seq_len:
            log.info("document %s truncated to %d tokens", doc_id, self.cfg.max_seq_len)
        return enc.to(self.cfg.device)

    def _decode_pass(self, enc, max_new_tokens: int):
        out = self.model.generate(
            enc["input_ids"],
            attention_mask=enc.get("attention_mask"),
            max_new_tokens=max_new_tokens,
            min_new_tokens=self.cfg.min_new_tokens,
            do_sample=False,
            num_beams=1,
            suppress_tokens=self._suppress,
            output_scores=True,
            return_dict_in_generate=True,
        )
        generated = out.sequences[0].tolist()[1:]  # after decoder start
        tokens, logprobs = [], []
        for step, token_id in enumerate(generated):
            if token_id in self._drop_ids:
                continue
            lp = F.log_softmax(out.scores[step][0], dim=-1)[token_id].item()
            tokens.append(self.tokenizer.convert_ids_to_tokens(token_id))
            logprobs.append(min(lp, 0.0))
        if not tokens:
            raise RuntimeError("decode produced only special tokens")
        return tokens, logprobs

    def _rescore(self, enc, target_ids: list[int]):
        """Token log-probabilities of a fixed target under the current mode."""
        start = self.model.config.decoder_start_token_id
        decoder_input = torch.tensor([[start] + target_ids[:-1]], device=self.cfg.device)
        target = torch.tensor([target_ids], device=self.cfg.device)
        out = self.model(
            input_ids=enc["input_ids"],
            attention_mask=enc.get("attention_mask"),
            decoder_input_ids=decoder_input,
        )
        logprobs = F.log_softmax(out.logits[0], dim=-1)
        picked = logprobs[torch.arange(len(target_ids)), target[0]]
        return [min(x, 0.0) for x in picked.tolist()]

    def export(self, corpus_path: str | Path, out_path: str | Path) -> int:
        cfg = self.cfg
        corpus = read_corpus(corpus_path)
        if not corpus:
            raise ValueError(f"corpus {corpus_path} is empty")
        max_new = cfg.max_new_tokens or _adaptive_max_new_tokens(corpus, self.tokenizer)

        records = []
        try:
            for rec in corpus:
                doc_id = rec["id"]
                enc = self._encode(rec["document"], doc_id)

                self.model.eval()
                torch.manual_seed(cfg.seed)
                tokens, logprobs = self._decode_pass(enc, max_new)
                greedy_ids = self.tokenizer.convert_tokens_to_ids(tokens)
                records.append(
                    {
                        "doc_id": doc_id,
                        "pass_index": 0,
                        "tokens": tokens,
                        "token_logprobs": logprobs,
                        "scoring_mode": cfg.scoring_mode,
                    }
                )

                self.model.train()  # dropout active for the stochastic passes
                for j in range(1, cfg.m_passes + 1):
                    torch.manual_seed(_pass_seed(doc_id, j, cfg.seed))
                    if cfg.scoring_mode == "rescore_greedy":
                        pass_tokens = tokens
                        pass_logprobs = self._rescore(enc, greedy_ids)
                    else:
                        pass_tokens, pass_logprobs = self._decode_pass(enc, max_new)
                    records.append(
                        {
                            "doc_id": doc_id,
                            "pass_index": j,
                            "tokens": pass_tokens,
                            "token_logprobs": pass_logprobs,
                        }
                    )
                self.model.eval()
        except torch.cuda.OutOfMemoryError as exc:
            raise RuntimeError(
                "out of memory: retry with a smaller --max-seq-len or fewer passes"
            ) from exc

        write_records(records, out_path)
        meta = {
            "summarizer": cfg.summarizer,
            "m_passes": cfg.m_passes,
            "scoring_mode": cfg.scoring_mode,
            "decode": {
                "strategy": "greedy",
                "max_new_tokens": max_new,
                "min_new_tokens": cfg.min_new_tokens,
                "max_seq_len": cfg.max_seq_len,
            },
            "seed": cfg.seed,
        }
        with Path(f"{out_path}.meta.json").open("w", encoding="utf-8") as fh:
            json.dump(meta, fh, indent=2)
            fh.write("\n")
        return len(corpus)


def export_bundles(cfg: AdapterConfig, corpus_path: str | Path, out_path: str | Path) -> int:
    """Write (M+1) generation records per corpus document; returns doc count."""
    return BundleExporter(cfg).export(corpus_path, out_path)


def greedy_nsp(logprobs: list[float]) -> float:
    """One minus the geometric mean of token probabilities."""
    if not logprobs:
        raise ValueError("empty logprob list")
    return 1.0 - math.exp(sum(logprobs) / len(logprobs))


def export_pseudo(bundles_path: str | Path, out_path: str | Path) -> int:
    """Derive a pseudo-label file from the greedy records of a bundle file."""
    rows = []
    for rec in read_records(bundles_path):
        if rec.get("pass_index") != 0:
            continue
        rows.append(
            {
                "doc_id": rec["doc_id"],
                "summary": " ".join(rec["tokens"]),
                "nsp": greedy_nsp(rec["token_logprobs"]),
            }
        )
    if not rows:
        raise ValueError(f"no greedy records found in {bundles_path}")
    write_pseudo(rows, out_path)
    return len(rows)
