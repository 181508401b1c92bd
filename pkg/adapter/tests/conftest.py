"""Tiny offline checkpoints and corpus fixtures for adapter tests."""

import json
import random

import pytest
import torch
from transformers import (
    BartConfig,
    BartForConditionalGeneration,
    BertConfig,
    BertForMaskedLM,
    BertTokenizer,
)

VOCAB = (
    ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"]
    + [f"word{i}" for i in range(60)]
    + ["alpha", "beta", "gamma", "delta", "epsilon"]
)


def _make_tokenizer(directory):
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB))
    return BertTokenizer(str(vocab_file), do_lower_case=True)


@pytest.fixture(scope="session")
def tiny_encoder(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tiny-encoder")
    tokenizer = _make_tokenizer(directory)
    config = BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=128,
    )
    torch.manual_seed(0)
    model = BertForMaskedLM(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


@pytest.fixture(scope="session")
def tiny_summarizer(tmp_path_factory):
    directory = tmp_path_factory.mktemp("tiny-summarizer")
    tokenizer = _make_tokenizer(directory)
    config = BartConfig(
        vocab_size=len(VOCAB),
        d_model=32,
        encoder_layers=2,
        decoder_layers=2,
        encoder_attention_heads=2,
        decoder_attention_heads=2,
        encoder_ffn_dim=64,
        decoder_ffn_dim=64,
        max_position_embeddings=128,
        pad_token_id=tokenizer.pad_token_id,
        bos_token_id=tokenizer.cls_token_id,
        eos_token_id=tokenizer.sep_token_id,
        decoder_start_token_id=tokenizer.cls_token_id,
        forced_eos_token_id=None,
        dropout=0.3,
    )
    torch.manual_seed(1)
    model = BartForConditionalGeneration(config)
    model.save_pretrained(directory)
    tokenizer.save_pretrained(directory)
    return str(directory)


def write_corpus(path, n_docs, seed=0, with_summaries=True):
    rnd = random.Random(seed)
    words = [w for w in VOCAB if not w.startswith("[")]
    with path.open("w", encoding="utf-8") as fh:
        for i in range(n_docs):
            doc = " ".join(rnd.choice(words) for _ in range(rnd.randint(8, 16)))
            summary = (
                " ".join(rnd.choice(words) for _ in range(rnd.randint(3, 6)))
                if with_summaries
                else ""
            )
            fh.write(
                json.dumps({"id": f"doc{i:03d}", "document": doc, "summary": summary})
                + "\n"
            )
    return path


@pytest.fixture(scope="session")
def corpus_20(tmp_path_factory):
    directory = tmp_path_factory.mktemp("corpus")
    return str(write_corpus(directory / "corpus.jsonl", 20))
