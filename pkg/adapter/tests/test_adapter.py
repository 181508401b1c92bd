"""Adapter unit tests: export shapes, determinism, and record invariants."""

import json
import math

import pytest

from hf_adapter import AdapterConfig, export_bundles, export_embeddings, export_pseudo
from hf_adapter.bundles import greedy_nsp
from hf_adapter.cli import main

from conftest import write_corpus


def read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


class TestExportEmbeddings:
    def test_header_and_order(self, tiny_encoder, corpus_20, tmp_path):
        out = tmp_path / "emb.jsonl"
        cfg = AdapterConfig(encoder=tiny_encoder, max_seq_len=64)
        assert export_embeddings(cfg, corpus_20, out) == 20
        rows = read_jsonl(out)
        assert rows[0] == {"dim": 32, "count": 20}
        assert [r["id"] for r in rows[1:]] == [f"doc{i:03d}" for i in range(20)]
        assert all(len(r["vector"]) == 32 for r in rows[1:])

    def test_deterministic_without_tapt(self, tiny_encoder, corpus_20, tmp_path):
        cfg = AdapterConfig(encoder=tiny_encoder, max_seq_len=64)
        out1, out2 = tmp_path / "e1.jsonl", tmp_path / "e2.jsonl"
        export_embeddings(cfg, corpus_20, out1)
        export_embeddings(cfg, corpus_20, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_tapt_changes_vectors(self, tiny_encoder, corpus_20, tmp_path):
        base, tuned = tmp_path / "base.jsonl", tmp_path / "tuned.jsonl"
        export_embeddings(AdapterConfig(encoder=tiny_encoder, max_seq_len=64), corpus_20, base)
        cfg = AdapterConfig(encoder=tiny_encoder, max_seq_len=64, tapt_epochs=1, tapt_lr=1e-3)
        export_embeddings(cfg, corpus_20, tuned)
        v_base = read_jsonl(base)[1]["vector"]
        v_tuned = read_jsonl(tuned)[1]["vector"]
        assert v_base != v_tuned

    def test_tapt_is_seeded(self, tiny_encoder, corpus_20, tmp_path):
        cfg = AdapterConfig(encoder=tiny_encoder, max_seq_len=64, tapt_epochs=1, seed=5)
        out1, out2 = tmp_path / "t1.jsonl", tmp_path / "t2.jsonl"
        export_embeddings(cfg, corpus_20, out1)
        export_embeddings(cfg, corpus_20, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_empty_corpus_rejected(self, tiny_encoder, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text("")
        with pytest.raises(ValueError):
            export_embeddings(AdapterConfig(encoder=tiny_encoder), empty, tmp_path / "o")


class TestExportBundles:
    def test_eleven_records_per_doc_at_ten_passes(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 3, seed=1)
        out = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=10, max_seq_len=64)
        assert export_bundles(cfg, corpus, out) == 3
        rows = read_jsonl(out)
        assert len(rows) == 3 * 11
        per_doc = {}
        for rec in rows:
            per_doc.setdefault(rec["doc_id"], []).append(rec["pass_index"])
        for indices in per_doc.values():
            assert sorted(indices) == list(range(11))

    def test_record_invariants(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 4, seed=2)
        out = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=3, max_seq_len=64)
        export_bundles(cfg, corpus, out)
        for rec in read_jsonl(out):
            assert len(rec["tokens"]) == len(rec["token_logprobs"]) > 0
            assert all(lp <= 0.0 and math.isfinite(lp) for lp in rec["token_logprobs"])
            if rec["pass_index"] == 0:
                assert rec["scoring_mode"] == "per_pass"
            else:
                assert "scoring_mode" not in rec

    def test_deterministic_re_export(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 3, seed=3)
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=2, max_seq_len=64)
        out1, out2 = tmp_path / "b1.jsonl", tmp_path / "b2.jsonl"
        export_bundles(cfg, corpus, out1)
        export_bundles(cfg, corpus, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_stochastic_passes_differ_from_each_other(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 5, seed=4)
        out = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=4, max_seq_len=64)
        export_bundles(cfg, corpus, out)
        rows = read_jsonl(out)
        distinct = set()
        for rec in rows:
            if rec["pass_index"] > 0:
                distinct.add((rec["doc_id"], tuple(rec["tokens"]), tuple(rec["token_logprobs"])))
        # dropout must actually perturb something across 5 docs x 4 passes
        assert len(distinct) > 5

    def test_rescore_greedy_mode(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 3, seed=5)
        out = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(
            summarizer=tiny_summarizer, m_passes=3, max_seq_len=64,
            scoring_mode="rescore_greedy",
        )
        export_bundles(cfg, corpus, out)
        rows = read_jsonl(out)
        greedy = {r["doc_id"]: r for r in rows if r["pass_index"] == 0}
        assert all(r["scoring_mode"] == "rescore_greedy" for r in greedy.values())
        for rec in rows:
            if rec["pass_index"] > 0:
                assert rec["tokens"] == greedy[rec["doc_id"]]["tokens"]
                assert rec["token_logprobs"] != greedy[rec["doc_id"]]["token_logprobs"]

    def test_meta_sidecar_records_decode_settings(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 2, seed=6)
        out = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=2, max_seq_len=64)
        export_bundles(cfg, corpus, out)
        meta = json.loads((tmp_path / "bundles.jsonl.meta.json").read_text())
        assert meta["decode"]["strategy"] == "greedy"
        assert meta["decode"]["max_new_tokens"] >= 3  # adapted to corpus summaries
        assert meta["m_passes"] == 2


class TestExportPseudo:
    def test_derived_from_greedy_records(self, tiny_summarizer, tmp_path):
        corpus = write_corpus(tmp_path / "c.jsonl", 4, seed=7)
        bundles = tmp_path / "bundles.jsonl"
        cfg = AdapterConfig(summarizer=tiny_summarizer, m_passes=2, max_seq_len=64)
        export_bundles(cfg, corpus, bundles)
        out = tmp_path / "pseudo.jsonl"
        assert export_pseudo(bundles, out) == 4
        rows = read_jsonl(out)
        assert [r["doc_id"] for r in rows] == [f"doc{i:03d}" for i in range(4)]
        for rec in rows:
            assert rec["summary"].strip()
            assert 0.0 <= rec["nsp"] < 1.0

    def test_nsp_formula(self):
        assert greedy_nsp([0.0, 0.0]) == 0.0
        assert greedy_nsp([math.log(0.5), math.log(0.5)]) == pytest.approx(0.5, abs=1e-12)


class TestCli:
    def test_export_embeddings_command(self, tiny_encoder, corpus_20, tmp_path, capsys):
        out = tmp_path / "emb.jsonl"
        code = main([
            "export-embeddings", "--encoder", tiny_encoder, "--corpus", corpus_20,
            "--out", str(out), "--max-seq-len", "64",
        ])
        assert code == 0
        assert "exported=20" in capsys.readouterr().err
        assert out.exists()

    def test_export_bundles_with_pseudo(self, tiny_summarizer, tmp_path, capsys):
        corpus = write_corpus(tmp_path / "c.jsonl", 2, seed=8)
        out = tmp_path / "bundles.jsonl"
        pseudo = tmp_path / "pseudo.jsonl"
        code = main([
            "export-bundles", "--summarizer", tiny_summarizer, "--corpus", str(corpus),
            "--out", str(out), "--m-passes", "2", "--max-seq-len", "64",
            "--pseudo-out", str(pseudo),
        ])
        assert code == 0
        assert pseudo.exists()

    def test_bad_input_returns_one(self, tmp_path, capsys):
        code = main([
            "export-pseudo", "--bundles", str(tmp_path / "missing.jsonl"),
            "--out", str(tmp_path / "o.jsonl"),
        ])
        assert code == 1
        assert "error:" in capsys.readouterr().err
