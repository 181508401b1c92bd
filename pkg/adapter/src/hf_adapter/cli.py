"""Standalone command-line entry point for the adapter."""

from __future__ import annotations

import argparse
import logging
import sys

from .bundles import export_bundles, export_pseudo
from .config import AdapterConfig
from .encoding import export_embeddings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alqs-hf-adapter",
        description="Export embeddings, generation bundles, and pseudo labels "
        "from HuggingFace checkpoints in the alqs JSONL formats.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("export-embeddings", help="[CLS]-pooled vectors, optional TAPT")
    p.add_argument("--encoder", required=True, help="encoder checkpoint name or path")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tapt-epochs", type=int, default=0)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export-bundles", help="greedy + dropout decodes with logprobs")
    p.add_argument("--summarizer", required=True, help="seq2seq checkpoint name or path")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--m-passes", type=int, default=10)
    p.add_argument("--max-seq-len", type=int, default=512)
    p.add_argument("--max-new-tokens", type=int, default=None,
                   help="decode cap; defaults to the longest summary in the corpus")
    p.add_argument("--min-new-tokens", type=int, default=2)
    p.add_argument("--scoring-mode", choices=("per_pass", "rescore_greedy"),
                   default="per_pass")
    p.add_argument("--device", default="cpu")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pseudo-out", help="also derive a pseudo-label file")

    p = sub.add_parser("export-pseudo", help="pseudo labels from an existing bundle file")
    p.add_argument("--bundles", required=True)
    p.add_argument("--out", required=True)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.command == "export-embeddings":
            cfg = AdapterConfig(
                encoder=args.encoder,
                tapt_epochs=args.tapt_epochs,
                max_seq_len=args.max_seq_len,
                device=args.device,
                seed=args.seed,
            )
            count = export_embeddings(cfg, args.corpus, args.out)
            print(f"exported={count}", file=sys.stderr)
        elif args.command == "export-bundles":
            cfg = AdapterConfig(
                summarizer=args.summarizer,
                m_passes=args.m_passes,
                max_seq_len=args.max_seq_len,
                max_new_tokens=args.max_new_tokens,
                min_new_tokens=args.min_new_tokens,
                scoring_mode=args.scoring_mode,
                device=args.device,
                seed=args.seed,
            )
            count = export_bundles(cfg, args.corpus, args.out)
            print(f"exported={count} passes={cfg.m_passes}", file=sys.stderr)
            if args.pseudo_out:
                export_pseudo(args.out, args.pseudo_out)
                print(f"pseudo_out={args.pseudo_out}", file=sys.stderr)
        else:
            count = export_pseudo(args.bundles, args.out)
            print(f"exported={count}", file=sys.stderr)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
