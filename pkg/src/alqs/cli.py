"""Command-line entry point.

Subcommands: dedup, filter, score, simulate, selflearn, report, toy-gen.
Exit codes: 0 success, 1 validation/input error, 2 coverage error,
3 internal error. Diagnostics go to stderr as single-line key=value pairs;
data goes to stdout or the requested output files, never mixed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import alsim
from .corpus import deduplicate, filter_by_length, load_corpus, save_corpus
from .diversity import IddsConfig, MmrConfig, idds_scores, load_embeddings, mmr_scores
from .errors import CoverageError, ValidationError
from .generation import (
    GenerationBundle,
    ReplayGenerator,
    ToyGenerator,
    build_generator,
    save_record_file,
)
from .plots import render_metric_curves, render_overlap_bars
from .selflearn import SelfLearnConfig, augment, filter_pseudo, load_pseudo
from .uncertainty import UNCERTAINTY_STRATEGIES, nsp, score_pool

SCORE_STRATEGIES = UNCERTAINTY_STRATEGIES + ("idds", "mmr")


def _diag(**fields) -> None:
    line = " ".join(f"{k}={v}" for k, v in fields.items())
    print(line, file=sys.stderr, flush=True)


def _fail(code: int, kind: str, detail: str) -> int:
    detail = " ".join(str(detail).split())  # keep the diagnostic on one line
    _diag(error=kind, code=code, detail=repr(detail))
    return code


def _read_id_file(path: str) -> list[str]:
    p = Path(path)
    if not p.exists():
        raise ValidationError(f"id file not found: {p}")
    return [line.strip() for line in p.read_text(encoding="utf-8").splitlines() if line.strip()]


def cmd_dedup(args) -> int:
    corpus = load_corpus(args.in_path)
    deduped = deduplicate(corpus)
    save_corpus(deduped, args.out)
    _diag(removed=len(corpus) - len(deduped))
    return 0


def cmd_filter(args) -> int:
    corpus = load_corpus(args.in_path)
    kept = filter_by_length(
        corpus,
        min_doc_tokens=args.min_doc_tokens,
        min_summary_tokens=args.min_summary_tokens,
    )
    save_corpus(kept, args.out)
    _diag(removed=len(corpus) - len(kept))
    return 0


def _score_values(args, corpus):
    strategy = args.strategy
    candidates = corpus.ids()
    if strategy in UNCERTAINTY_STRATEGIES:
        if not args.bundles:
            raise ValidationError(f"strategy {strategy} requires --bundles")
        generator = ReplayGenerator(args.bundles, m_passes=None)
        bundles = [generator.generate(ex.doc) for ex in corpus]
        return score_pool(strategy, bundles)
    if not args.embeddings:
        raise ValidationError(f"strategy {strategy} requires --embeddings")
    store = load_embeddings(args.embeddings)
    labeled = _read_id_file(args.labeled_ids) if args.labeled_ids else []
    labeled_set = set(labeled)
    candidates = [doc_id for doc_id in candidates if doc_id not in labeled_set]
    for doc_id in labeled:
        if doc_id not in store:
            raise CoverageError(f"missing embedding for doc {doc_id!r}", doc_id=doc_id)
    if strategy == "idds":
        cfg = IddsConfig() if args.lam is None else IddsConfig(lambda_=args.lam)
        return idds_scores(candidates, candidates, labeled, store, cfg)
    # mmr: uncertainty side comes from the greedy records in --bundles
    if not args.bundles:
        raise ValidationError("strategy mmr requires --bundles for its uncertainty term")
    generator = ReplayGenerator(args.bundles, m_passes=None)
    candidate_set = set(candidates)
    uncert = {
        ex.doc.id: nsp(generator.generate(ex.doc))
        for ex in corpus
        if ex.doc.id in candidate_set
    }
    cfg = MmrConfig() if args.lam is None else MmrConfig(lambda_=args.lam)
    return mmr_scores(candidates, labeled, store, uncert, cfg)


def cmd_score(args) -> int:
    if args.strategy not in SCORE_STRATEGIES:
        raise ValidationError(
            f"unknown strategy {args.strategy!r}; valid: {', '.join(SCORE_STRATEGIES)}"
        )
    corpus = load_corpus(args.corpus)
    scores = _score_values(args, corpus)
    with Path(args.out).open("w", encoding="utf-8") as fh:
        for score in scores:
            fh.write(
                json.dumps(
                    {"doc_id": score.doc_id, "strategy": score.strategy, "value": score.value}
                )
                + "\n"
            )
    _diag(scored=len(scores))
    return 0


def cmd_toy_gen(args) -> int:
    corpus = load_corpus(args.corpus)
    generator = ToyGenerator(m_passes=args.m_passes, summary_len=args.k)
    bundles: list[GenerationBundle] = [generator.generate(ex.doc) for ex in corpus]
    save_record_file(bundles, args.out)
    _diag(documents=len(bundles), passes=args.m_passes)
    return 0


def cmd_simulate(args) -> int:
    cfg_path = Path(args.config)
    if not cfg_path.exists():
        raise ValidationError(f"config file not found: {cfg_path}")
    try:
        raw = json.loads(cfg_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config parse error: {exc.msg}") from exc
    if args.bundles:  # flag overrides any generator block in the file
        raw["generator"] = {"kind": "replay", "records_path": args.bundles}
    cfg = alsim.ALConfig.from_dict(raw)
    if args.seeds < 1:
        raise ValidationError("--seeds must be >= 1")

    corpus = load_corpus(args.corpus)
    test = load_corpus(args.test)
    store = load_embeddings(args.embeddings) if args.embeddings else None

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for run_index in range(args.seeds):
        seed = cfg.rng_seed + run_index
        run_cfg = alsim.ALConfig.from_dict({**cfg.to_dict(), "rng_seed": seed})
        generator = build_generator(run_cfg.generator)
        artifacts = out_dir / f"seed{seed}_selflearn" if run_cfg.selflearn else None
        report = alsim.run_simulation(
            corpus, test, store, generator, run_cfg, artifacts_dir=artifacts
        )
        report.write(out_dir / f"report_seed{seed}.json")
        reports.append(report)
    summary = alsim.aggregate_runs(reports)
    with (out_dir / "aggregate.json").open("w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _diag(runs=len(reports), out_dir=out_dir)
    return 0


def cmd_selflearn(args) -> int:
    cfg = SelfLearnConfig(k_l=args.kl, k_h=args.kh)
    items = load_pseudo(args.pseudo)
    labeled = load_corpus(args.labeled)
    source = load_corpus(args.source)
    kept = filter_pseudo(items, cfg)
    augmented = augment(labeled, kept, source)
    save_corpus(augmented, args.out)
    _diag(pseudo=len(items), kept=len(kept), dropped=len(items) - len(kept))
    return 0


def _collect_reports(runs_dir: Path) -> list[alsim.RunReport]:
    if not runs_dir.is_dir():
        raise ValidationError(f"run directory not found: {runs_dir}")
    paths = sorted(p for p in runs_dir.glob("*.json") if p.name != "aggregate.json")
    if not paths:
        raise ValidationError(f"no run reports in {runs_dir}")
    return [alsim.load_run_report(p) for p in paths]


def _format_table(summary: dict) -> str:
    metric_names = sorted(summary["iterations"][0]["metrics"]) if summary["iterations"] else []
    header = ["iter", "labeled"] + metric_names + ["overlap_full", "overlap_partial"]
    rows = [header]
    for row in summary["iterations"]:
        cells = [str(row["iteration"]), str(row["labeled_count"])]
        for m in metric_names:
            stats = row["metrics"][m]
            cells.append(f"{stats['mean']:.4f}±{stats['std']:.4f}")
        for key in ("overlap_full_pct", "overlap_partial_pct"):
            stats = row[key]
            cells.append(f"{stats['mean']:.1f}±{stats['std']:.1f}")
        rows.append(cells)
    widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
    return "\n".join(lines)


def _format_csv(summary: dict) -> str:
    metric_names = sorted(summary["iterations"][0]["metrics"]) if summary["iterations"] else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["iteration", "labeled_count"]
    for m in metric_names:
        header += [f"{m}_mean", f"{m}_std"]
    header += [
        "overlap_full_pct_mean",
        "overlap_full_pct_std",
        "overlap_partial_pct_mean",
        "overlap_partial_pct_std",
    ]
    writer.writerow(header)
    for row in summary["iterations"]:
        cells = [row["iteration"], row["labeled_count"]]
        for m in metric_names:
            cells += [row["metrics"][m]["mean"], row["metrics"][m]["std"]]
        cells += [
            row["overlap_full_pct"]["mean"],
            row["overlap_full_pct"]["std"],
            row["overlap_partial_pct"]["mean"],
            row["overlap_partial_pct"]["std"],
        ]
        writer.writerow(cells)
    return buf.getvalue()


def cmd_report(args) -> int:
    reports = _collect_reports(Path(args.runs))
    summary = alsim.aggregate_runs(reports)
    if args.format == "csv":
        sys.stdout.write(_format_csv(summary))
    else:
        print(_format_table(summary))
    sys.stdout.flush()
    if args.plot_dir:
        written = render_metric_curves(summary, args.plot_dir)
        written.append(render_overlap_bars(summary, args.plot_dir))
        _diag(figures=len(written), plot_dir=args.plot_dir)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="alqs",
        description="Active-learning query strategies for summarization: "
        "scoring, simulation, self-learning, and reports.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dedup", help="remove exact-duplicate documents from a corpus")
    p.add_argument("--in", dest="in_path", required=True, help="input corpus JSONL")
    p.add_argument("--out", required=True, help="output corpus JSONL")
    p.set_defaults(func=cmd_dedup)

    p = sub.add_parser("filter", help="drop examples below token-count minimums")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--min-doc-tokens", type=int, default=0)
    p.add_argument("--min-summary-tokens", type=int, default=0)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("score", help="write acquisition scores for a corpus")
    p.add_argument("--strategy", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", help="embedding JSONL (idds, mmr)")
    p.add_argument("--bundles", help="generation-record JSONL (uncertainty, mmr)")
    p.add_argument("--labeled-ids", help="file with one labeled doc id per line")
    p.add_argument("--lambda", dest="lam", type=float, help="idds/mmr trade-off")
    p.add_argument("--out", required=True, help="output scores JSONL")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("toy-gen", help="write toy generation records for a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=8, help="summary length")
    p.add_argument("--m-passes", type=int, default=10)
    p.set_defaults(func=cmd_toy_gen)

    p = sub.add_parser("simulate", help="run the AL emulation for one or more seeds")
    p.add_argument("--config", required=True, help="JSON config file")
    p.add_argument("--corpus", required=True, help="pool corpus JSONL")
    p.add_argument("--test", required=True, help="held-out test corpus JSONL")
    p.add_argument("--embeddings")
    p.add_argument("--bundles", help="replay records; overrides the config generator")
    p.add_argument("--seeds", type=int, default=1, help="number of seeded runs")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("selflearn", help="filter pseudo labels and emit the augmented corpus")
    p.add_argument("--pseudo", required=True, help="pseudo-label JSONL")
    p.add_argument("--labeled", required=True, help="gold corpus JSONL")
    p.add_argument("--source", required=True, help="corpus JSONL covering the pseudo ids")
    p.add_argument("--kl", type=float, required=True, help="lowest-score percent to drop")
    p.add_argument("--kh", type=float, required=True, help="highest-score percent to drop")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_selflearn)

    p = sub.add_parser("report", help="print per-iteration mean and std over runs")
    p.add_argument("--runs", required=True, help="directory with run report JSON files")
    p.add_argument("--format", choices=("table", "csv"), default="table")
    p.add_argument("--plot-dir", help="also render PNG figures into this directory")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        return _fail(1, "validation", str(exc))
    except CoverageError as exc:
        return _fail(2, "coverage", str(exc))
    except OSError as exc:
        return _fail(1, "io", str(exc))
    except Exception as exc:  # pragma: no cover - defensive
        return _fail(3, "internal", f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    raise SystemExit(main())
