"""Pool-based active-learning emulation driver.

One run: seed a labeled set (skipped for the diversity strategy, which needs
no trained model), then iterate {subset the pool, score candidates with the
configured strategy, take the top-k query, move it to the labeled set,
optionally emit a self-learning corpus, evaluate on the held-out test set}.
All randomness flows through one seeded portable stream in a fixed draw
order (seeding, then per iteration subsetting, then the random-strategy
shuffle), so a whole run is a pure function of its inputs and seed.

Report JSON: a config echo, one object per iteration with the query ids,
labeled count, metric means and batch-overlap percentages, plus wall-clock
seconds per phase. The timing block is the only non-deterministic part and
is excluded from the canonical serialization used for byte-identity checks.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Corpus, deduplicate, save_corpus
from .diversity import EmbeddingStore, IddsConfig, MmrConfig, idds_scores, mmr_scores
from .errors import CoverageError, ValidationError
from .generation import Generator, GeneratorSpec, ReplayGenerator
from .metrics import rouge_l, rouge_n
from .rng import Xoshiro256
from .selflearn import PseudoExample, SelfLearnConfig, augment, filter_pseudo
from .uncertainty import (
    ALL_STRATEGIES,
    UNCERTAINTY_STRATEGIES,
    AcquisitionScore,
    nsp,
    score_pool,
)

EVAL_METRICS = ("rouge1", "rouge2", "rougeL")
OVERLAP_THRESHOLD = 0.66


@dataclass(frozen=True)
class ALConfig:
    strategy: str
    iterations: int = 1
    query_size: int = 10
    seed_size: int | None = None  # None -> query_size
    subset_size: int | None = None
    rng_seed: int = 0
    m_passes: int = 10
    idds: IddsConfig = field(default_factory=IddsConfig)
    mmr: MmrConfig = field(default_factory=MmrConfig)
    selflearn: SelfLearnConfig | None = None
    eval_metrics: tuple[str, ...] = EVAL_METRICS
    generator: GeneratorSpec = field(default_factory=lambda: GeneratorSpec(kind="toy"))

    def __post_init__(self):
        if self.strategy not in ALL_STRATEGIES:
            raise ValidationError(
                f"unknown strategy {self.strategy!r}; valid: {', '.join(ALL_STRATEGIES)}"
            )
        if self.query_size < 1:
            raise ValidationError("query_size must be >= 1")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.subset_size is not None and self.subset_size < self.query_size:
            raise ValidationError("subset_size must be >= query_size")
        for m in self.eval_metrics:
            if m not in EVAL_METRICS:
                raise ValidationError(f"unknown eval metric {m!r}")
        if self.strategy in ("ensv", "bleuvar", "sacrebleuvar") and self.m_passes < 2:
            raise ValidationError(f"strategy {self.strategy} needs m_passes >= 2")
        if self.strategy == "ensp" and self.m_passes < 1:
            raise ValidationError("strategy ensp needs m_passes >= 1")

    @property
    def effective_seed_size(self) -> int:
        return self.query_size if self.seed_size is None else self.seed_size

    def to_dict(self) -> dict:
        gen: dict = {"kind": self.generator.kind}
        if self.generator.kind == "toy":
            gen["summary_len"] = self.generator.summary_len
        else:
            gen["records_path"] = self.generator.records_path
        return {
            "strategy": self.strategy,
            "iterations": self.iterations,
            "query_size": self.query_size,
            "seed_size": self.effective_seed_size,
            "subset_size": self.subset_size,
            "rng_seed": self.rng_seed,
            "m_passes": self.m_passes,
            "idds": {
                "lambda": self.idds.lambda_,
                "similarity": self.idds.similarity,
                "aggregation": self.idds.aggregation,
                "normalize": self.idds.normalize,
                "freeze_pool": self.idds.freeze_pool,
            },
            "mmr": {"lambda": self.mmr.lambda_, "similarity": self.mmr.similarity},
            "selflearn": (
                None
                if self.selflearn is None
                else {"k_l": self.selflearn.k_l, "k_h": self.selflearn.k_h}
            ),
            "eval_metrics": list(self.eval_metrics),
            "generator": gen,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ALConfig":
        if "strategy" not in data:
            raise ValidationError("config needs a 'strategy' field")
        known = {
            "strategy",
            "iterations",
            "query_size",
            "seed_size",
            "subset_size",
            "rng_seed",
            "m_passes",
            "idds",
            "mmr",
            "selflearn",
            "eval_metrics",
            "generator",
        }
        unknown = set(data) - known
        if unknown:
            raise ValidationError(f"unknown config fields: {sorted(unknown)}")
        idds_raw = dict(data.get("idds", {}))
        if "lambda" in idds_raw:
            idds_raw["lambda_"] = idds_raw.pop("lambda")
        mmr_raw = dict(data.get("mmr", {}))
        if "lambda" in mmr_raw:
            mmr_raw["lambda_"] = mmr_raw.pop("lambda")
        sl_raw = data.get("selflearn")
        gen_raw = dict(data.get("generator", {"kind": "toy"}))
        gen_raw.setdefault("kind", "toy")
        m_passes = int(data.get("m_passes", 10))
        generator = GeneratorSpec(
            kind=gen_raw["kind"],
            m_passes=m_passes,
            summary_len=int(gen_raw.get("summary_len", 8)),
            records_path=gen_raw.get("records_path"),
        )
        return cls(
            strategy=data["strategy"],
            iterations=int(data.get("iterations", 1)),
            query_size=int(data.get("query_size", 10)),
            seed_size=None if data.get("seed_size") is None else int(data["seed_size"]),
            subset_size=(
                None if data.get("subset_size") is None else int(data["subset_size"])
            ),
            rng_seed=int(data.get("rng_seed", 0)),
            m_passes=m_passes,
            idds=IddsConfig(**idds_raw),
            mmr=MmrConfig(**mmr_raw),
            selflearn=None if sl_raw is None else SelfLearnConfig(**sl_raw),
            eval_metrics=tuple(data.get("eval_metrics", EVAL_METRICS)),
            generator=generator,
        )


@dataclass(frozen=True)
class ALState:
    labeled_ids: tuple[str, ...]
    unlabeled_ids: tuple[str, ...]
    iteration: int = 0

    def __post_init__(self):
        overlap = set(self.labeled_ids) & set(self.unlabeled_ids)
        if overlap:
            raise ValidationError(f"labeled/unlabeled overlap: {sorted(overlap)[:3]}")


@dataclass(frozen=True)
class IterationReport:
    iteration: int
    query_ids: tuple[str, ...]
    labeled_count: int
    metrics: dict[str, float]
    overlap_full_pct: float
    overlap_partial_pct: float

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "query_ids": list(self.query_ids),
            "labeled_count": self.labeled_count,
            "metrics": dict(self.metrics),
            "overlap_full_pct": self.overlap_full_pct,
            "overlap_partial_pct": self.overlap_partial_pct,
        }


@dataclass(frozen=True)
class RunReport:
    config: dict
    iterations: tuple[IterationReport, ...]
    wall_time_s: dict[str, float]

    def to_json_dict(self, include_timing: bool = True) -> dict:
        out = {
            "config": self.config,
            "iterations": [it.to_json_dict() for it in self.iterations],
        }
        if include_timing:
            out["wall_time_s"] = dict(self.wall_time_s)
        return out

    def canonical_json(self) -> str:
        """Deterministic serialization (timing excluded); used for byte-identity."""
        return json.dumps(
            self.to_json_dict(include_timing=False),
            sort_keys=True,
            separators=(",", ":"),
        )

    def write(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def load_run_report(path: str | Path) -> RunReport:
    with Path(path).open(encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        iterations = tuple(
            IterationReport(
                iteration=it["iteration"],
                query_ids=tuple(it["query_ids"]),
                labeled_count=it["labeled_count"],
                metrics=dict(it["metrics"]),
                overlap_full_pct=it["overlap_full_pct"],
                overlap_partial_pct=it["overlap_partial_pct"],
            )
            for it in data["iterations"]
        )
    except KeyError as exc:
        raise ValidationError(f"malformed run report {path}: missing {exc}") from exc
    return RunReport(
        config=data.get("config", {}),
        iterations=iterations,
        wall_time_s=data.get("wall_time_s", {}),
    )


def seed_labeled(pool: list[str], cfg: ALConfig, rng: Xoshiro256) -> ALState:
    """Draw the random seed set; the diversity strategy starts cold with none."""
    if not pool:
        raise ValidationError("cannot seed from an empty pool")
    if cfg.strategy == "idds":
        return ALState(labeled_ids=(), unlabeled_ids=tuple(pool))
    k = cfg.effective_seed_size
    if k > len(pool):
        raise ValidationError(f"seed_size {k} exceeds pool size {len(pool)}")
    chosen = rng.sample(list(pool), k)
    chosen_set = set(chosen)
    return ALState(
        labeled_ids=tuple(chosen),
        unlabeled_ids=tuple(x for x in pool if x not in chosen_set),
    )


def candidate_subset(state: ALState, cfg: ALConfig, rng: Xoshiro256) -> list[str]:
    """The scoring candidates: the whole pool, or a seeded random subset of it.

    Returned in unlabeled-pool order regardless of draw order.
    """
    unlabeled = list(state.unlabeled_ids)
    if cfg.subset_size is None or cfg.subset_size >= len(unlabeled):
        return unlabeled
    chosen = set(rng.sample(unlabeled, cfg.subset_size))
    return [x for x in unlabeled if x in chosen]


def select_query(scores: list[AcquisitionScore], k: int) -> list[str]:
    """Top-k doc ids by score, ties broken by ascending doc id."""
    ranked = sorted(scores, key=lambda s: (-s.value, s.doc_id))
    return [s.doc_id for s in ranked[:k]]


def batch_overlap(
    query_ids: list[str], corpus: Corpus, threshold: float = OVERLAP_THRESHOLD
) -> tuple[float, float]:
    """Percent of the batch in >=1 fully / partly overlapping gold-summary pair.

    Full means identical summary token sequences; partial means unigram
    overlap F above the threshold without being identical.
    """
    examples = []
    for doc_id in query_ids:
        try:
            ex = corpus.get(doc_id)
        except KeyError:
            raise ValidationError(f"queried doc {doc_id!r} not in corpus") from None
        if not ex.has_summary():
            raise ValidationError(f"queried doc {doc_id!r} has no gold summary")
        examples.append(ex)
    n = len(examples)
    if n < 2:
        return 0.0, 0.0
    in_full: set[int] = set()
    in_partial: set[int] = set()
    for i in range(n):
        for j in range(i + 1, n):
            a, b = examples[i], examples[j]
            if a.summary_tokens == b.summary_tokens:
                in_full.update((i, j))
            elif rouge_n(list(a.summary_tokens), list(b.summary_tokens), 1).f1 > threshold:
                in_partial.update((i, j))
    return 100.0 * len(in_full) / n, 100.0 * len(in_partial) / n


def evaluate(generator: Generator, test: Corpus, metrics: tuple[str, ...]) -> dict[str, float]:
    """Mean F-score of the greedy decode against gold, per requested metric."""
    if not metrics:
        return {}
    if len(test) == 0:
        raise ValidationError("test corpus is empty")
    totals = {m: 0.0 for m in metrics}
    for ex in test:
        bundle = generator.generate(ex.doc)
        cand = list(bundle.greedy.tokens)
        ref = list(ex.summary_tokens)
        for m in metrics:
            if m == "rouge1":
                totals[m] += rouge_n(cand, ref, 1).f1
            elif m == "rouge2":
                totals[m] += rouge_n(cand, ref, 2).f1
            elif m == "rougeL":
                totals[m] += rouge_l(cand, ref).f1
            else:
                raise ValidationError(f"unknown eval metric {m!r}")
    return {m: totals[m] / len(test) for m in metrics}


def _score_candidates(
    candidates: list[str],
    state: ALState,
    initial_pool: tuple[str, ...],
    pool_corpus: Corpus,
    store: EmbeddingStore | None,
    generator: Generator,
    cfg: ALConfig,
    rng: Xoshiro256,
) -> list[AcquisitionScore]:
    strategy = cfg.strategy
    if strategy == "random":
        shuffled = list(candidates)
        rng.shuffle(shuffled)
        return [
            AcquisitionScore(doc_id=doc_id, strategy="random", value=float(len(shuffled) - i))
            for i, doc_id in enumerate(shuffled)
        ]
    if strategy == "idds":
        if store is None:
            raise ValidationError("idds strategy needs an embedding store")
        pool_ids = list(initial_pool) if cfg.idds.freeze_pool else candidates
        return idds_scores(candidates, pool_ids, list(state.labeled_ids), store, cfg.idds)
    if strategy == "mmr":
        if store is None:
            raise ValidationError("mmr strategy needs an embedding store")
        uncert = {
            doc_id: nsp(generator.generate(pool_corpus.get(doc_id).doc))
            for doc_id in candidates
        }
        return mmr_scores(candidates, list(state.labeled_ids), store, uncert, cfg.mmr)
    if strategy in UNCERTAINTY_STRATEGIES:
        bundles = [generator.generate(pool_corpus.get(doc_id).doc) for doc_id in candidates]
        return score_pool(strategy, bundles)
    raise ValidationError(f"unknown strategy {strategy!r}")


def _check_replay_coverage(generator: Generator, pool: Corpus, test: Corpus) -> None:
    if not isinstance(generator, ReplayGenerator):
        return
    covered = generator.coverage()
    for corpus in (pool, test):
        for ex in corpus:
            if ex.doc.id not in covered:
                raise CoverageError(
                    f"record file does not cover doc {ex.doc.id!r}", doc_id=ex.doc.id
                )


def run_simulation(
    corpus: Corpus,
    test: Corpus,
    store: EmbeddingStore | None,
    generator: Generator,
    cfg: ALConfig,
    artifacts_dir: str | Path | None = None,
) -> RunReport:
    """Execute one full emulated annotation run and return its report.

    The pool corpus is deduplicated first. Every pool and test example must
    carry a gold summary (emulation 'annotates' with gold). When a
    self-learning config and an artifacts directory are both given, each
    iteration writes the filtered, augmented corpus for that iteration.
    """
    t_start = time.perf_counter()
    pool = deduplicate(corpus)
    if len(pool) == 0:
        raise ValidationError("pool corpus is empty")
    for ex in pool:
        if not ex.has_summary():
            raise ValidationError(
                f"simulation requires gold summaries; doc {ex.doc.id!r} has none"
            )
    for ex in test:
        if not ex.has_summary():
            raise ValidationError(
                f"test set requires gold summaries; doc {ex.doc.id!r} has none"
            )
    if cfg.strategy in ("idds", "mmr"):
        if store is None:
            raise ValidationError(f"strategy {cfg.strategy} needs embeddings")
        for doc_id in pool.ids():
            if doc_id not in store:
                raise CoverageError(
                    f"embeddings do not cover doc {doc_id!r}", doc_id=doc_id
                )
    _check_replay_coverage(generator, pool, test)
    if artifacts_dir is not None:
        artifacts_dir = Path(artifacts_dir)
        artifacts_dir.mkdir(parents=True, exist_ok=True)

    timing = {"seed": 0.0, "score": 0.0, "evaluate": 0.0, "selflearn": 0.0}
    rng = Xoshiro256(cfg.rng_seed)

    t0 = time.perf_counter()
    state = seed_labeled(pool.ids(), cfg, rng)
    initial_pool = state.unlabeled_ids
    timing["seed"] = time.perf_counter() - t0

    reports = []
    for t in range(1, cfg.iterations + 1):
        generator.update_labeled(list(state.labeled_ids))

        t0 = time.perf_counter()
        candidates = candidate_subset(state, cfg, rng)
        scores = (
            _score_candidates(
                candidates, state, initial_pool, pool, store, generator, cfg, rng
            )
            if candidates
            else []
        )
        query = select_query(scores, cfg.query_size)
        timing["score"] += time.perf_counter() - t0

        query_set = set(query)
        state = ALState(
            labeled_ids=state.labeled_ids + tuple(query),
            unlabeled_ids=tuple(x for x in state.unlabeled_ids if x not in query_set),
            iteration=t,
        )
        full_pct, partial_pct = batch_overlap(query, pool) if query else (0.0, 0.0)

        if cfg.selflearn is not None and artifacts_dir is not None:
            t0 = time.perf_counter()
            _emit_selflearn_corpus(pool, state, generator, cfg.selflearn, artifacts_dir, t)
            timing["selflearn"] += time.perf_counter() - t0

        t0 = time.perf_counter()
        metric_means = evaluate(generator, test, cfg.eval_metrics)
        timing["evaluate"] += time.perf_counter() - t0

        reports.append(
            IterationReport(
                iteration=t,
                query_ids=tuple(query),
                labeled_count=len(state.labeled_ids),
                metrics=metric_means,
                overlap_full_pct=full_pct,
                overlap_partial_pct=partial_pct,
            )
        )

    timing["total"] = time.perf_counter() - t_start
    return RunReport(
        config=cfg.to_dict(), iterations=tuple(reports), wall_time_s=timing
    )


def _emit_selflearn_corpus(
    pool: Corpus,
    state: ALState,
    generator: Generator,
    cfg: SelfLearnConfig,
    artifacts_dir: Path,
    iteration: int,
) -> None:
    """Pseudo-label the remaining pool, filter by score percentile, write the corpus."""
    pseudo = []
    for doc_id in state.unlabeled_ids:
        bundle = generator.generate(pool.get(doc_id).doc)
        pseudo.append(
            PseudoExample(
                doc_id=doc_id,
                summary_tokens=bundle.greedy.tokens,
                nsp_score=nsp(bundle),
            )
        )
    kept = filter_pseudo(pseudo, cfg)
    labeled_corpus = Corpus(
        examples=tuple(pool.get(doc_id) for doc_id in state.labeled_ids),
        name=pool.name,
    )
    augmented = augment(labeled_corpus, kept, pool)
    save_corpus(augmented, artifacts_dir / f"selflearn_iter{iteration:03d}.jsonl")


def aggregate_runs(reports: list[RunReport]) -> dict:
    """Per-iteration mean and population std of each metric across runs."""
    if not reports:
        raise ValidationError("no run reports to aggregate")
    n_iter = len(reports[0].iterations)
    for rep in reports:
        if len(rep.iterations) != n_iter:
            raise ValidationError(
                f"mismatched iteration counts: {len(rep.iterations)} vs {n_iter}"
            )
    out_iters = []
    for idx in range(n_iter):
        rows = [rep.iterations[idx] for rep in reports]
        counts = {row.labeled_count for row in rows}
        if len(counts) != 1:
            raise ValidationError(
                f"iteration {idx + 1}: labeled counts disagree across runs: {sorted(counts)}"
            )
        metric_names = sorted({m for row in rows for m in row.metrics})
        metrics = {}
        for m in metric_names:
            vals = [row.metrics[m] for row in rows if m in row.metrics]
            if len(vals) != len(rows):
                raise ValidationError(f"iteration {idx + 1}: metric {m!r} missing in some runs")
            metrics[m] = {"mean": _mean(vals), "std": _pop_std(vals)}
        overlap_full = [row.overlap_full_pct for row in rows]
        overlap_partial = [row.overlap_partial_pct for row in rows]
        out_iters.append(
            {
                "iteration": rows[0].iteration,
                "labeled_count": rows[0].labeled_count,
                "metrics": metrics,
                "overlap_full_pct": {
                    "mean": _mean(overlap_full),
                    "std": _pop_std(overlap_full),
                },
                "overlap_partial_pct": {
                    "mean": _mean(overlap_partial),
                    "std": _pop_std(overlap_partial),
                },
            }
        )
    return {"runs": len(reports), "iterations": out_iters}


def _mean(vals: list[float]) -> float:
    return sum(vals) / len(vals)


def _pop_std(vals: list[float]) -> float:
    mu = _mean(vals)
    return math.sqrt(sum((v - mu) ** 2 for v in vals) / len(vals))
