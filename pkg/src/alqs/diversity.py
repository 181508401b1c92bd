"""Diversity-driven acquisition over document embeddings.

The headline strategy scores each candidate by a lambda-weighted difference
between its aggregated similarity to the unlabeled pool (representativeness,
self-similarity included) and its aggregated similarity to the labeled set
(diversity). With dot similarity and average aggregation the pool term
collapses to a single inner product with the pool mean vector, which turns
the O(|U|^2) scoring pass into O(|U| * dim).

The MMR-based baseline trades the pool term for min-max-normalized
uncertainty and penalizes the maximum similarity to any labeled document.
Its exact functional form is a reconstruction from the cited MMR structure,
not a verbatim transcription.

Embedding JSONL format: a header line ``{"dim": D, "count": N}`` followed by
one ``{"id", "vector"}`` object per document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CoverageError, ValidationError
from .uncertainty import AcquisitionScore

SIMILARITY_KINDS = ("dot", "cosine", "euclidean", "mahalanobis")
AGGREGATIONS = ("average", "maximum")

_RIDGE = 1e-6


@dataclass(frozen=True)
class IddsConfig:
    lambda_: float = 0.67
    similarity: str = "dot"
    aggregation: str = "average"
    normalize: bool = False
    freeze_pool: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValidationError(f"lambda must be in [0,1], got {self.lambda_}")
        if self.similarity not in SIMILARITY_KINDS:
            raise ValidationError(f"unknown similarity {self.similarity!r}")
        if self.aggregation not in AGGREGATIONS:
            raise ValidationError(f"unknown aggregation {self.aggregation!r}")


@dataclass(frozen=True)
class MmrConfig:
    lambda_: float = 0.5
    similarity: str = "dot"

    def __post_init__(self):
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValidationError(f"lambda must be in [0,1], got {self.lambda_}")
        if self.similarity not in SIMILARITY_KINDS:
            raise ValidationError(f"unknown similarity {self.similarity!r}")


class EmbeddingStore:
    """Fixed-dimension vectors keyed by doc id."""

    def __init__(self, dim: int):
        if dim < 1:
            raise ValidationError(f"embedding dim must be >= 1, got {dim}")
        self.dim = dim
        self._entries: dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._entries

    def ids(self) -> list[str]:
        return list(self._entries)

    def add(self, doc_id: str, vector) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if vec.shape != (self.dim,):
            raise ValidationError(
                f"vector for {doc_id!r} has shape {vec.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(vec)):
            raise ValidationError(f"vector for {doc_id!r} has non-finite components")
        if doc_id in self._entries:
            raise ValidationError(f"duplicate embedding for doc {doc_id!r}")
        self._entries[doc_id] = vec

    def get(self, doc_id: str) -> np.ndarray:
        vec = self._entries.get(doc_id)
        if vec is None:
            raise CoverageError(f"missing embedding for doc {doc_id!r}", doc_id=doc_id)
        return vec

    def matrix(self, ids: list[str]) -> np.ndarray:
        """Stack vectors for ids into an (n, dim) array, erroring on the first miss."""
        out = np.empty((len(ids), self.dim), dtype=np.float64)
        for i, doc_id in enumerate(ids):
            out[i] = self.get(doc_id)
        return out


def load_embeddings(path: str | Path) -> EmbeddingStore:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"embedding file not found: {path}")
    store = None
    expected = None
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"parse error at line {lineno}: {exc.msg}") from exc
            if store is None:
                if "dim" not in rec or "count" not in rec:
                    raise ValidationError(
                        "first line must be a header object with 'dim' and 'count'"
                    )
                store = EmbeddingStore(dim=int(rec["dim"]))
                expected = int(rec["count"])
                continue
            if "id" not in rec or "vector" not in rec:
                raise ValidationError(f"line {lineno}: expected fields 'id' and 'vector'")
            try:
                store.add(rec["id"], rec["vector"])
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
    if store is None:
        raise ValidationError(f"embedding file {path} is empty (no header)")
    if len(store) != expected:
        raise ValidationError(
            f"header count {expected} does not match {len(store)} vectors"
        )
    return store


def save_embeddings(store: EmbeddingStore, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"dim": store.dim, "count": len(store)}) + "\n")
        for doc_id in store.ids():
            vec = store.get(doc_id)
            fh.write(json.dumps({"id": doc_id, "vector": vec.tolist()}) + "\n")


def _unit_rows(mat: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    safe = np.where(norms == 0.0, 1.0, norms)
    return mat / safe


def _pool_inverse_covariance(pool: np.ndarray) -> np.ndarray:
    n, dim = pool.shape
    if n < dim + 1:
        raise ValidationError(
            f"mahalanobis needs at least dim+1={dim + 1} pool vectors, got {n}"
        )
    cov = np.cov(pool, rowvar=False) + _RIDGE * np.eye(dim)
    try:
        return np.linalg.inv(cov)
    except np.linalg.LinAlgError as exc:
        raise ValidationError(f"pool covariance is singular: {exc}") from exc


def _sim_matrix(a: np.ndarray, b: np.ndarray, kind: str, vi: np.ndarray | None = None) -> np.ndarray:
    """Pairwise similarities, shape (len(a), len(b)); higher = more similar."""
    if kind == "dot":
        return a @ b.T
    if kind == "cosine":
        return _unit_rows(a) @ _unit_rows(b).T
    if kind == "euclidean":
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return -np.sqrt(np.maximum(sq, 0.0))
    if kind == "mahalanobis":
        av = a @ vi
        bv = b @ vi
        sq = (
            np.sum(av * a, axis=1)[:, None]
            + np.sum(bv * b, axis=1)[None, :]
            - 2.0 * (av @ b.T)
        )
        return -np.sqrt(np.maximum(sq, 0.0))
    raise ValidationError(f"unknown similarity {kind!r}")


def similarity(a, b, kind: str = "dot", pool: np.ndarray | None = None) -> float:
    """Similarity between two vectors; distances are negated so higher is closer.

    Mahalanobis needs ``pool``, the (n, dim) matrix whose ridge-regularized
    sample covariance defines the metric.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape or av.ndim != 1:
        raise ValidationError(f"dimension mismatch: {av.shape} vs {bv.shape}")
    vi = None
    if kind == "mahalanobis":
        if pool is None:
            raise ValidationError("mahalanobis similarity needs the pool matrix")
        vi = _pool_inverse_covariance(np.asarray(pool, dtype=np.float64))
    return float(_sim_matrix(av[None, :], bv[None, :], kind, vi)[0, 0])


def pool_mean_vector(unlabeled: list[str], store: EmbeddingStore) -> np.ndarray:
    """Component-wise mean of the pool's vectors (dot-similarity fast path)."""
    if not unlabeled:
        raise ValidationError("pool is empty")
    return store.matrix(unlabeled).mean(axis=0)


def _aggregate(sim: np.ndarray, aggregation: str) -> np.ndarray:
    if aggregation == "average":
        return sim.mean(axis=1)
    return sim.max(axis=1)


def idds_scores(
    candidates: list[str],
    unlabeled: list[str],
    labeled: list[str],
    store: EmbeddingStore,
    cfg: IddsConfig,
) -> list[AcquisitionScore]:
    """Lambda-weighted pool-similarity minus labeled-similarity per candidate.

    The candidate's own vector participates in the pool aggregate. An empty
    labeled set contributes 0, which is what makes the strategy usable from a
    cold start with no seed annotation.
    """
    if not unlabeled:
        raise ValidationError("unlabeled pool is empty")
    unlabeled_set = set(unlabeled)
    for doc_id in candidates:
        if doc_id not in unlabeled_set:
            raise ValidationError(
                f"candidate {doc_id!r} is not in the unlabeled pool"
            )
    cand = store.matrix(candidates)
    pool = store.matrix(unlabeled)
    lab = store.matrix(labeled) if labeled else None
    if cfg.normalize:
        cand = _unit_rows(cand)
        pool = _unit_rows(pool)
        lab = _unit_rows(lab) if lab is not None else None

    vi = None
    if cfg.similarity == "mahalanobis":
        vi = _pool_inverse_covariance(pool)

    if cfg.similarity == "dot" and cfg.aggregation == "average":
        pool_term = cand @ pool.mean(axis=0)  # bilinearity fast path
    else:
        pool_term = _aggregate(_sim_matrix(cand, pool, cfg.similarity, vi), cfg.aggregation)

    if lab is None or len(labeled) == 0:
        labeled_term = np.zeros(len(candidates))
    else:
        labeled_term = _aggregate(_sim_matrix(cand, lab, cfg.similarity, vi), cfg.aggregation)

    values = cfg.lambda_ * pool_term - (1.0 - cfg.lambda_) * labeled_term
    return [
        AcquisitionScore(doc_id=doc_id, strategy="idds", value=float(v))
        for doc_id, v in zip(candidates, values)
    ]


def _min_max(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def mmr_scores(
    candidates: list[str],
    labeled: list[str],
    store: EmbeddingStore,
    uncertainty: dict[str, float],
    cfg: MmrConfig,
) -> list[AcquisitionScore]:
    """Normalized uncertainty traded against max similarity to the labeled set."""
    if not candidates:
        return []
    unc = np.empty(len(candidates))
    for i, doc_id in enumerate(candidates):
        if doc_id not in uncertainty:
            raise CoverageError(
                f"missing uncertainty value for doc {doc_id!r}", doc_id=doc_id
            )
        unc[i] = uncertainty[doc_id]
    unc_hat = _min_max(unc)

    if labeled:
        cand = store.matrix(candidates)
        lab = store.matrix(labeled)
        vi = None
        if cfg.similarity == "mahalanobis":
            vi = _pool_inverse_covariance(cand)
        sim = _sim_matrix(cand, lab, cfg.similarity, vi)
        sim_hat = _min_max(sim.reshape(-1)).reshape(sim.shape)
        penalty = sim_hat.max(axis=1)
    else:
        penalty = np.zeros(len(candidates))

    values = cfg.lambda_ * unc_hat - (1.0 - cfg.lambda_) * penalty
    return [
        AcquisitionScore(doc_id=doc_id, strategy="mmr", value=float(v))
        for doc_id, v in zip(candidates, values)
    ]
