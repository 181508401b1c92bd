"""Active-learning query strategies for abstractive summarization."""

from .alsim import (
    ALConfig,
    ALState,
    IterationReport,
    RunReport,
    aggregate_runs,
    batch_overlap,
    candidate_subset,
    evaluate,
    run_simulation,
    seed_labeled,
    select_query,
)
from .corpus import (
    Corpus,
    CorpusStats,
    Document,
    LabeledExample,
    deduplicate,
    filter_by_length,
    load_corpus,
    save_corpus,
    stats,
)
from .diversity import (
    EmbeddingStore,
    IddsConfig,
    MmrConfig,
    idds_scores,
    load_embeddings,
    mmr_scores,
    pool_mean_vector,
    save_embeddings,
    similarity,
)
from .errors import CoverageError, ValidationError
from .generation import (
    GenerationBundle,
    GenerationRecord,
    GeneratorSpec,
    ReplayGenerator,
    ToyGenerator,
    build_generator,
    fnv1a64,
    load_record_file,
    save_record_file,
    toy_generate,
)
from .metrics import PRF, bleu, rouge_l, rouge_n, sacrebleu, tokenize
from .rng import Xoshiro256, splitmix64
from .selflearn import (
    PseudoExample,
    SelfLearnConfig,
    augment,
    filter_pseudo,
    load_pseudo,
    save_pseudo,
)
from .uncertainty import (
    AcquisitionScore,
    bleuvar,
    ensp,
    ensv,
    nsp,
    sacrebleuvar,
    score_pool,
    seq_prob,
)

__version__ = "0.1.0"
