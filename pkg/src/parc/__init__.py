"""parc: cross-lingual retrieval-augmented cloze classification.

Classify low-resource-language text with a multilingual masked LM and no
task-specific training: retrieve semantically similar high-resource examples,
render them as filled-in cloze patterns in front of the input's own cloze
prompt, and pick the label whose verbalizer word the model ranks highest.

The package also ships the companion analyses: typological language
similarity (with kNN imputation and batch min-max scaling) and
correlation studies between similarity and transfer accuracy, plus a
deterministic experiment harness and reference tables to check against.
"""

from .corpus import (
    Corpus,
    Label,
    PatternTemplate,
    Sample,
    TaskSpec,
    dump_corpus,
    load_corpus,
    load_task,
    validate_task,
)
from .correlation import (
    CorrelationResult,
    pearson,
    reproduce_reference_correlations,
    spearman,
)
from .embeddings import (
    EmbeddingIndex,
    build_index,
    load_index,
    load_tsv,
    normalize,
    save_index,
)
from .errors import BackendError, ConfigError, DataError, ParcError
from .evaluation import (
    ExperimentConfig,
    ResultTable,
    accuracy,
    load_experiment_config,
    majority_baseline,
    render_overview,
    round1,
    run_experiment,
)
from .fixtures import ReferenceFixture, load_fixture
from .langsim import (
    FEATURES,
    LanguageProfile,
    SimilarityReport,
    batch_similarity,
    impute_missing,
    is_low_resource,
    load_profiles,
    pairwise_similarity,
)
from .predict import (
    Prediction,
    Predictor,
    predict_bor,
    predict_conc,
    predict_direct,
    predict_label,
    self_predict,
)
from .prompts import AssembledPrompt, apply_pattern, assemble_prompt, build_context
from .protocol import check_scorer_service
from .retrieval import RetrievalHit, cosine, random_retrieve, retrieve_top_k
from .scoring import (
    CachingScorer,
    FixtureBackend,
    HttpBackend,
    ScoreVector,
    ScorerBackend,
)

__version__ = "0.1.0"

__all__ = [
    "AssembledPrompt",
    "BackendError",
    "CachingScorer",
    "ConfigError",
    "Corpus",
    "CorrelationResult",
    "DataError",
    "EmbeddingIndex",
    "ExperimentConfig",
    "FEATURES",
    "FixtureBackend",
    "HttpBackend",
    "Label",
    "LanguageProfile",
    "ParcError",
    "PatternTemplate",
    "Prediction",
    "Predictor",
    "ReferenceFixture",
    "ResultTable",
    "RetrievalHit",
    "Sample",
    "ScoreVector",
    "ScorerBackend",
    "SimilarityReport",
    "TaskSpec",
    "accuracy",
    "apply_pattern",
    "assemble_prompt",
    "batch_similarity",
    "build_context",
    "build_index",
    "check_scorer_service",
    "cosine",
    "dump_corpus",
    "impute_missing",
    "is_low_resource",
    "load_corpus",
    "load_experiment_config",
    "load_fixture",
    "load_index",
    "load_profiles",
    "load_task",
    "load_tsv",
    "majority_baseline",
    "normalize",
    "pairwise_similarity",
    "pearson",
    "predict_bor",
    "predict_conc",
    "predict_direct",
    "predict_label",
    "random_retrieve",
    "render_overview",
    "reproduce_reference_correlations",
    "retrieve_top_k",
    "round1",
    "run_experiment",
    "save_index",
    "self_predict",
    "spearman",
    "validate_task",
]
