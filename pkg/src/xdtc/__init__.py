"""Cross-domain text classification via a group-aligned cross-domain topic model.

Trains a collapsed Gibbs sampler jointly over labeled source-domain and
unlabeled target-domain documents, aligns topics at topic-group level, and
emits target-domain labels, perplexities, and topic reports.
"""

__version__ = "0.1.0"

from xdtc.corpus import (
    Corpus,
    Document,
    Domain,
    Vocabulary,
    build_corpus,
    load_corpus,
    merge_datasets,
    save_corpus,
    tokenize,
)
from xdtc.model import (
    CountTables,
    Hyperparams,
    Mode,
    ModelState,
    PosteriorParams,
    average_params,
    estimate_params,
    init_state,
    joint_log_prob,
    rebuild_counts,
)
from xdtc.sampler import conditional, conditional_ccl, gibbs_sweep, train
from xdtc.inference import classify, perplexity, top_words, word_likelihood
from xdtc.evaluation import (
    accuracy,
    extract_features,
    paired_t_test,
    predict_logistic,
    run_sweep,
    train_logistic,
)

__all__ = [
    "Corpus",
    "Document",
    "Domain",
    "Vocabulary",
    "build_corpus",
    "load_corpus",
    "merge_datasets",
    "save_corpus",
    "tokenize",
    "CountTables",
    "Hyperparams",
    "Mode",
    "ModelState",
    "PosteriorParams",
    "average_params",
    "estimate_params",
    "init_state",
    "joint_log_prob",
    "rebuild_counts",
    "conditional",
    "conditional_ccl",
    "gibbs_sweep",
    "train",
    "classify",
    "perplexity",
    "top_words",
    "word_likelihood",
    "accuracy",
    "extract_features",
    "paired_t_test",
    "predict_logistic",
    "run_sweep",
    "train_logistic",
]
