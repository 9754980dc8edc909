"""Metrics and baselines: accuracy, a paired one-tailed t-test, a logistic
classifier over latent-cell features (the route for models without a usable
label axis), and hyperparameter sweeps."""

from __future__ import annotations

import logging
import math
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from xdtc.corpus import Corpus, Domain
from xdtc.inference import Prediction, classify, perplexity
from xdtc.model import ConfigError, Hyperparams, Mode, ModelState, estimate_params
from xdtc.sampler import train

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Accuracy
# ---------------------------------------------------------------------------

def accuracy(preds: list[Prediction], gold: Mapping[str, int]) -> float:
    """Exact-match fraction; every prediction must have a gold label."""
    if not preds:
        raise ValueError("no predictions to score")
    hits = 0
    for p in preds:
        if p.doc_id not in gold:
            raise ValueError(f"no gold label for document {p.doc_id!r}")
        hits += int(p.label == gold[p.doc_id])
    return hits / len(preds)


# ---------------------------------------------------------------------------
# Paired one-tailed t-test (H1: mean(x - y) > 0)
# ---------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 301):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-14:
            return h
    raise RuntimeError("incomplete beta continued fraction did not converge")


def _betainc_reg(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
             + a * math.log(x) + b * math.log1p(-x))
    bt = math.exp(ln_bt)
    if x < (a + 1.0) / (a + b + 2.0):
        return bt * _betacf(a, b, x) / a
    return 1.0 - bt * _betacf(b, a, 1.0 - x) / b


def _student_t_sf(t: float, df: int) -> float:
    """P(T_df > t) via the regularized incomplete beta."""
    x = df / (df + t * t)
    tail = 0.5 * _betainc_reg(0.5 * df, 0.5, x)
    return tail if t > 0 else 1.0 - tail


def paired_t_test(x, y) -> float:
    """One-tailed paired t-test p-value for H1: mean(x - y) > 0."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("series must be one-dimensional and equally long")
    n = x.size
    if n < 2:
        raise ValueError("need at least two pairs")
    diff = x - y
    sd = float(diff.std(ddof=1))
    if sd == 0.0:
        raise ValueError("degenerate input: differences have zero variance")
    t = float(diff.mean()) / (sd / math.sqrt(n))
    return _student_t_sf(t, n - 1)


# ---------------------------------------------------------------------------
# Latent-cell features and the logistic classifier
# ---------------------------------------------------------------------------

@dataclass
class FeatureMatrix:
    """One row per document (corpus order), rows sum to 1.

    counts encoding: normalized per-document latent-cell counts, cells
    ordered label-major with common topics before specific ones (specific
    axis zero-padded to the wider domain).  Models without a label axis get
    one cell per shared topic.  theta encoding: the concatenated posterior
    topic mixtures, renormalized to sum to 1.
    """
    matrix: np.ndarray
    encoding: str
    mode: Mode


def extract_features(state: ModelState, encoding: str = "counts") -> FeatureMatrix:
    c = state.counts
    if encoding == "counts":
        if state.hp.mode == Mode.CCLDA:
            raw = (c.n_zc[:, 0] + c.n_zs[:, 0]).astype(np.float64)
        else:
            raw = np.concatenate([c.n_zc, c.n_zs], axis=2).reshape(state.corpus.n_docs, -1)
            raw = raw.astype(np.float64)
    elif encoding == "theta":
        params = estimate_params(state)
        if state.hp.mode == Mode.CCLDA:
            raw = params.theta_common[:, 0].copy()
        else:
            raw = np.concatenate([params.theta_common, params.theta_spec],
                                 axis=2).reshape(state.corpus.n_docs, -1)
    else:
        raise ValueError(f"unknown encoding {encoding!r}")
    sums = raw.sum(axis=1, keepdims=True)
    # corpus construction drops empty documents; guard keeps rows stochastic
    empty = sums[:, 0] == 0
    if np.any(empty):
        raw[empty] = 1.0
        sums = raw.sum(axis=1, keepdims=True)
    return FeatureMatrix(matrix=raw / sums, encoding=encoding, mode=state.hp.mode)


@dataclass
class LogisticModel:
    classes: np.ndarray     # label ids, ascending
    weights: np.ndarray     # (1 + n_features, n_classes); row 0 is the intercept
    loss_trace: list[float]
    n_iter: int
    converged: bool


def _design(features: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((features.shape[0], 1)), features])


def logistic_loss_grad(weights: np.ndarray, features: np.ndarray,
                       label_idx: np.ndarray, l2: float = 1.0):
    """Mean negative log-likelihood of multinomial softmax regression plus an
    L2 penalty (intercept excluded), and its exact gradient in the weights."""
    design = _design(features)
    n = design.shape[0]
    logits = design @ weights
    logits -= logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(logits).sum(axis=1))
    log_p = logits - log_norm[:, None]
    penalized = weights.copy()
    penalized[0] = 0.0
    loss = -log_p[np.arange(n), label_idx].mean() + l2 / (2 * n) * np.sum(penalized ** 2)
    resid = np.exp(log_p)
    resid[np.arange(n), label_idx] -= 1.0
    grad = design.T @ resid / n + (l2 / n) * penalized
    return loss, grad


def train_logistic(features: np.ndarray, labels, *, l2: float = 1.0,
                   tol: float = 1e-6, max_iter: int = 5000) -> LogisticModel:
    """Full-batch gradient descent with backtracking line search; zero
    initialization makes the fit deterministic."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels)
    classes = np.unique(labels)
    if classes.size < 2:
        raise ValueError("need at least two classes to train a classifier")
    label_idx = np.searchsorted(classes, labels)
    weights = np.zeros((features.shape[1] + 1, classes.size))

    step = 1.0
    trace: list[float] = []
    converged = False
    loss, grad = logistic_loss_grad(weights, features, label_idx, l2)
    trace.append(loss)
    it = 0
    for it in range(1, max_iter + 1):
        if np.max(np.abs(grad)) < tol:
            converged = True
            break
        g_sq = float(np.sum(grad ** 2))
        accepted = False
        while step > 1e-16:
            candidate = weights - step * grad
            new_loss, new_grad = logistic_loss_grad(candidate, features, label_idx, l2)
            if new_loss <= loss - 1e-4 * step * g_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break  # step underflow: no descent possible at float precision
        weights, loss, grad = candidate, new_loss, new_grad
        trace.append(loss)
        step = min(step * 2.0, 1e4)
    return LogisticModel(classes=classes, weights=weights, loss_trace=trace,
                         n_iter=it, converged=converged)


def logistic_scores(model: LogisticModel, features: np.ndarray) -> np.ndarray:
    """Class probabilities, one row per input row."""
    logits = _design(np.asarray(features, dtype=np.float64)) @ model.weights
    logits -= logits.max(axis=1, keepdims=True)
    p = np.exp(logits)
    return p / p.sum(axis=1, keepdims=True)


def predict_logistic(model: LogisticModel, features: np.ndarray) -> np.ndarray:
    """Predicted label ids (argmax of the class probabilities)."""
    return model.classes[np.argmax(logistic_scores(model, features), axis=1)]


def feature_classify(state: ModelState, corpus: Corpus,
                     encoding: str = "counts", l2: float = 1.0) -> list[Prediction]:
    """Source-trained logistic classifier applied to target documents.

    The classification route for models whose group axis does not name the
    labels (unsupervised and exact-alignment training).
    """
    fm = extract_features(state, encoding)
    src = [i for i, d in enumerate(corpus.documents) if d.domain == Domain.SOURCE]
    tgt = [i for i, d in enumerate(corpus.documents) if d.domain == Domain.TARGET]
    gold = [corpus.documents[i].gold_label for i in src]
    if any(g is None for g in gold):
        raise ValueError("every source document needs a gold label")
    model = train_logistic(fm.matrix[src], np.array(gold), l2=l2)
    scores = logistic_scores(model, fm.matrix[tgt])
    preds = []
    for row, i in enumerate(tgt):
        full = np.zeros(corpus.n_labels)
        full[model.classes] = scores[row]
        preds.append(Prediction(corpus.documents[i].doc_id, int(np.argmax(full)), full))
    return preds


# ---------------------------------------------------------------------------
# Run scoring and hyperparameter sweeps
# ---------------------------------------------------------------------------

def score_run(corpus: Corpus, state: ModelState, params) -> tuple[float, float]:
    """(target accuracy, target perplexity) of one trained run.

    Supervised models are scored by their group mixtures; other modes go
    through the feature classifier.  Accuracy is NaN when the target has no
    gold labels to score against.
    """
    perp = perplexity(params, corpus, "target")
    tgt_gold = {d.doc_id: d.gold_label for d in corpus.documents
                if d.domain == Domain.TARGET}
    if not tgt_gold or any(v is None for v in tgt_gold.values()):
        return float("nan"), perp
    if state.hp.mode == Mode.SUPERVISED:
        preds = classify(params, corpus)
    else:
        preds = feature_classify(state, corpus)
    return accuracy(preds, tgt_gold), perp


@dataclass
class SweepGrid:
    axes: dict[str, list]        # parameter name -> values
    tasks: list[tuple[str, Corpus]]
    seeds: list[int]

    _AXIS_NAMES = ("mode", "alpha", "beta", "gamma", "eta",
                   "t_common", "t_spec_src", "t_spec_tgt",
                   "iterations", "burn_in", "sample_lag")

    def validate(self):
        for name, values in self.axes.items():
            if name not in self._AXIS_NAMES:
                raise ConfigError(f"unknown sweep axis {name!r}")
            if not values:
                raise ConfigError(f"sweep axis {name!r} has no values")
        if not self.tasks:
            raise ConfigError("sweep needs at least one task")
        if not self.seeds:
            raise ConfigError("sweep needs at least one seed")
        return self

    def cells(self) -> list[dict]:
        """Cartesian product of the axes as override dicts, in axis order."""
        out = [{}]
        for name, values in self.axes.items():
            out = [{**cell, name: v} for cell in out for v in values]
        return out

    @property
    def size(self) -> int:
        return len(self.tasks) * len(self.cells()) * len(self.seeds)


def _cell_hyperparams(base: Hyperparams, corpus: Corpus, cell: dict, seed: int) -> Hyperparams:
    overrides = dict(cell)
    mode = Mode(overrides.pop("mode", base.mode))
    t_spec = [base.t_specific[0], base.t_specific[1]]
    if "t_spec_src" in overrides:
        t_spec[0] = int(overrides.pop("t_spec_src"))
    if "t_spec_tgt" in overrides:
        t_spec[1] = int(overrides.pop("t_spec_tgt"))
    hp = replace(base, mode=mode, t_specific=(t_spec[0], t_spec[1]),
                 n_labels=corpus.n_labels, seed=seed, **overrides)
    return hp.validate()


def _run_cell(task_name: str, corpus: Corpus, hp: Hyperparams) -> dict:
    t0 = time.perf_counter()
    state, params = train(corpus, hp)
    acc, perp = score_run(corpus, state, params)
    return {
        "task": task_name, "mode": hp.mode.value,
        "alpha": hp.alpha, "beta": hp.beta, "gamma": hp.gamma, "eta": hp.eta,
        "t_common": hp.t_common,
        "t_spec_src": hp.t_specific[0], "t_spec_tgt": hp.t_specific[1],
        "seed": hp.seed, "accuracy": acc, "perplexity_tgt": perp,
        "wall_seconds": time.perf_counter() - t0,
    }


SWEEP_COLUMNS = ("task", "mode", "alpha", "beta", "gamma", "eta", "t_common",
                 "t_spec_src", "t_spec_tgt", "seed", "accuracy",
                 "perplexity_tgt", "wall_seconds")


def run_sweep(grid: SweepGrid, base: Hyperparams | None = None,
              jobs: int = 1) -> list[dict]:
    """Train and score every task x cell x seed; one long-format row each.

    Failures are recorded as NaN metrics with a warning, never fatal, and no
    winner is picked here: selection criteria belong to the caller.
    """
    grid.validate()
    base = base or Hyperparams()
    cells = grid.cells()
    log.info("sweep grid: %d tasks x %d cells x %d seeds = %d runs",
             len(grid.tasks), len(cells), len(grid.seeds), grid.size)

    jobs_spec = []
    for task_name, corpus in grid.tasks:
        for cell in cells:
            for seed in grid.seeds:
                jobs_spec.append((task_name, corpus, cell, seed))

    def fallback_row(task_name, cell, seed, err) -> dict:
        warnings.warn(f"sweep cell {cell} seed {seed} on {task_name} failed: {err}")
        row = dict.fromkeys(SWEEP_COLUMNS, float("nan"))
        row.update(task=task_name, seed=seed, **cell)
        return row

    rows: list[dict | None] = [None] * len(jobs_spec)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {}
            for k, (task_name, corpus, cell, seed) in enumerate(jobs_spec):
                try:
                    hp = _cell_hyperparams(base, corpus, cell, seed)
                except Exception as err:
                    rows[k] = fallback_row(task_name, cell, seed, err)
                    continue
                futures[pool.submit(_run_cell, task_name, corpus, hp)] = k
            for fut, k in futures.items():
                task_name, corpus, cell, seed = jobs_spec[k]
                try:
                    rows[k] = fut.result()
                except Exception as err:
                    rows[k] = fallback_row(task_name, cell, seed, err)
    else:
        for k, (task_name, corpus, cell, seed) in enumerate(jobs_spec):
            try:
                hp = _cell_hyperparams(base, corpus, cell, seed)
                rows[k] = _run_cell(task_name, corpus, hp)
            except Exception as err:
                rows[k] = fallback_row(task_name, cell, seed, err)
    return rows
