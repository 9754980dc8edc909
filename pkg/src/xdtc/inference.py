"""Decisions from a trained model: target labels, perplexity, topic reports."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from xdtc.corpus import Corpus, Domain, Vocabulary
from xdtc.model import Mode, PosteriorParams

_DOMAIN_SELECTORS = {
    "source": (Domain.SOURCE,),
    "target": (Domain.TARGET,),
    "all": (Domain.SOURCE, Domain.TARGET),
}


@dataclass
class Prediction:
    doc_id: str
    label: int
    scores: np.ndarray  # group mixture over labels, sums to 1


@dataclass
class TopicReport:
    group: int
    topic_type: str          # "common" or "specific"
    domain: Domain | None    # set when topic_type == "specific"
    topic: int
    words: list[tuple[str, float]]  # descending probability


def classify(params: PosteriorParams, corpus: Corpus) -> list[Prediction]:
    """Label every target document with its dominant topic group.

    Score vector is the document's group mixture; ties go to the lowest
    label id.  Requires a model whose groups are the corpus labels.
    """
    if params.mode == Mode.CCLDA:
        raise ValueError(
            "CCLDA carries no label axis; train a classifier on "
            "extract_features output instead (see evaluation module)")
    if params.pi.shape[0] != corpus.n_docs:
        raise ValueError("params were not estimated on this corpus (doc count differs)")
    if params.n_groups != corpus.n_labels:
        raise ValueError(
            f"model has {params.n_groups} groups but corpus has {corpus.n_labels} labels")
    preds = []
    for d, doc in enumerate(corpus.documents):
        if doc.domain != Domain.TARGET:
            continue
        scores = params.pi[d]
        preds.append(Prediction(doc.doc_id, int(np.argmax(scores)), scores.copy()))
    return preds


def word_likelihood(params: PosteriorParams, d: int, v: int) -> float:
    """p(word v | doc d): mixture over groups of the common and the own-domain
    specific topic mixtures, weighted by the switcher probability."""
    m = int(params.doc_domain[d])
    common = np.sum(params.theta_common[d] * params.phi_common[:, :, v], axis=1)
    spec = np.sum(params.theta_spec[d] * params.phi_spec[m, :, :, v], axis=1)
    per_group = (1.0 - params.sigma[d]) * common + params.sigma[d] * spec
    return float(np.dot(params.pi[d], per_group))


def perplexity(params: PosteriorParams, corpus: Corpus, which: str = "target") -> float:
    """Exponentiated negative mean per-word log-likelihood over the selected
    documents.  The normalizer is the word count of exactly the documents
    being summed, which is what makes this a per-word quantity."""
    if which not in _DOMAIN_SELECTORS:
        raise ValueError(f"which must be one of {sorted(_DOMAIN_SELECTORS)}, got {which!r}")
    if params.pi.shape[0] != corpus.n_docs:
        raise ValueError("params were not estimated on this corpus (doc count differs)")
    domains = _DOMAIN_SELECTORS[which]
    total_ll = 0.0
    n_words = 0
    for d, doc in enumerate(corpus.documents):
        if doc.domain not in domains or len(doc.tokens) == 0:
            continue
        m = int(params.doc_domain[d])
        w = doc.tokens
        # per-word p(v|d) for the whole doc at once; padded cells are zero
        pc = np.einsum("gt,gtn->gn", params.theta_common[d], params.phi_common[:, :, w])
        ps = np.einsum("gt,gtn->gn", params.theta_spec[d], params.phi_spec[m][:, :, w])
        per_group = (1.0 - params.sigma[d])[:, None] * pc + params.sigma[d][:, None] * ps
        p = params.pi[d] @ per_group
        total_ll += float(np.log(p).sum())
        n_words += len(w)
    if n_words == 0:
        raise ValueError(f"no {which} words to evaluate")
    return float(np.exp(-total_ll / n_words))


def top_words(params: PosteriorParams, vocab: Vocabulary, group: int,
              topic_type: int, topic: int, k: int,
              domain: Domain | None = None) -> TopicReport:
    """k most probable words of one topic-word distribution, descending,
    ties broken by word id."""
    if not 0 <= group < params.n_groups:
        raise IndexError(f"group {group} out of range")
    if topic_type not in (0, 1):
        raise IndexError("topic_type must be 0 (common) or 1 (specific)")
    if not 0 <= k <= vocab.size:
        raise IndexError(f"k must be in [0, {vocab.size}]")
    if topic_type == 0:
        if not 0 <= topic < params.phi_common.shape[1]:
            raise IndexError(f"common topic {topic} out of range")
        row = params.phi_common[group, topic]
        dom = None
    else:
        if domain is None:
            raise IndexError("specific topics require a domain")
        dom = Domain(domain)
        if not 0 <= topic < params.t_spec[int(dom)]:
            raise IndexError(f"specific topic {topic} out of range for domain {dom.name}")
        row = params.phi_spec[int(dom), group, topic]
    order = np.lexsort((np.arange(vocab.size), -row))[:k]
    words = [(vocab.id_to_word[i], float(row[i])) for i in order]
    return TopicReport(group=group, topic_type="common" if topic_type == 0 else "specific",
                       domain=dom, topic=topic, words=words)
