"""Shared corpus builders for the test suite.

Corpora are built directly from encoded token arrays (no text round trip)
so tests control exact counts.  ``planted_corpus`` draws from the model's
own generative story and backs the ordering tests: blocks of vocabulary
belong to (label, topic) cells, common blocks are shared across domains,
specific blocks are not.
"""

import numpy as np

from xdtc.corpus import Corpus, Document, Domain, Vocabulary
from xdtc.model import joint_log_prob


def make_corpus(docs, vocab_size, n_labels=2):
    """Corpus from (doc_id, domain, token_ids, gold_label) tuples."""
    vocab = Vocabulary([f"w{i}" for i in range(vocab_size)])
    documents = [
        Document(doc_id, domain, np.asarray(toks, dtype=np.int32), gold)
        for doc_id, domain, toks, gold in docs
    ]
    return Corpus(documents, vocab, [f"y{i}" for i in range(n_labels)])


def random_corpus(rng, max_docs=3, max_len=5, vocab_size=5, n_labels=2,
                  target_gold=False):
    """Tiny random instance with at least one document per domain.

    Source documents always carry gold labels (the supervised mode needs
    them); target gold is present only when ``target_gold`` is set, else
    coin-flipped per document.
    """
    n_docs = int(rng.integers(2, max_docs + 1))
    domains = [Domain.SOURCE, Domain.TARGET]
    domains += [Domain(int(rng.integers(2))) for _ in range(n_docs - 2)]
    docs = []
    for i, dom in enumerate(domains):
        n = int(rng.integers(1, max_len + 1))
        toks = rng.integers(0, vocab_size, size=n)
        gold = int(rng.integers(n_labels))
        if dom == Domain.TARGET and not target_gold and rng.random() < 0.5:
            gold = None
        docs.append((f"d{i}", dom, toks, gold))
    return make_corpus(docs, vocab_size, n_labels)


def brute_force_conditional(state, d, t):
    """Exact conditional for token t of doc d at the minus-token state.

    Enumerates every legal (l, r, z): increment, evaluate the full joint,
    decrement, normalize.  Deliberately independent of the sampler's
    count-ratio shortcut; cell order matches the sampler's (label-major,
    common topics before specific).
    """
    i = state.doc_offset[d] + t
    m = int(state.doc_domain[d])
    ts = int(state.t_spec[m])
    fl = int(state.fixed_label[i])
    labels = [fl] if fl >= 0 else list(range(state.n_groups))
    cells, logs = [], []
    for lab in labels:
        for r, support in ((0, state.hp.t_common), (1, ts)):
            for z in range(support):
                state.increment_token(i, lab, r, z)
                logs.append(joint_log_prob(state))
                state.decrement_token(i)
                cells.append((lab, r, z))
    logs = np.asarray(logs)
    p = np.exp(logs - logs.max())
    return cells, p / p.sum()


def planted_corpus(seed, n_labels=2, docs_per_label=25, doc_len=80,
                   t_common=2, t_spec_src=2, t_spec_tgt=2, v_block=10,
                   label_weight=0.9, sigma=0.3, block_purity=0.85):
    """Corpus drawn from the group-aligned generative story.

    Per-(label, common-topic) word blocks are shared across domains,
    per-(domain, label, specific-topic) blocks are not; ``block_purity``
    mixes in uniform noise so the blocks overlap a little.  Every document
    (both domains) carries its planted label as gold, so target accuracy
    is measurable.
    """
    rng = np.random.default_rng(seed)
    blocks = {}
    words = []

    def add_block(key):
        start = len(words)
        words.extend("_".join(map(str, key)) + f"_{i}" for i in range(v_block))
        blocks[key] = (start, start + v_block)

    for g in range(n_labels):
        for c in range(t_common):
            add_block(("c", g, c))
    for m in (0, 1):
        ts = t_spec_src if m == 0 else t_spec_tgt
        for g in range(n_labels):
            for s in range(ts):
                add_block(("s", m, g, s))
    vocab = Vocabulary(words)
    v_size = len(words)

    docs = []
    for m, dom, prefix in ((0, Domain.SOURCE, "s"), (1, Domain.TARGET, "t")):
        ts = t_spec_src if m == 0 else t_spec_tgt
        for y in range(n_labels):
            pi = np.full(n_labels, (1 - label_weight) / max(n_labels - 1, 1))
            pi[y] = label_weight
            for j in range(docs_per_label):
                toks = np.empty(doc_len, np.int32)
                for t in range(doc_len):
                    lab = rng.choice(n_labels, p=pi)
                    if rng.random() < sigma:
                        lo, hi = blocks[("s", m, lab, rng.integers(ts))]
                    else:
                        lo, hi = blocks[("c", lab, rng.integers(t_common))]
                    if rng.random() < block_purity:
                        toks[t] = rng.integers(lo, hi)
                    else:
                        toks[t] = rng.integers(v_size)
                docs.append(Document(f"{prefix}{y}_{j}", dom, toks, y))
    return Corpus(docs, vocab, [f"y{g}" for g in range(n_labels)])
