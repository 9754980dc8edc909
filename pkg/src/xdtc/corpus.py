"""Corpus ingestion: tokenization, vocabulary construction, document encoding.

Raw datasets enter either as canonical TSV files (one document per line:
``doc_id<TAB>label_name<TAB>raw text``, target files may carry ``-`` as the
label) or as a directory tree in the ``<label>/<file>`` layout.  Documents are
lowercased, tokenized on non-letter characters, stopword-filtered, and encoded
against a single vocabulary shared by both domains.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from xdtc.stopwords import ENGLISH_STOPWORDS

log = logging.getLogger(__name__)

CORPUS_MAGIC = "XDTC1"

_TOKEN_RE = re.compile(r"[a-z]+")


class CorpusError(Exception):
    """Invalid corpus input (missing file, malformed line, bad labels)."""


class Domain(IntEnum):
    SOURCE = 0
    TARGET = 1


@dataclass
class Vocabulary:
    """Bijective word <-> id map; ids are dense in [0, size)."""

    id_to_word: list[str]
    word_to_id: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        self.word_to_id = {w: i for i, w in enumerate(self.id_to_word)}
        if len(self.word_to_id) != len(self.id_to_word):
            raise CorpusError("duplicate words in vocabulary")

    @property
    def size(self) -> int:
        return len(self.id_to_word)

    def encode(self, tokens) -> np.ndarray:
        """Map tokens to ids, silently dropping out-of-vocabulary tokens."""
        ids = [self.word_to_id[t] for t in tokens if t in self.word_to_id]
        return np.asarray(ids, dtype=np.int32)

    def decode(self, ids) -> list[str]:
        return [self.id_to_word[i] for i in ids]


@dataclass
class Document:
    doc_id: str
    domain: Domain
    tokens: np.ndarray  # int32 word ids
    gold_label: int | None = None  # held out for target docs; never fed to the sampler


@dataclass
class Corpus:
    """Immutable-by-contract container of encoded documents from both domains."""

    documents: list[Document]
    vocabulary: Vocabulary
    label_names: list[str]

    @property
    def n_labels(self) -> int:
        return len(self.label_names)

    @property
    def n_docs(self) -> int:
        return len(self.documents)

    def docs_in(self, domain: Domain) -> list[Document]:
        return [d for d in self.documents if d.domain == domain]


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-letters; drop stopwords and 1-char tokens."""
    return [
        t
        for t in _TOKEN_RE.findall(text.lower())
        if len(t) >= 2 and t not in ENGLISH_STOPWORDS
    ]


def strip_message_headers(text: str) -> str:
    """Drop an RFC-822-style header block (everything before the first blank line).

    Newsgroup posts carry headers whose fields leak the category; results are
    sensitive to whether they were stripped, so this is exposed as an option.
    """
    for sep in ("\n\n", "\r\n\r\n"):
        idx = text.find(sep)
        if idx != -1:
            return text[idx + len(sep):]
    return text


def _read_canonical_file(path: Path, domain: Domain, strip_headers: bool):
    """Yield (doc_id, label_name or None, raw_text) from a canonical TSV file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3:
                raise CorpusError(
                    f"{path}: malformed line {lineno}: expected "
                    f"doc_id<TAB>label<TAB>text, got {len(parts)} field(s)"
                )
            doc_id, label_name, text = parts
            if strip_headers:
                text = strip_message_headers(text)
            yield doc_id, (None if label_name == "-" else label_name), text


def _read_directory(path: Path, strip_headers: bool):
    """Yield documents from a ``<label>/<file>`` tree, sorted for determinism."""
    for label_dir in sorted(p for p in path.iterdir() if p.is_dir()):
        for f in sorted(p for p in label_dir.iterdir() if p.is_file()):
            text = f.read_text(encoding="utf-8", errors="replace")
            if strip_headers:
                text = strip_message_headers(text)
            yield f"{label_dir.name}/{f.name}", label_dir.name, text


def _read_raw(path, domain: Domain, strip_headers: bool):
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file or directory: {path}")
    if path.is_dir():
        return list(_read_directory(path, strip_headers))
    return list(_read_canonical_file(path, domain, strip_headers))


def build_corpus(source_path, target_path, min_df: int = 3,
                 strip_headers: bool = False) -> Corpus:
    """Ingest both domains, build the shared vocabulary, and encode documents.

    The vocabulary keeps exactly the tokens whose document frequency across
    the union of both domains is >= ``min_df``.  Source documents must carry a
    label; documents emptied by preprocessing are dropped with a warning.
    """
    raw = []  # (doc_id, domain, label_name, tokens)
    for domain, path in ((Domain.SOURCE, source_path), (Domain.TARGET, target_path)):
        for doc_id, label_name, text in _read_raw(path, domain, strip_headers):
            if domain == Domain.SOURCE and label_name is None:
                raise CorpusError(f"source document {doc_id!r} missing label")
            raw.append((doc_id, domain, label_name, tokenize(text)))

    if not any(dom == Domain.SOURCE for _, dom, _, _ in raw):
        raise CorpusError("no source documents")
    if not any(dom == Domain.TARGET for _, dom, _, _ in raw):
        raise CorpusError("no target documents")

    df: dict[str, int] = {}
    for _, _, _, tokens in raw:
        for t in set(tokens):
            df[t] = df.get(t, 0) + 1
    kept = sorted(t for t, n in df.items() if n >= min_df)
    if not kept:
        raise CorpusError(f"empty vocabulary at min_df={min_df}")
    vocab = Vocabulary(kept)

    label_names = sorted({name for _, _, name, _ in raw if name is not None})
    label_ids = {name: i for i, name in enumerate(label_names)}

    documents = []
    n_dropped = 0
    for doc_id, domain, label_name, tokens in raw:
        ids = vocab.encode(tokens)
        if ids.size == 0:
            n_dropped += 1
            log.warning("dropping %s: no tokens survive preprocessing", doc_id)
            continue
        gold = label_ids[label_name] if label_name is not None else None
        documents.append(Document(doc_id, domain, ids, gold))
    if n_dropped:
        log.warning("dropped %d empty document(s)", n_dropped)

    corpus = Corpus(documents, vocab, label_names)
    _check_nonempty_domains(corpus)
    return corpus


def _check_nonempty_domains(corpus: Corpus):
    if not corpus.docs_in(Domain.SOURCE):
        raise CorpusError("no source documents")
    if not corpus.docs_in(Domain.TARGET):
        raise CorpusError("no target documents")


def merge_datasets(a: Corpus, b: Corpus) -> Corpus:
    """Union of two corpora with disjoint label sets (4-class construction).

    Labels of ``b`` are shifted past those of ``a``; the vocabularies are
    unioned and every document is re-encoded, so word ids change but each
    document's token multiset does not.
    """
    overlap = set(a.label_names) & set(b.label_names)
    if overlap:
        raise CorpusError(f"overlapping label names: {sorted(overlap)}")

    vocab = Vocabulary(sorted(set(a.vocabulary.id_to_word) | set(b.vocabulary.id_to_word)))
    label_names = list(a.label_names) + list(b.label_names)
    shift = len(a.label_names)

    documents = []
    for src, offset in ((a, 0), (b, shift)):
        for doc in src.documents:
            words = src.vocabulary.decode(doc.tokens)
            gold = None if doc.gold_label is None else doc.gold_label + offset
            documents.append(Document(doc.doc_id, doc.domain, vocab.encode(words), gold))
    return Corpus(documents, vocab, label_names)


def save_corpus(corpus: Corpus, path) -> None:
    """Serialize to the versioned line-oriented format (magic ``XDTC1``)."""
    lines = [CORPUS_MAGIC]
    lines.append(json.dumps(
        {"labels": corpus.label_names,
         "vocab_size": corpus.vocabulary.size,
         "n_docs": corpus.n_docs},
        sort_keys=True))
    lines.extend(corpus.vocabulary.id_to_word)
    for doc in corpus.documents:
        gold = "-" if doc.gold_label is None else str(doc.gold_label)
        dom = "S" if doc.domain == Domain.SOURCE else "T"
        lines.append("\t".join(
            [doc.doc_id, dom, gold, " ".join(map(str, doc.tokens.tolist()))]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_corpus(path) -> Corpus:
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        magic = fh.readline().rstrip("\n")
        if magic != CORPUS_MAGIC:
            raise CorpusError(f"{path}: bad magic {magic!r}, expected {CORPUS_MAGIC!r}")
        header = json.loads(fh.readline())
        vocab = Vocabulary([fh.readline().rstrip("\n") for _ in range(header["vocab_size"])])
        documents = []
        for _ in range(header["n_docs"]):
            doc_id, dom, gold, ids = fh.readline().rstrip("\n").split("\t")
            tokens = np.array(ids.split(), dtype=np.int32)
            documents.append(Document(
                doc_id,
                Domain.SOURCE if dom == "S" else Domain.TARGET,
                tokens,
                None if gold == "-" else int(gold),
            ))
    return Corpus(documents, vocab, header["labels"])


def corpus_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
