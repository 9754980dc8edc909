"""Model state: hyperparameters, per-token assignments, count tables.

Every token carries a triple (l, r, z): a topic-group label l, a binary
topic-type switcher r (0 = common topic shared across domains, 1 = specific
topic owned by the token's domain), and a topic index z.  The count tables are
the sufficient statistics of the collapsed model; the joint log-probability
evaluated here is the test oracle the sampler's conditionals are checked
against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
from scipy.special import gammaln

from xdtc.corpus import Corpus, Domain

CHECKPOINT_MAGIC = "XDTCKPT1"
PARAMS_MAGIC = "XDTCPAR1"


class ConfigError(ValueError):
    """Invalid hyperparameter or run configuration."""


class Mode(str, Enum):
    SUPERVISED = "sup"      # source-token group labels fixed to the document label
    UNSUPERVISED = "un"     # group labels sampled everywhere
    CCLDA = "ccl"           # one-to-one topic alignment baseline (no group axis)


@dataclass
class Hyperparams:
    alpha: float = 10.0          # Dirichlet prior for per-doc topic mixtures
    beta: float = 0.1            # Dirichlet prior for topic-word distributions
    gamma: float = 1.0           # Beta prior for the common/specific switcher
    eta: float = 0.01            # Dirichlet prior for per-doc group mixtures
    t_common: int = 6
    t_specific: tuple[int, int] = (6, 6)   # (source, target)
    n_labels: int = 2
    iterations: int = 50
    burn_in: int = 30
    sample_lag: int = 5
    mode: Mode = Mode.SUPERVISED
    seed: int = 0
    random_scan: bool = False

    def validate(self):
        for name in ("alpha", "beta", "gamma", "eta"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be strictly positive")
        if self.t_common < 1:
            raise ConfigError("t_common must be >= 1")
        if len(self.t_specific) != 2 or any(t < 1 for t in self.t_specific):
            raise ConfigError("t_specific must hold one count >= 1 per domain")
        if self.n_labels < 1:
            raise ConfigError("n_labels must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.sample_lag < 1:
            raise ConfigError("sample_lag must be >= 1")
        if self.mode == Mode.CCLDA and any(t != self.t_common for t in self.t_specific):
            raise ConfigError("CCLDA requires t_specific == t_common (one-to-one alignment)")
        return self

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["mode"] = self.mode.value
        d["t_specific"] = list(self.t_specific)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        d["mode"] = Mode(d["mode"])
        d["t_specific"] = tuple(d["t_specific"])
        return cls(**d)


@dataclass
class Assignment:
    label: int       # l
    topic_type: int  # r: 0 common, 1 specific
    topic: int       # z


@dataclass
class CountTables:
    """Sufficient statistics tallied from the assignments.

    Group axis G is the number of topic groups the model carries: 1 in CCLDA
    mode, otherwise the label count L.  Specific-topic axes are padded to the
    larger of the two per-domain topic counts; padded cells stay zero.
    """

    n_w_common: np.ndarray  # (G, Tc, V)  word counts, common topics
    n_common: np.ndarray    # (G, Tc)     totals of the above
    n_w_spec: np.ndarray    # (2, G, Ts_max, V)  word counts, specific topics per domain
    n_spec: np.ndarray      # (2, G, Ts_max)
    n_zc: np.ndarray        # (D, G, Tc)   per-doc common-topic counts
    n_zs: np.ndarray        # (D, G, Ts_max)
    n_rl: np.ndarray        # (D, G, 2)    per-doc type counts
    n_l: np.ndarray         # (D, G)       per-doc group counts
    n_d: np.ndarray         # (D,)         per-doc token counts

    @classmethod
    def zeros(cls, n_docs, n_groups, t_common, ts_max, vocab_size):
        return cls(
            n_w_common=np.zeros((n_groups, t_common, vocab_size), dtype=np.int64),
            n_common=np.zeros((n_groups, t_common), dtype=np.int64),
            n_w_spec=np.zeros((2, n_groups, ts_max, vocab_size), dtype=np.int64),
            n_spec=np.zeros((2, n_groups, ts_max), dtype=np.int64),
            n_zc=np.zeros((n_docs, n_groups, t_common), dtype=np.int64),
            n_zs=np.zeros((n_docs, n_groups, ts_max), dtype=np.int64),
            n_rl=np.zeros((n_docs, n_groups, 2), dtype=np.int64),
            n_l=np.zeros((n_docs, n_groups), dtype=np.int64),
            n_d=np.zeros(n_docs, dtype=np.int64),
        )

    def arrays(self):
        return {name: getattr(self, name) for name in (
            "n_w_common", "n_common", "n_w_spec", "n_spec",
            "n_zc", "n_zs", "n_rl", "n_l", "n_d")}


def counts_equal(a: CountTables, b: CountTables) -> bool:
    return all(np.array_equal(x, b.arrays()[name]) for name, x in a.arrays().items())


class ModelState:
    """Mutable sampler state: flat token arrays, assignments, counts, rng.

    Single-writer: never share mutably across threads.  Independent chains on
    a shared corpus are the unit of parallelism.
    """

    def __init__(self, corpus: Corpus, hp: Hyperparams):
        hp.validate()
        self.corpus = corpus
        self.hp = hp
        self.n_groups = 1 if hp.mode == Mode.CCLDA else hp.n_labels
        self.t_spec = np.array(hp.t_specific, dtype=np.int64)
        self.ts_max = int(self.t_spec.max())

        n_docs = corpus.n_docs
        self.doc_domain = np.array([int(d.domain) for d in corpus.documents], dtype=np.int8)
        lengths = [len(d.tokens) for d in corpus.documents]
        self.doc_offset = np.zeros(n_docs + 1, dtype=np.int64)
        np.cumsum(lengths, out=self.doc_offset[1:])
        self.n_tokens = int(self.doc_offset[-1])

        self.tok_word = np.concatenate(
            [d.tokens for d in corpus.documents]
            if corpus.documents else [np.empty(0, np.int32)]).astype(np.int32)
        self.tok_doc = np.repeat(np.arange(n_docs, dtype=np.int32), lengths)

        # -1 = group label is sampled; otherwise the label is clamped for the run
        self.fixed_label = np.full(self.n_tokens, -1, dtype=np.int32)
        if hp.mode == Mode.SUPERVISED:
            for i, doc in enumerate(corpus.documents):
                if doc.domain == Domain.SOURCE:
                    self.fixed_label[self.doc_offset[i]:self.doc_offset[i + 1]] = doc.gold_label

        self.l = np.zeros(self.n_tokens, dtype=np.int32)
        self.r = np.zeros(self.n_tokens, dtype=np.int32)
        self.z = np.zeros(self.n_tokens, dtype=np.int32)
        self.counts = CountTables.zeros(
            n_docs, self.n_groups, hp.t_common, self.ts_max, corpus.vocabulary.size)
        self.rng = np.random.Generator(np.random.PCG64(hp.seed))

    def assignment(self, d: int, t: int) -> Assignment:
        i = self.doc_offset[d] + t
        return Assignment(int(self.l[i]), int(self.r[i]), int(self.z[i]))

    def decrement_token(self, i: int):
        """Remove token i's assignment from every table (the -t state)."""
        _apply_token(self.counts, self, i, -1)

    def increment_token(self, i: int, l: int, r: int, z: int):
        self.l[i], self.r[i], self.z[i] = l, r, z
        _apply_token(self.counts, self, i, +1)


def _apply_token(c: CountTables, state: ModelState, i: int, delta: int):
    d = state.tok_doc[i]
    w = state.tok_word[i]
    m = state.doc_domain[d]
    l, r, z = state.l[i], state.r[i], state.z[i]
    if r == 0:
        c.n_w_common[l, z, w] += delta
        c.n_common[l, z] += delta
        c.n_zc[d, l, z] += delta
    else:
        c.n_w_spec[m, l, z, w] += delta
        c.n_spec[m, l, z] += delta
        c.n_zs[d, l, z] += delta
    c.n_rl[d, l, r] += delta
    c.n_l[d, l] += delta
    c.n_d[d] += delta


def init_state(corpus: Corpus, hp: Hyperparams) -> ModelState:
    """Random initial assignments; in supervised mode, source-token group
    labels are set to the document's gold label and stay fixed all run."""
    if hp.mode == Mode.SUPERVISED:
        if corpus.n_labels != hp.n_labels:
            raise ConfigError(
                f"corpus has {corpus.n_labels} labels but hyperparams say {hp.n_labels}")
        for doc in corpus.documents:
            if doc.domain == Domain.SOURCE and doc.gold_label is None:
                raise ConfigError(f"source document {doc.doc_id!r} has no label")

    state = ModelState(corpus, hp)
    n = state.n_tokens
    rng = state.rng
    # One uniform per token per variable keeps the stream layout fixed.
    u_l = rng.random(n)
    u_r = rng.random(n)
    u_z = rng.random(n)

    free = state.fixed_label < 0
    state.l = np.where(free, (u_l * state.n_groups).astype(np.int32),
                       state.fixed_label).astype(np.int32)
    state.r = (u_r * 2).astype(np.int32)
    z_support = np.where(state.r == 0, state.hp.t_common,
                         state.t_spec[state.doc_domain[state.tok_doc]])
    state.z = (u_z * z_support).astype(np.int32)
    state.counts = rebuild_counts(state)
    return state


def rebuild_counts(state: ModelState) -> CountTables:
    """Recompute every table from scratch by iterating the assignments."""
    c = CountTables.zeros(state.corpus.n_docs, state.n_groups,
                          state.hp.t_common, state.ts_max,
                          state.corpus.vocabulary.size)
    d = state.tok_doc
    w = state.tok_word
    m = state.doc_domain[d]
    l, r, z = state.l, state.r, state.z
    com, spec = r == 0, r == 1
    np.add.at(c.n_w_common, (l[com], z[com], w[com]), 1)
    np.add.at(c.n_common, (l[com], z[com]), 1)
    np.add.at(c.n_zc, (d[com], l[com], z[com]), 1)
    np.add.at(c.n_w_spec, (m[spec], l[spec], z[spec], w[spec]), 1)
    np.add.at(c.n_spec, (m[spec], l[spec], z[spec]), 1)
    np.add.at(c.n_zs, (d[spec], l[spec], z[spec]), 1)
    np.add.at(c.n_rl, (d, l, r), 1)
    np.add.at(c.n_l, (d, l), 1)
    np.add.at(c.n_d, d, 1)
    return c


def _log_dirichlet_multinomial(counts: np.ndarray, prior: float) -> np.ndarray:
    """log [ B(prior + counts) / B(prior) ] over the last axis, elementwise on
    the leading axes; B is the multivariate beta function."""
    dim = counts.shape[-1]
    num = gammaln(counts + prior).sum(axis=-1) - gammaln(counts.sum(axis=-1) + prior * dim)
    den = dim * gammaln(prior) - gammaln(prior * dim)
    return num - den


def joint_log_prob(state: ModelState) -> float:
    """Exact collapsed joint log P(l, r, z, w) of the current assignments.

    Product of Dirichlet-multinomial terms, one per collapsed distribution:
    per-doc group mixture, per-(doc,group) switcher, per-(doc,group) topic
    mixtures, and the topic-word tables (common ones shared across domains,
    specific ones per domain).  In CCLDA mode the per-doc topic mixture is a
    single table over the shared topic index regardless of the switcher.
    """
    c = state.counts
    hp = state.hp
    total = float(np.sum(_log_dirichlet_multinomial(c.n_l, hp.eta)))
    total += float(np.sum(_log_dirichlet_multinomial(c.n_rl, hp.gamma)))

    if hp.mode == Mode.CCLDA:
        total += float(np.sum(_log_dirichlet_multinomial(c.n_zc + c.n_zs, hp.alpha)))
    else:
        total += float(np.sum(_log_dirichlet_multinomial(c.n_zc, hp.alpha)))
        for m in (0, 1):
            docs = state.doc_domain == m
            ts = int(state.t_spec[m])
            total += float(np.sum(
                _log_dirichlet_multinomial(c.n_zs[docs, :, :ts], hp.alpha)))

    total += float(np.sum(_log_dirichlet_multinomial(c.n_w_common, hp.beta)))
    for m in (0, 1):
        ts = int(state.t_spec[m])
        total += float(np.sum(_log_dirichlet_multinomial(c.n_w_spec[m, :, :ts], hp.beta)))
    return total


@dataclass
class PosteriorParams:
    """Smoothed posterior point estimates read off the count tables.

    Specific-topic axes are zero-padded past each domain's topic count, so
    mixture sums over the padded axis are unaffected.
    """

    phi_common: np.ndarray    # (G, Tc, V)
    phi_spec: np.ndarray      # (2, G, Ts_max, V)
    theta_common: np.ndarray  # (D, G, Tc)
    theta_spec: np.ndarray    # (D, G, Ts_max)
    sigma: np.ndarray         # (D, G)  probability of drawing a specific topic
    pi: np.ndarray            # (D, G)  group mixture
    doc_domain: np.ndarray    # (D,)
    mode: Mode
    t_spec: tuple[int, int]

    @property
    def n_groups(self) -> int:
        return self.pi.shape[1]

    def arrays(self):
        return {name: getattr(self, name) for name in (
            "phi_common", "phi_spec", "theta_common", "theta_spec",
            "sigma", "pi", "doc_domain")}


def estimate_params(state: ModelState) -> PosteriorParams:
    c = state.counts
    hp = state.hp
    V = state.corpus.vocabulary.size
    tc = hp.t_common

    phi_common = (c.n_w_common + hp.beta) / (c.n_common + V * hp.beta)[..., None]
    phi_spec = np.zeros_like(c.n_w_spec, dtype=np.float64)
    theta_spec = np.zeros_like(c.n_zs, dtype=np.float64)
    for m in (0, 1):
        ts = int(state.t_spec[m])
        phi_spec[m, :, :ts] = (c.n_w_spec[m, :, :ts] + hp.beta) / \
            (c.n_spec[m, :, :ts] + V * hp.beta)[..., None]
        docs = state.doc_domain == m
        if hp.mode == Mode.CCLDA:
            merged = c.n_zc[docs, 0] + c.n_zs[docs, 0]
            theta_spec[docs, 0, :ts] = (merged + hp.alpha) / \
                (c.n_l[docs, 0] + tc * hp.alpha)[:, None]
        else:
            theta_spec[docs, :, :ts] = (c.n_zs[docs, :, :ts] + hp.alpha) / \
                (c.n_rl[docs, :, 1] + ts * hp.alpha)[..., None]

    if hp.mode == Mode.CCLDA:
        # single per-doc mixture over the shared topic index
        theta_common = (c.n_zc[:, [0]] + c.n_zs[:, [0]] + hp.alpha) / \
            (c.n_l[:, [0]] + tc * hp.alpha)[..., None]
    else:
        theta_common = (c.n_zc + hp.alpha) / (c.n_rl[:, :, 0] + tc * hp.alpha)[..., None]

    sigma = (c.n_rl[:, :, 1] + hp.gamma) / (c.n_l + 2 * hp.gamma)
    pi = (c.n_l + hp.eta) / (c.n_d + state.n_groups * hp.eta)[:, None]
    return PosteriorParams(phi_common, phi_spec, theta_common, theta_spec,
                           sigma, pi, state.doc_domain.copy(), hp.mode,
                           tuple(hp.t_specific))


def average_params(samples: list[PosteriorParams]) -> PosteriorParams:
    """Element-wise mean of posterior samples (normalization is preserved)."""
    if not samples:
        raise ValueError("average_params needs at least one sample")
    first = samples[0]
    for s in samples[1:]:
        for name, arr in first.arrays().items():
            if s.arrays()[name].shape != arr.shape:
                raise ValueError(f"shape mismatch in {name} across samples")
    mean = {name: np.mean([s.arrays()[name] for s in samples], axis=0)
            for name in first.arrays() if name != "doc_domain"}
    return PosteriorParams(doc_domain=first.doc_domain.copy(), mode=first.mode,
                           t_spec=first.t_spec, **mean)


# ---------------------------------------------------------------------------
# Deterministic on-disk records (checkpoints, posterior params)
# ---------------------------------------------------------------------------

def _write_record(path, magic: str, header: dict, arrays: dict[str, np.ndarray]):
    """Versioned binary record: magic line, JSON header line, raw array bytes.

    Written byte-for-byte deterministically (sorted JSON keys, C-order raw
    dumps), which is what lets identical runs produce identical files.
    """
    header = dict(header)
    header["arrays"] = [
        {"name": name, "dtype": str(a.dtype), "shape": list(a.shape)}
        for name, a in arrays.items()
    ]
    with open(path, "wb") as fh:
        fh.write(magic.encode("ascii") + b"\n")
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for a in arrays.values():
            fh.write(np.ascontiguousarray(a).tobytes())


def _read_record(path, magic: str):
    with open(path, "rb") as fh:
        got = fh.readline().rstrip(b"\n").decode("ascii")
        if got != magic:
            raise ValueError(f"{path}: bad magic {got!r}, expected {magic!r}")
        header = json.loads(fh.readline())
        arrays = {}
        for spec in header["arrays"]:
            dtype = np.dtype(spec["dtype"])
            count = int(np.prod(spec["shape"])) if spec["shape"] else 1
            buf = fh.read(count * dtype.itemsize)
            arrays[spec["name"]] = np.frombuffer(buf, dtype=dtype).reshape(spec["shape"]).copy()
    return header, arrays


def save_checkpoint(state: ModelState, path, extra: dict | None = None):
    header = {
        "hyperparams": state.hp.to_dict(),
        "n_groups": state.n_groups,
        "rng_state": state.rng.bit_generator.state,
    }
    if extra:
        header.update(extra)
    _write_record(path, CHECKPOINT_MAGIC, header,
                  {"l": state.l, "r": state.r, "z": state.z})


def load_checkpoint(path, corpus: Corpus) -> ModelState:
    """Restore a state whose continued sampling is bit-identical to never
    having stopped: assignments, counts, and rng position all round-trip."""
    header, arrays = _read_record(path, CHECKPOINT_MAGIC)
    hp = Hyperparams.from_dict(header["hyperparams"])
    state = ModelState(corpus, hp)
    if arrays["l"].shape[0] != state.n_tokens:
        raise ValueError("checkpoint does not match corpus (token count differs)")
    state.l = arrays["l"].astype(np.int32)
    state.r = arrays["r"].astype(np.int32)
    state.z = arrays["z"].astype(np.int32)
    state.counts = rebuild_counts(state)
    state.rng.bit_generator.state = header["rng_state"]
    return state


def save_params(params: PosteriorParams, path, extra: dict | None = None):
    header = {"mode": params.mode.value, "t_spec": list(params.t_spec)}
    if extra:
        header.update(extra)
    _write_record(path, PARAMS_MAGIC, header, params.arrays())


def load_params(path) -> PosteriorParams:
    header, arrays = _read_record(path, PARAMS_MAGIC)
    return PosteriorParams(mode=Mode(header["mode"]),
                           t_spec=tuple(header["t_spec"]), **arrays)
