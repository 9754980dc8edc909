"""Collapsed Gibbs sampling over per-token (l, r, z) triples.

Each token is resampled with one categorical draw over its full support
(label x common-or-specific topic), using count ratios at the minus-token
state.  Supervised mode clamps source-token labels; CCLDA mode drops the
label axis and shares one topic index across the switcher.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from xdtc import _kernels
from xdtc.corpus import Corpus
from xdtc.model import (
    Hyperparams,
    Mode,
    ModelState,
    PosteriorParams,
    average_params,
    estimate_params,
    init_state,
    joint_log_prob,
)


@dataclass
class ConditionalTable:
    """Normalized conditional over a token's legal support plus the map
    from flat cell index to its (label, topic_type, topic) triple."""
    probs: np.ndarray
    cells: list[tuple[int, int, int]]

    @property
    def n_cells(self) -> int:
        return len(self.cells)


@dataclass
class SweepStats:
    tokens_visited: int
    log_joint: float


@dataclass
class TraceRow:
    sweep: int
    log_joint: float
    seconds: float


def _table_at_minus_t(state: ModelState, d: int, t: int, ccl: bool) -> ConditionalTable:
    if not 0 <= d < state.corpus.n_docs:
        raise IndexError(f"doc index {d} out of range")
    i = state.doc_offset[d] + t
    if not 0 <= t < state.doc_offset[d + 1] - state.doc_offset[d]:
        raise IndexError(f"token index {t} out of range for doc {d}")
    w = int(state.tok_word[i])
    m = int(state.doc_domain[d])
    ts = int(state.t_spec[m])
    fl = int(state.fixed_label[i])
    lo_l, hi_l = (fl, fl + 1) if fl >= 0 else (0, state.n_groups)

    c = state.counts
    buf = np.empty(state.n_groups * (state.hp.t_common + state.ts_max), dtype=np.float64)
    n_cells, total = _kernels.token_probs(
        d, w, m, lo_l, hi_l,
        c.n_w_common, c.n_common, c.n_w_spec, c.n_spec,
        c.n_zc, c.n_zs, c.n_rl, c.n_l,
        state.hp.alpha, state.hp.beta, state.hp.gamma, state.hp.eta,
        state.hp.t_common, ts, state.corpus.vocabulary.size, ccl, buf)

    tc = state.hp.t_common
    # kernel cell order: per label, common block then specific block
    cells: list[tuple[int, int, int]] = []
    for l in range(lo_l, hi_l):
        cells.extend((l, 0, z) for z in range(tc))
        cells.extend((l, 1, z) for z in range(ts))
    return ConditionalTable(probs=buf[:n_cells] / total, cells=cells)


def conditional(state: ModelState, d: int, t: int) -> ConditionalTable:
    """Full conditional for token t of doc d, which must already be removed
    from the tables (the minus-token state).  Cells cover every legal
    (l, r, z); a clamped source token contributes only its own label."""
    if state.hp.mode == Mode.CCLDA:
        raise ValueError("state is in CCLDA mode; use conditional_ccl")
    return _table_at_minus_t(state, d, t, ccl=False)


def conditional_ccl(state: ModelState, d: int, t: int) -> ConditionalTable:
    """CCLDA conditional: one shared topic index, the switcher only picks the
    common versus domain-specific word table of that same topic."""
    if state.hp.mode != Mode.CCLDA:
        raise ValueError("conditional_ccl requires a CCLDA-mode state")
    return _table_at_minus_t(state, d, t, ccl=True)


def gibbs_sweep(state: ModelState) -> SweepStats:
    """Resample every token once.  Visit order is corpus order, or a fresh
    permutation from the chain rng when hp.random_scan is set."""
    n = state.n_tokens
    if state.hp.random_scan:
        order = state.rng.permutation(n).astype(np.int64)
    else:
        order = np.arange(n, dtype=np.int64)
    c = state.counts
    hp = state.hp
    buf = np.empty(state.n_groups * (hp.t_common + state.ts_max), dtype=np.float64)
    _kernels.sweep_kernel(
        order, state.tok_word, state.tok_doc, state.doc_domain, state.fixed_label,
        state.l, state.r, state.z,
        c.n_w_common, c.n_common, c.n_w_spec, c.n_spec,
        c.n_zc, c.n_zs, c.n_rl, c.n_l,
        hp.alpha, hp.beta, hp.gamma, hp.eta,
        hp.t_common, state.t_spec, state.n_groups,
        state.corpus.vocabulary.size, hp.mode == Mode.CCLDA,
        state.rng, buf)
    return SweepStats(tokens_visited=n, log_joint=joint_log_prob(state))


def train(corpus: Corpus, hp: Hyperparams,
          trace: list[TraceRow] | None = None) -> tuple[ModelState, PosteriorParams]:
    """Initialize, run hp.iterations sweeps, average the posterior samples
    collected after burn-in every sample_lag sweeps.  If the schedule never
    fires (short runs), the final sweep becomes the single sample."""
    state = init_state(corpus, hp)
    samples: list[PosteriorParams] = []
    t0 = time.perf_counter()
    for sweep in range(1, hp.iterations + 1):
        stats = gibbs_sweep(state)
        if trace is not None:
            trace.append(TraceRow(sweep, stats.log_joint, time.perf_counter() - t0))
        if sweep > hp.burn_in and (sweep - hp.burn_in) % hp.sample_lag == 0:
            samples.append(estimate_params(state))
    if not samples:
        samples.append(estimate_params(state))
    return state, average_params(samples)
