"""Acceptance gate: one test per numbered criterion, each ending in a
printed ``ACCEPTANCE <n> PASS`` line (run with ``pytest -s`` to see them).

Criteria 4-7 and the directional half of criterion 8 reproduce reference
results on the 20 Newsgroups / Reuters cross-domain splits and therefore
need the prepared corpora: point ``XDTC_DATA_DIR`` at a directory of
``<task>.bin`` files built with docs/fetch_20newsgroups.py followed by the
``xdtc prep`` commands it prints.  Without the data those tests skip loudly
and the planted-corpus companions below cover the same machinery
unconditionally.
"""

import os
from pathlib import Path

import numpy as np
import pytest

from xdtc.cli import main
from xdtc.corpus import Domain, load_corpus, save_corpus
from xdtc.evaluation import (
    logistic_loss_grad,
    paired_t_test,
    score_run,
)
from xdtc.inference import classify, perplexity, word_likelihood
from xdtc.model import (
    Hyperparams,
    Mode,
    counts_equal,
    init_state,
    load_checkpoint,
    rebuild_counts,
    save_checkpoint,
)
from xdtc.sampler import conditional, conditional_ccl, gibbs_sweep, train

from conftest import brute_force_conditional, make_corpus, planted_corpus, random_corpus
from test_inference import hand_params

BINARY_TASKS = ["comp_vs_rec", "sci_vs_talk", "comp_vs_sci",
                "rec_vs_talk", "comp_vs_talk", "rec_vs_sci"]
FOURCLASS_TASKS = ["comp_rec_sci_talk", "comp_sci_rec_talk", "comp_talk_rec_sci"]
REUTERS_TASKS = ["orgs_vs_people", "orgs_vs_places", "people_vs_places"]
ALL_TASKS = BINARY_TASKS + REUTERS_TASKS + FOURCLASS_TASKS


def _require_data(tasks):
    root = os.environ.get("XDTC_DATA_DIR")
    if not root:
        pytest.skip(
            "SKIPPED (no data): this criterion reproduces reference results on "
            "real corpora. Set XDTC_DATA_DIR to a directory holding "
            + ", ".join(f"{t}.bin" for t in tasks)
            + "; build the 20 Newsgroups ones with docs/fetch_20newsgroups.py "
            "and the `xdtc prep` commands it prints (Reuters tasks need the "
            "same TSV preparation from the Reuters-21578 org/people/place "
            "splits). The planted-corpus companion tests in this module cover "
            "the same machinery without data.")
    root = Path(root)
    missing = [f"{t}.bin" for t in tasks if not (root / f"{t}.bin").exists()]
    if missing:
        pytest.skip(f"SKIPPED (missing corpora in {root}): " + ", ".join(missing))
    return {t: load_corpus(root / f"{t}.bin") for t in tasks}


_RUN_CACHE: dict = {}


def _task_runs(task_name, corpus, mode, seeds=(0, 1, 2, 3, 4), **hp_kw):
    """Per-seed (accuracy, perplexity) lists, memoized across criteria."""
    key = (task_name, mode, tuple(seeds), tuple(sorted(hp_kw.items())))
    if key not in _RUN_CACHE:
        accs, perps = [], []
        for seed in seeds:
            hp = Hyperparams(mode=mode, n_labels=corpus.n_labels, seed=seed,
                             **hp_kw).validate()
            state, params = train(corpus, hp)
            a, p = score_run(corpus, state, params)
            accs.append(a)
            perps.append(p)
        _RUN_CACHE[key] = (accs, perps)
    return _RUN_CACHE[key]


# ---------------------------------------------------------------------------
# Criteria 1-3: exact oracles, always run
# ---------------------------------------------------------------------------

def test_criterion_01_conditional_matches_joint_enumeration():
    # >=100 tiny instances: every conditional cell against brute-force
    # enumeration of exp(joint) over the token's full support
    rng = np.random.default_rng(2024)
    modes = [Mode.SUPERVISED, Mode.UNSUPERVISED, Mode.CCLDA]
    worst = 0.0
    n_instances = 102
    for k in range(n_instances):
        mode = modes[k % 3]
        corpus = random_corpus(rng, max_docs=3, max_len=5, vocab_size=5)
        hp = Hyperparams(
            alpha=float(rng.choice([0.5, 2.0, 10.0])),
            beta=float(rng.choice([0.1, 1.0])),
            gamma=float(rng.choice([0.5, 1.0, 3.0])),
            eta=float(rng.choice([0.01, 0.5])),
            t_common=2, t_specific=(2, 2), n_labels=2,
            iterations=2, burn_in=1, sample_lag=1,
            mode=mode, seed=int(rng.integers(10_000)))
        state = init_state(corpus, hp)
        gibbs_sweep(state)  # move off the init state
        take = conditional_ccl if mode == Mode.CCLDA else conditional
        for d in range(corpus.n_docs):
            for t in range(len(corpus.documents[d].tokens)):
                i = state.doc_offset[d] + t
                keep = (int(state.l[i]), int(state.r[i]), int(state.z[i]))
                state.decrement_token(i)
                table = take(state, d, t)
                cells, oracle = brute_force_conditional(state, d, t)
                assert table.cells == cells
                worst = max(worst, float(np.max(np.abs(table.probs / oracle - 1.0))))
                state.increment_token(i, *keep)
    assert worst < 1e-9
    print(f"ACCEPTANCE 1 PASS: conditional == joint enumeration on "
          f"{n_instances} instances, worst relative deviation {worst:.3e}")


def test_criterion_02_sweep_count_consistency():
    rng = np.random.default_rng(77)
    modes = [Mode.SUPERVISED, Mode.UNSUPERVISED, Mode.CCLDA]
    steps = 0
    sweeps = 0
    while steps < 10_000:
        corpus = random_corpus(rng, max_docs=5, max_len=10, vocab_size=8)
        mode = modes[sweeps % 3]
        state = init_state(corpus, Hyperparams(
            t_common=2, t_specific=(2, 2) if mode == Mode.CCLDA else (3, 2),
            n_labels=2, iterations=2, burn_in=1, sample_lag=1,
            mode=mode, seed=int(rng.integers(10_000))))
        for _ in range(4):
            stats = gibbs_sweep(state)
            assert stats.tokens_visited == state.n_tokens
            assert counts_equal(state.counts, rebuild_counts(state))
            steps += stats.tokens_visited
            sweeps += 1
    print(f"ACCEPTANCE 2 PASS: incremental tables == rebuilt tables over "
          f"{steps} fuzzed sweep steps ({sweeps} sweeps)")


def test_criterion_03_perplexity_uniform_and_direct_sum():
    # uniform parameters: per-word likelihood is exactly 1/V, so perplexity
    # must equal the vocabulary size
    corpus = make_corpus([
        ("s0", Domain.SOURCE, [0, 1, 2, 3], 0),
        ("s1", Domain.SOURCE, [4, 5], 1),
        ("t0", Domain.TARGET, [6, 0, 2], None),
        ("t1", Domain.TARGET, [5], None),
    ], vocab_size=7)
    uniform = hand_params([0, 0, 1, 1], t_spec=(3, 2), v_size=7)
    for which in ("source", "target", "all"):
        assert perplexity(uniform, corpus, which) == pytest.approx(
            7.0, rel=1e-9)

    # trained parameters on a 3-document corpus against a direct per-word sum
    three = make_corpus([
        ("s0", Domain.SOURCE, [0, 1, 2, 1], 0),
        ("s1", Domain.SOURCE, [3, 0], 1),
        ("t0", Domain.TARGET, [2, 3, 1], None),
    ], vocab_size=4)
    state, params = train(three, Hyperparams(
        t_common=2, t_specific=(2, 2), n_labels=2,
        iterations=6, burn_in=3, sample_lag=1, seed=3))
    total, n = 0.0, 0
    for d, doc in enumerate(three.documents):
        for w in doc.tokens:
            total += np.log(word_likelihood(params, d, int(w)))
            n += 1
    direct = float(np.exp(-total / n))
    assert perplexity(params, three, "all") == pytest.approx(direct, rel=1e-9)
    print("ACCEPTANCE 3 PASS: uniform-model perplexity == V (rel 1e-9) and "
          "batched evaluation == direct per-word sum on a 3-doc corpus")


# ---------------------------------------------------------------------------
# Criteria 4-7: reference reproductions (data-gated) plus companions
# ---------------------------------------------------------------------------

def test_criterion_04_comp_vs_rec_accuracy():
    data = _require_data(["comp_vs_rec"])
    accs, _ = _task_runs("comp_vs_rec", data["comp_vs_rec"], Mode.SUPERVISED)
    mean = float(np.mean(accs))
    assert mean >= 0.94, f"mean accuracy {mean:.4f} < 0.94 over seeds 0-4"
    print(f"ACCEPTANCE 4 PASS: Comp vs. Rec mean accuracy {mean:.4f} >= 0.94 "
          f"(per-seed {np.round(accs, 4).tolist()})")


def test_criterion_05_ablation_ordering():
    data = _require_data(["comp_vs_rec", FOURCLASS_TASKS[0]])
    results = {}
    for task, corpus in data.items():
        sup, _ = _task_runs(task, corpus, Mode.SUPERVISED)
        un, _ = _task_runs(task, corpus, Mode.UNSUPERVISED)
        ccl, _ = _task_runs(task, corpus, Mode.CCLDA)
        results[task] = tuple(float(np.mean(v)) for v in (sup, un, ccl))
        s, u, c = results[task]
        assert s > u > c, (f"{task}: accuracy ordering violated: "
                           f"sup {s:.4f}, un {u:.4f}, ccl {c:.4f}")
    print("ACCEPTANCE 5 PASS: supervised > unsupervised > exact-alignment "
          "accuracy on " + "; ".join(
              f"{t} ({s:.3f} > {u:.3f} > {c:.3f})"
              for t, (s, u, c) in results.items()))


def test_criterion_06_perplexity_ordering():
    data = _require_data(["comp_vs_rec"])
    corpus = data["comp_vs_rec"]
    _, sup = _task_runs("comp_vs_rec", corpus, Mode.SUPERVISED)
    _, un = _task_runs("comp_vs_rec", corpus, Mode.UNSUPERVISED)
    _, ccl = _task_runs("comp_vs_rec", corpus, Mode.CCLDA)
    s, u, c = (float(np.mean(v)) for v in (sup, un, ccl))
    assert s < u < c, f"perplexity ordering violated: {s:.1f}, {u:.1f}, {c:.1f}"
    assert 932 * 0.75 <= s <= 932 * 1.25, \
        f"supervised mean perplexity {s:.1f} outside 932 +/- 25%"
    print(f"ACCEPTANCE 6 PASS: target perplexity {s:.1f} < {u:.1f} < {c:.1f}, "
          f"supervised mean within 932 +/- 25%")


def test_criterion_07_asymmetric_topic_counts():
    data = _require_data(["comp_vs_rec"])
    corpus = data["comp_vs_rec"]
    _, sym = _task_runs("comp_vs_rec", corpus, Mode.SUPERVISED)
    _, asym = _task_runs("comp_vs_rec", corpus, Mode.SUPERVISED,
                         t_specific=(8, 3))
    wins = sum(a < s for a, s in zip(asym, sym))
    assert wins >= 4, (f"6/8/3 beat 6/6/6 in only {wins}/5 seeds "
                       f"(asym {np.round(asym, 1).tolist()} vs "
                       f"sym {np.round(sym, 1).tolist()})")
    print(f"ACCEPTANCE 7 PASS: 6/8/3 target perplexity beats 6/6/6 in "
          f"{wins}/5 seeds")


# Planted-corpus companions: same claims' machinery, no data needed.
# Configurations and margins are frozen from tuning runs; chain and
# generator seeds are fixed, so these are exact reproductions.

def _companion_runs(corpus, mode, t_common, t_spec):
    accs, perps = [], []
    for seed in range(5):
        hp = Hyperparams(t_common=t_common, t_specific=t_spec,
                         n_labels=corpus.n_labels, mode=mode, seed=seed)
        state, params = train(corpus, hp)
        a, p = score_run(corpus, state, params)
        accs.append(a)
        perps.append(p)
    return float(np.mean(accs)), float(np.mean(perps))


def test_companion_binary_ordering_on_planted_corpus():
    # analogue of criteria 5/6 on a corpus drawn from the model's own story;
    # exact-alignment gets the same total topic budget (4 shared topics)
    corpus = planted_corpus(33)
    acc_sup, perp_sup = _companion_runs(corpus, Mode.SUPERVISED, 2, (2, 2))
    acc_un, perp_un = _companion_runs(corpus, Mode.UNSUPERVISED, 2, (2, 2))
    acc_ccl, perp_ccl = _companion_runs(corpus, Mode.CCLDA, 4, (4, 4))
    assert acc_sup > acc_un > acc_ccl
    assert acc_sup >= 0.9 and acc_ccl <= 0.6
    assert perp_sup < perp_un < perp_ccl
    assert perp_ccl - perp_sup >= 1.0
    print(f"COMPANION (5/6) PASS: planted binary accuracy "
          f"{acc_sup:.3f} > {acc_un:.3f} > {acc_ccl:.3f}; perplexity "
          f"{perp_sup:.2f} < {perp_un:.2f} < {perp_ccl:.2f}")


def test_companion_fourclass_dominance_on_planted_corpus():
    # 4-group analogue of criterion 5's robust part: joint training with
    # clamped source labels dominates both baselines by a wide margin and
    # exact alignment pays the largest perplexity cost
    corpus = planted_corpus(55, n_labels=4, docs_per_label=12)
    acc_sup, perp_sup = _companion_runs(corpus, Mode.SUPERVISED, 2, (2, 2))
    acc_un, perp_un = _companion_runs(corpus, Mode.UNSUPERVISED, 2, (2, 2))
    acc_ccl, perp_ccl = _companion_runs(corpus, Mode.CCLDA, 4, (4, 4))
    assert acc_sup >= 0.95
    assert acc_sup - max(acc_un, acc_ccl) >= 0.3
    assert perp_ccl > max(perp_sup, perp_un) + 5.0
    print(f"COMPANION (5, 4-class) PASS: planted 4-class accuracy "
          f"sup {acc_sup:.3f} vs un {acc_un:.3f} / ccl {acc_ccl:.3f}; "
          f"ccl perplexity {perp_ccl:.1f} worst")


def test_companion_asymmetric_machinery(tmp_path):
    # analogue of criterion 7's machinery: asymmetric per-domain topic
    # counts train end to end in both orientations, padded cells stay
    # exactly zero, and artifacts round-trip byte-identically
    corpus = planted_corpus(55, t_spec_src=3, t_spec_tgt=1, label_weight=0.85)
    for t_spec in ((3, 1), (1, 3)):
        hp = Hyperparams(t_common=2, t_specific=t_spec,
                         n_labels=corpus.n_labels, mode=Mode.SUPERVISED, seed=0)
        state, params = train(corpus, hp)
        narrow = int(np.argmin(t_spec))
        pad = min(t_spec)
        assert (params.phi_spec[narrow, :, pad:, :] == 0).all()
        docs = params.doc_domain == narrow
        assert (params.theta_spec[docs][:, :, pad:] == 0).all()
        m = state.doc_domain[state.tok_doc]
        spec = state.r == 1
        assert (state.z[spec] < state.t_spec[m[spec]]).all()
        assert np.isfinite(perplexity(params, corpus, "target"))
        assert len(classify(params, corpus)) == 50
        a, b = tmp_path / f"a{t_spec[0]}.bin", tmp_path / f"b{t_spec[0]}.bin"
        save_checkpoint(state, a)
        save_checkpoint(state, b)
        assert a.read_bytes() == b.read_bytes()
        assert counts_equal(load_checkpoint(a, corpus).counts, state.counts)
    print("COMPANION (7) PASS: asymmetric topic machinery sound in both "
          "orientations (padding, supports, round-trip)")


# ---------------------------------------------------------------------------
# Criterion 8: t-test oracle (always) and 12-task direction (data-gated)
# ---------------------------------------------------------------------------

def test_criterion_08_t_test_oracle():
    x = [0.92, 0.88, 0.95, 0.91, 0.89]
    y = [0.85, 0.86, 0.90, 0.84, 0.88]
    # hand-computed: differences mean 0.044, sd 0.027928..., t = 3.52281938,
    # 4 df; p frozen from an independent Student-t evaluation
    p = paired_t_test(x, y)
    assert abs(p - 0.012193965624807426) < 1e-8
    print(f"ACCEPTANCE 8 PASS (oracle): fixed 5-point series p = {p:.12f} "
          f"within 1e-8 of the hand-computed value")


def test_criterion_08_twelve_task_direction():
    data = _require_data(ALL_TASKS)
    sup_vec, ccl_vec = [], []
    for task in ALL_TASKS:
        _, sup = _task_runs(task, data[task], Mode.SUPERVISED)
        _, ccl = _task_runs(task, data[task], Mode.CCLDA)
        sup_vec.append(float(np.mean(sup)))
        ccl_vec.append(float(np.mean(ccl)))
    # H1: exact alignment is worse (higher target perplexity)
    p = paired_t_test(np.array(ccl_vec), np.array(sup_vec))
    assert p < 0.0001, f"12-task paired p = {p:.6f} not < 0.0001"
    print(f"ACCEPTANCE 8 PASS (direction): 12-task perplexity p = {p:.2e} < 1e-4")


# ---------------------------------------------------------------------------
# Criteria 9-10: determinism and the analytic gradient, always run
# ---------------------------------------------------------------------------

def test_criterion_09_byte_identical_runs(tmp_path):
    corpus_path = tmp_path / "task.bin"
    save_corpus(planted_corpus(33, docs_per_label=8, doc_len=30), corpus_path)
    flags = ["--t-common", "2", "--t-spec-src", "2", "--t-spec-tgt", "2",
             "--iterations", "8", "--burn-in", "4", "--sample-lag", "2"]
    outs = []
    for tag in ("one", "two"):
        run = tmp_path / tag
        assert main(["train", "--corpus", str(corpus_path), "--out-dir",
                     str(run), "--seeds", "7", *flags]) == 0
        assert main(["eval", "--corpus", str(corpus_path),
                     "--run-dir", str(run)]) == 0
        assert main(["eval", "--corpus", str(corpus_path),
                     "--run-dir", str(run), "--format", "json"]) == 0
        outs.append(run)
    compared = []
    for name in ("checkpoint-seed7.bin", "params-seed7.bin",
                 "predictions-seed7.tsv", "report.tsv", "report.json"):
        a = (outs[0] / name).read_bytes()
        b = (outs[1] / name).read_bytes()
        assert a == b, f"{name} differs between identical invocations"
        compared.append(name)
    print("ACCEPTANCE 9 PASS: byte-identical across two invocations: "
          + ", ".join(compared))


def test_criterion_10_logistic_gradient_check():
    rng = np.random.default_rng(10)
    features = rng.normal(size=(20, 8))
    labels = rng.integers(0, 3, size=20)
    weights = rng.normal(scale=0.5, size=(9, 3))
    _, grad = logistic_loss_grad(weights, features, labels, l2=1.0)
    eps = 1e-6
    worst = 0.0
    for flat in range(weights.size):
        probe = np.zeros_like(weights)
        probe.flat[flat] = eps
        lo, _ = logistic_loss_grad(weights - probe, features, labels, l2=1.0)
        hi, _ = logistic_loss_grad(weights + probe, features, labels, l2=1.0)
        worst = max(worst, abs(grad.flat[flat] - (hi - lo) / (2 * eps)))
    assert worst < 1e-6
    print(f"ACCEPTANCE 10 PASS: analytic gradient vs central differences on "
          f"20x8 features, max abs diff {worst:.3e} < 1e-6")
