"""Command-line entry point: corpus prep, training, evaluation, topic reports,
and hyperparameter sweeps.

Every randomized command requires explicit seeds, every report embeds the
config hash, seed, corpus hash, and tool version, and all float output uses a
fixed format, so equal inputs produce byte-identical artifacts.  The sampler
rng is PCG64 seeded with the recorded 64-bit seed.

Exit codes: 0 ok, 1 runtime failure, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from xdtc import __version__
from xdtc.corpus import (
    Corpus,
    CorpusError,
    Domain,
    build_corpus,
    corpus_sha256,
    load_corpus,
    merge_datasets,
    save_corpus,
)
from xdtc.evaluation import (
    SWEEP_COLUMNS,
    SweepGrid,
    accuracy,
    feature_classify,
    paired_t_test,
    run_sweep,
)
from xdtc.inference import classify, perplexity, top_words
from xdtc.model import (
    ConfigError,
    Hyperparams,
    Mode,
    load_checkpoint,
    load_params,
    save_checkpoint,
    save_params,
)
from xdtc.sampler import train

# config keys shared by train and sweep; values are casters
_HYPER_KEYS = {
    "alpha": float, "beta": float, "gamma": float, "eta": float,
    "t_common": int, "t_spec_src": int, "t_spec_tgt": int,
    "iterations": int, "burn_in": int, "sample_lag": int,
    "mode": str, "random_scan": lambda s: s.lower() in ("1", "true", "yes"),
}

_CONFIG_KEYS = {
    "prep": {"source": str, "target": str, "out": str, "min_df": int,
             "strip_headers": lambda s: s.lower() in ("1", "true", "yes")},
    "train": {**_HYPER_KEYS, "corpus": str, "out_dir": str, "seeds": str,
              "trace": lambda s: s.lower() in ("1", "true", "yes"), "jobs": int},
    "eval": {"corpus": str, "run_dir": str, "which": str, "metrics": str,
             "format": str, "out_dir": str},
    "topics": {"corpus": str, "params": str, "group": str, "type": str,
               "domain": str, "topic": int, "k": int, "format": str},
    "sweep": {**_HYPER_KEYS, "seeds": str, "out": str, "jobs": int},
}


def _fmt(v) -> str:
    """Stable scalar formatting for reports; NaN prints as NA."""
    if isinstance(v, float):
        if math.isnan(v):
            return "NA"
        return f"{v:.10g}"
    return str(v)


def _read_config(path: str, command: str) -> dict:
    cp = configparser.ConfigParser()
    if not cp.read(path):
        raise ConfigError(f"cannot read config file {path}")
    if command not in cp:
        return {}
    allowed = _CONFIG_KEYS[command]
    out = {}
    for key, raw in cp[command].items():
        if key not in allowed:
            raise ConfigError(f"unknown config key {key!r} in section [{command}]")
        out[key] = allowed[key](raw)
    return out


def config_to_ini(command: str, cfg: dict) -> str:
    """Serialize a resolved config so that _read_config parses it back."""
    lines = [f"[{command}]"]
    for key in sorted(cfg):
        if key in _CONFIG_KEYS[command] and cfg[key] is not None:
            lines.append(f"{key} = {cfg[key]}")
    return "\n".join(lines) + "\n"


def _merge_config(args: argparse.Namespace, command: str, defaults: dict) -> dict:
    """Resolved config: flag > config file > default."""
    cfg = dict(defaults)
    if getattr(args, "config", None):
        cfg.update(_read_config(args.config, command))
    for key in _CONFIG_KEYS[command]:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _parse_seeds(raw) -> list[int]:
    if raw is None or raw == "":
        raise ConfigError("an explicit --seeds list is required (no silent entropy)")
    if isinstance(raw, (list, tuple)):
        return [int(s) for s in raw]
    try:
        seeds = [int(tok) for tok in str(raw).replace(",", " ").split()]
    except ValueError as err:
        raise ConfigError(f"bad seed list {raw!r}") from err
    if not seeds:
        raise ConfigError("an explicit --seeds list is required (no silent entropy)")
    return seeds


def _hyperparams_from_cfg(cfg: dict, n_labels: int, seed: int) -> Hyperparams:
    return Hyperparams(
        alpha=cfg["alpha"], beta=cfg["beta"], gamma=cfg["gamma"], eta=cfg["eta"],
        t_common=cfg["t_common"],
        t_specific=(cfg["t_spec_src"], cfg["t_spec_tgt"]),
        n_labels=n_labels, iterations=cfg["iterations"], burn_in=cfg["burn_in"],
        sample_lag=cfg["sample_lag"], mode=Mode(cfg["mode"]), seed=seed,
        random_scan=cfg["random_scan"],
    ).validate()


def _config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, default=str).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def _report_header(embeds: dict, columns: tuple[str, ...] | list[str]) -> list[str]:
    lines = [f"# xdtc {__version__}"]
    for key in sorted(embeds):
        lines.append(f"# {key}: {embeds[key]}")
    lines.append("# columns: " + "\t".join(columns))
    return lines


def _write_lines(path, lines: list[str]):
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# prep
# ---------------------------------------------------------------------------

def cmd_prep(args) -> int:
    cfg = _merge_config(args, "prep", {"min_df": 3, "strip_headers": False})
    if args.merge:
        if len(args.merge) != 2:
            raise ConfigError("--merge takes exactly two corpus files")
        if not cfg.get("out"):
            raise ConfigError("--out is required")
        merged = merge_datasets(load_corpus(args.merge[0]), load_corpus(args.merge[1]))
        save_corpus(merged, cfg["out"])
        print(f"wrote {cfg['out']}: {merged.n_docs} docs, "
              f"{merged.vocabulary.size} words, labels {','.join(merged.label_names)}")
        return 0
    if not cfg.get("source") or not cfg.get("target"):
        raise ConfigError("--source and --target are required (or --merge)")
    if not cfg.get("out"):
        raise ConfigError("--out is required")
    corpus = build_corpus(cfg["source"], cfg["target"], min_df=cfg["min_df"],
                          strip_headers=cfg["strip_headers"])
    save_corpus(corpus, cfg["out"])
    print(f"wrote {cfg['out']}: {corpus.n_docs} docs, "
          f"{corpus.vocabulary.size} words, labels {','.join(corpus.label_names)}")
    return 0


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------

_TRAIN_DEFAULTS = {
    "alpha": 10.0, "beta": 0.1, "gamma": 1.0, "eta": 0.01,
    "t_common": 6, "t_spec_src": 6, "t_spec_tgt": 6,
    "iterations": 50, "burn_in": 30, "sample_lag": 5,
    "mode": "sup", "random_scan": False, "trace": False, "jobs": 1,
}


def _train_one_seed(corpus_path: str, out_dir: str, cfg: dict, seed: int,
                    embeds: dict) -> int:
    corpus = load_corpus(corpus_path)
    hp = _hyperparams_from_cfg(cfg, corpus.n_labels, seed)
    trace = [] if cfg["trace"] else None
    state, params = train(corpus, hp, trace)
    out = Path(out_dir)
    seed_embeds = dict(embeds, seed=seed)
    save_checkpoint(state, out / f"checkpoint-seed{seed}.bin", extra=seed_embeds)
    save_params(params, out / f"params-seed{seed}.bin", extra=seed_embeds)
    if trace is not None:
        lines = _report_header(seed_embeds, ("sweep", "log_joint", "seconds"))
        lines += [f"{row.sweep}\t{_fmt(row.log_joint)}\t{_fmt(row.seconds)}"
                  for row in trace]
        _write_lines(out / f"trace-seed{seed}.tsv", lines)
    return seed


def cmd_train(args) -> int:
    cfg = _merge_config(args, "train", _TRAIN_DEFAULTS)
    if not cfg.get("corpus"):
        raise ConfigError("--corpus is required")
    if not cfg.get("out_dir"):
        raise ConfigError("--out-dir is required")
    seeds = _parse_seeds(cfg.get("seeds"))
    cfg["seeds"] = ",".join(str(s) for s in seeds)
    # validate once up front so config errors exit before any work happens
    corpus = load_corpus(cfg["corpus"])
    _hyperparams_from_cfg(cfg, corpus.n_labels, seeds[0])

    corpus_hash = corpus_sha256(cfg["corpus"])
    config_hash = _config_hash({k: cfg[k] for k in set(_HYPER_KEYS) | {"seeds"}})
    embeds = {"config_hash": config_hash, "corpus_hash": corpus_hash,
              "version": __version__}

    out = Path(cfg["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = dict(cfg, config_hash=config_hash, corpus_hash=corpus_hash,
                    version=__version__)
    (out / "config.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    (out / "config.ini").write_text(config_to_ini("train", cfg))

    jobs = cfg.get("jobs") or 1
    if jobs > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futs = [pool.submit(_train_one_seed, cfg["corpus"], str(out), cfg, s, embeds)
                    for s in seeds]
            for f in futs:
                f.result()
    else:
        for s in seeds:
            _train_one_seed(cfg["corpus"], str(out), cfg, s, embeds)
    print(f"trained {len(seeds)} run(s) into {out}")
    return 0


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def _run_seeds(run_dir: Path) -> list[int]:
    seeds = sorted(int(p.stem.split("seed")[1])
                   for p in run_dir.glob("checkpoint-seed*.bin"))
    if not seeds:
        raise FileNotFoundError(f"no checkpoints found in {run_dir}")
    return seeds


def _seed_metrics(run_dir: Path, corpus: Corpus, seed: int, which: str,
                  want_accuracy: bool):
    state = load_checkpoint(run_dir / f"checkpoint-seed{seed}.bin", corpus)
    params = load_params(run_dir / f"params-seed{seed}.bin")
    perp = perplexity(params, corpus, which)
    preds = None
    acc = float("nan")
    if want_accuracy:
        gold = {d.doc_id: d.gold_label for d in corpus.documents
                if d.domain == Domain.TARGET}
        if any(v is None for v in gold.values()):
            raise ConfigError("accuracy requested but target documents carry no gold labels")
        if state.hp.mode == Mode.SUPERVISED:
            preds = classify(params, corpus)
        else:
            preds = feature_classify(state, corpus)
        acc = accuracy(preds, gold)
    return acc, perp, preds


def _predictions_lines(preds, corpus: Corpus, embeds: dict) -> list[str]:
    cols = ["doc_id", "predicted_label"] + [f"score_{i}" for i in range(corpus.n_labels)]
    emb = dict(embeds, labels=",".join(corpus.label_names))
    lines = _report_header(emb, cols)
    for p in preds:
        scores = "\t".join(_fmt(float(s)) for s in p.scores)
        lines.append(f"{p.doc_id}\t{p.label}\t{scores}")
    return lines


def cmd_eval(args) -> int:
    cfg = _merge_config(args, "eval", {"which": "target", "metrics": "auto",
                                       "format": "tsv"})
    if args.compare:
        return _cmd_eval_compare(args, cfg)
    if not cfg.get("corpus") or not cfg.get("run_dir"):
        raise ConfigError("--corpus and --run-dir are required")
    corpus = load_corpus(cfg["corpus"])
    corpus_hash = corpus_sha256(cfg["corpus"])
    run_dir = Path(cfg["run_dir"])
    out_dir = Path(cfg.get("out_dir") or run_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seeds = _run_seeds(run_dir)

    run_config = {}
    if (run_dir / "config.json").exists():
        run_config = json.loads((run_dir / "config.json").read_text())
    embeds = {"config_hash": run_config.get("config_hash", "unknown"),
              "corpus_hash": corpus_hash, "version": __version__}

    gold_present = all(d.gold_label is not None for d in corpus.documents
                       if d.domain == Domain.TARGET)
    metrics = cfg["metrics"]
    if metrics == "auto":
        want_accuracy = gold_present
    else:
        want_accuracy = "accuracy" in metrics.split(",")

    rows = []
    for seed in seeds:
        acc, perp, preds = _seed_metrics(run_dir, corpus, seed, cfg["which"], want_accuracy)
        rows.append({"seed": seed, "accuracy": acc, "perplexity": perp})
        if preds is not None:
            _write_lines(out_dir / f"predictions-seed{seed}.tsv",
                         _predictions_lines(preds, corpus, dict(embeds, seed=seed)))

    accs = [r["accuracy"] for r in rows if not math.isnan(r["accuracy"])]
    perps = [r["perplexity"] for r in rows]
    agg = {
        "mean_accuracy": float(np.mean(accs)) if accs else float("nan"),
        "sd_accuracy": float(np.std(accs, ddof=1)) if len(accs) > 1 else float("nan"),
        "mean_perplexity": float(np.mean(perps)),
        "sd_perplexity": float(np.std(perps, ddof=1)) if len(perps) > 1 else float("nan"),
    }

    if cfg["format"] == "json":
        clean = lambda v: None if isinstance(v, float) and math.isnan(v) else v
        doc = dict(embeds, which=cfg["which"],
                   per_seed=[{k: clean(v) for k, v in r.items()} for r in rows],
                   aggregate={k: clean(v) for k, v in agg.items()})
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
        (out_dir / "report.json").write_text(text)
        print(text, end="")
    else:
        lines = _report_header(dict(embeds, which=cfg["which"]),
                               ("seed", "accuracy", "perplexity"))
        for r in rows:
            lines.append(f"{r['seed']}\t{_fmt(r['accuracy'])}\t{_fmt(r['perplexity'])}")
        lines.append("# aggregate: " + "\t".join(f"{k}={_fmt(v)}" for k, v in agg.items()))
        _write_lines(out_dir / "report.tsv", lines)
        print("\n".join(lines))
    return 0


def _collect_metric(run_dir: Path, corpus: Corpus, metric: str, which: str) -> dict[int, float]:
    vals = {}
    for seed in _run_seeds(run_dir):
        acc, perp, _ = _seed_metrics(run_dir, corpus, seed, which,
                                     want_accuracy=(metric == "accuracy"))
        vals[seed] = acc if metric == "accuracy" else perp
    return vals


def _cmd_eval_compare(args, cfg) -> int:
    if not cfg.get("corpus"):
        raise ConfigError("--corpus is required")
    metric = args.metric or "perplexity"
    if metric not in ("perplexity", "accuracy"):
        raise ConfigError(f"unknown metric {metric!r}")
    corpus = load_corpus(cfg["corpus"])
    dir_a, dir_b = (Path(p) for p in args.compare)
    a = _collect_metric(dir_a, corpus, metric, cfg["which"])
    b = _collect_metric(dir_b, corpus, metric, cfg["which"])
    if sorted(a) != sorted(b):
        raise ConfigError("run sets have different seed lists; cannot pair")
    seeds = sorted(a)
    xa = np.array([a[s] for s in seeds])
    xb = np.array([b[s] for s in seeds])
    # one-tailed: H1 = first run set is better on this metric
    p = paired_t_test(xa, xb) if metric == "accuracy" else paired_t_test(xb, xa)
    print(f"# xdtc {__version__}")
    print(f"# metric: {metric}\tseeds: {','.join(map(str, seeds))}")
    print(f"# H1: {dir_a} better than {dir_b}")
    print(f"p_value\t{_fmt(p)}")
    return 0


# ---------------------------------------------------------------------------
# topics
# ---------------------------------------------------------------------------

def cmd_topics(args) -> int:
    cfg = _merge_config(args, "topics", {"k": 10, "format": "text"})
    for key in ("corpus", "params", "group", "type"):
        if not cfg.get(key):
            raise ConfigError(f"--{key} is required")
    corpus = load_corpus(cfg["corpus"])
    params = load_params(cfg["params"])

    raw_group = cfg["group"]
    if raw_group in corpus.label_names:
        group = corpus.label_names.index(raw_group)
    else:
        try:
            group = int(raw_group)
        except ValueError:
            raise ConfigError(f"unknown group {raw_group!r}; "
                              f"labels are {','.join(corpus.label_names)}") from None
    if not 0 <= group < params.n_groups:
        raise ConfigError(f"group {group} out of range; model has {params.n_groups} group(s)")
    if cfg["type"] not in ("common", "specific"):
        raise ConfigError("--type must be common or specific")
    topic_type = 0 if cfg["type"] == "common" else 1
    domain = None
    if topic_type == 1:
        if not cfg.get("domain"):
            raise ConfigError("--domain is required for specific topics")
        try:
            domain = Domain[cfg["domain"].upper()]
        except KeyError:
            raise ConfigError("--domain must be source or target") from None

    if topic_type == 0:
        n_topics = params.phi_common.shape[1]
    else:
        n_topics = params.t_spec[int(domain)]
    if cfg.get("topic") is not None:
        if not 0 <= cfg["topic"] < n_topics:
            raise ConfigError(f"topic {cfg['topic']} out of range; "
                              f"this table has {n_topics} topic(s)")
        topics = [cfg["topic"]]
    else:
        topics = list(range(n_topics))

    reports = [top_words(params, corpus.vocabulary, group, topic_type, t,
                         cfg["k"], domain) for t in topics]
    group_name = corpus.label_names[group] if group < corpus.n_labels else str(group)

    if cfg["format"] == "json":
        doc = [{"group": r.group, "group_name": group_name,
                "topic_type": r.topic_type,
                "domain": r.domain.name.lower() if r.domain is not None else None,
                "topic": r.topic,
                "words": [[w, float(f"{p:.10g}")] for w, p in r.words]}
               for r in reports]
        print(json.dumps(doc, indent=2))
    else:
        blocks = []
        for r in reports:
            dom = f" domain={r.domain.name.lower()}" if r.domain is not None else ""
            head = f"group={group_name} type={r.topic_type}{dom} topic={r.topic}"
            if r.words:
                width = max(len(w) for w, _ in r.words)
                body = [f"  {w:<{width}}  {_fmt(p)}" for w, p in r.words]
            else:
                body = []
            blocks.append("\n".join([head] + body))
        print("\n\n".join(blocks))
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_AXIS_CASTERS = {
    "mode": str, "alpha": float, "beta": float, "gamma": float, "eta": float,
    "t_common": int, "t_spec_src": int, "t_spec_tgt": int,
    "iterations": int, "burn_in": int, "sample_lag": int,
}


def _parse_axes(specs: list[str]) -> dict[str, list]:
    axes = {}
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(f"bad --axis {spec!r}; expected name=v1,v2,...")
        name, _, raw = spec.partition("=")
        name = name.strip()
        if name not in _AXIS_CASTERS:
            raise ConfigError(f"unknown sweep axis {name!r}")
        try:
            axes[name] = [_AXIS_CASTERS[name](tok) for tok in raw.split(",") if tok != ""]
        except ValueError as err:
            raise ConfigError(f"bad value in --axis {spec!r}: {err}") from None
        if not axes[name]:
            raise ConfigError(f"sweep axis {name!r} has no values")
    return axes


def cmd_sweep(args) -> int:
    cfg = _merge_config(args, "sweep", dict(_TRAIN_DEFAULTS, jobs=1))
    if not args.corpus:
        raise ConfigError("at least one --corpus is required")
    if not cfg.get("out"):
        raise ConfigError("--out is required")
    seeds = _parse_seeds(cfg.get("seeds"))
    axes = _parse_axes(args.axis or [])

    tasks, hashes = [], []
    for path in args.corpus:
        tasks.append((Path(path).stem, load_corpus(path)))
        hashes.append(corpus_sha256(path))

    base = Hyperparams(
        alpha=cfg["alpha"], beta=cfg["beta"], gamma=cfg["gamma"], eta=cfg["eta"],
        t_common=cfg["t_common"], t_specific=(cfg["t_spec_src"], cfg["t_spec_tgt"]),
        iterations=cfg["iterations"], burn_in=cfg["burn_in"],
        sample_lag=cfg["sample_lag"], mode=Mode(cfg["mode"]),
        random_scan=cfg["random_scan"])
    grid = SweepGrid(axes=axes, tasks=tasks, seeds=seeds).validate()
    print(f"grid size: {len(tasks)} task(s) x {len(grid.cells())} cell(s) "
          f"x {len(seeds)} seed(s) = {grid.size} runs", file=sys.stderr)

    rows = run_sweep(grid, base=base, jobs=cfg.get("jobs") or 1)

    embeds = {"config_hash": _config_hash({**{k: cfg[k] for k in _HYPER_KEYS},
                                           "axes": axes, "seeds": seeds}),
              "corpus_hash": ",".join(hashes), "version": __version__}
    lines = _report_header(embeds, SWEEP_COLUMNS)
    for row in rows:
        lines.append("\t".join(_fmt(row[c]) for c in SWEEP_COLUMNS))
    _write_lines(cfg["out"], lines)
    print(f"wrote {cfg['out']}: {len(rows)} rows")
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_hyper_flags(p: argparse.ArgumentParser):
    p.add_argument("--alpha", type=float, help="topic-mixture prior (default 10)")
    p.add_argument("--beta", type=float, help="topic-word prior (default 0.1)")
    p.add_argument("--gamma", type=float, help="switcher prior (default 1)")
    p.add_argument("--eta", type=float, help="group-mixture prior (default 0.01)")
    p.add_argument("--t-common", type=int, dest="t_common",
                   help="common topics per group (default 6)")
    p.add_argument("--t-spec-src", type=int, dest="t_spec_src",
                   help="source-specific topics per group (default 6)")
    p.add_argument("--t-spec-tgt", type=int, dest="t_spec_tgt",
                   help="target-specific topics per group (default 6)")
    p.add_argument("--iterations", type=int, help="Gibbs sweeps (default 50)")
    p.add_argument("--burn-in", type=int, dest="burn_in",
                   help="sweeps before sampling params (default 30)")
    p.add_argument("--sample-lag", type=int, dest="sample_lag",
                   help="sweeps between param samples (default 5)")
    p.add_argument("--mode", choices=["sup", "un", "ccl"],
                   help="sup: source labels clamp token groups; un: groups free; "
                        "ccl: exact one-to-one topic alignment baseline")
    p.add_argument("--random-scan", action="store_const", const=True, default=None,
                   dest="random_scan", help="permute token visit order each sweep")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xdtc",
        description="Cross-domain text classification with group-aligned topics.")
    parser.add_argument("--version", action="version", version=f"xdtc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prep", help="build or merge a corpus file")
    p.add_argument("--source", help="labeled source docs (TSV file or label dirs)")
    p.add_argument("--target", help="target docs (TSV file or label dirs)")
    p.add_argument("--merge", nargs=2, metavar="CORPUS",
                   help="merge two corpus files into a multi-class task")
    p.add_argument("--out", help="output corpus file")
    p.add_argument("--min-df", type=int, dest="min_df",
                   help="drop words in fewer documents than this (default 3)")
    p.add_argument("--strip-headers", action="store_const", const=True, default=None,
                   dest="strip_headers", help="drop message header blocks before tokenizing")
    p.add_argument("--config", help="INI config file, section [prep]")
    p.set_defaults(func=cmd_prep)

    p = sub.add_parser("train", help="run Gibbs sampling, one chain per seed")
    p.add_argument("--corpus", help="corpus file from prep")
    p.add_argument("--out-dir", dest="out_dir", help="directory for run artifacts")
    p.add_argument("--seeds", help="comma-separated seed list (required)")
    p.add_argument("--trace", action="store_const", const=True, default=None,
                   help="write per-sweep log-joint TSV")
    p.add_argument("--jobs", type=int, help="parallel seed chains (default 1)")
    p.add_argument("--config", help="INI config file, section [train]")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score trained runs: accuracy, perplexity, t-test")
    p.add_argument("--corpus", help="corpus file the runs were trained on")
    p.add_argument("--run-dir", dest="run_dir", help="directory written by train")
    p.add_argument("--which", choices=["source", "target", "all"],
                   help="perplexity domain (default target)")
    p.add_argument("--metrics", help="comma list or 'auto' (accuracy if gold present)")
    p.add_argument("--format", choices=["tsv", "json"], help="report format (default tsv)")
    p.add_argument("--out-dir", dest="out_dir", help="report directory (default run dir)")
    p.add_argument("--compare", nargs=2, metavar="RUN_DIR",
                   help="paired one-tailed t-test between two run sets")
    p.add_argument("--metric", choices=["perplexity", "accuracy"],
                   help="metric for --compare (default perplexity)")
    p.add_argument("--config", help="INI config file, section [eval]")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("topics", help="top words per topic from saved params")
    p.add_argument("--corpus", help="corpus file (for the vocabulary)")
    p.add_argument("--params", help="params file written by train")
    p.add_argument("--group", help="label name or group index")
    p.add_argument("--type", choices=["common", "specific"], help="topic type")
    p.add_argument("--domain", choices=["source", "target"],
                   help="domain of a specific topic")
    p.add_argument("--topic", type=int, help="single topic index (default: all)")
    p.add_argument("--k", type=int, help="words per topic (default 10)")
    p.add_argument("--format", choices=["text", "json"], help="output format")
    p.add_argument("--config", help="INI config file, section [topics]")
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("sweep", help="grid of train+eval runs, long-format TSV")
    p.add_argument("--corpus", action="append",
                   help="corpus file; repeat for several tasks")
    p.add_argument("--axis", action="append", metavar="NAME=V1,V2,...",
                   help="sweep axis; repeatable")
    p.add_argument("--seeds", help="comma-separated seed list (required)")
    p.add_argument("--out", help="output TSV path")
    p.add_argument("--jobs", type=int, help="parallel cells (default 1)")
    p.add_argument("--config", help="INI config file, section [sweep]")
    _add_hyper_flags(p)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CorpusError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # runtime failure
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
