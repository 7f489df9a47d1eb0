"""Command-line interface.

Subcommands: ingest, preprocess, run, project, evaluate, plot, report.
Global options: --config (JSON run configuration), --seed (overrides the
config seed), --out (output directory), --pairs-parallelism (threads for
the all-pairs distance stage). Exit codes: 0 success, 2 configuration
errors, 3 data errors, 4 numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import docgeom, evalcluster, pipeline, plotting, project, textprep, wmd
from .errors import (
    ConfigError,
    DataError,
    NumericError,
    StageError,
    StorytopicsError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="storytopics",
        description="Cluster crowd-sourced user stories by topic and map them in 2-d.",
    )
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument(
        "--pairs-parallelism", type=int, default=1,
        help="threads for the all-pairs distance stage (default: 1)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="validate a dataset CSV and summarize it")
    p_ingest.add_argument("--dataset", help="dataset CSV (falls back to the config)")

    p_pre = sub.add_parser("preprocess", help="clean and tokenize the corpus")
    p_pre.add_argument("--dataset", help="dataset CSV (falls back to the config)")
    p_pre.add_argument("--stopwords", help="stopword list (one word per line)")

    p_run = sub.add_parser("run", help="run one approach end to end")
    p_run.add_argument("--approach", choices=("a1", "a2", "a3"), required=True)
    p_run.add_argument("--dataset", help="dataset CSV (falls back to the config)")
    p_run.add_argument("--quiet", action="store_true", help="suppress stage progress")

    p_proj = sub.add_parser("project", help="t-SNE a saved feature or distance matrix")
    src = p_proj.add_mutually_exclusive_group(required=True)
    src.add_argument("--features", help="FLAT feature matrix file")
    src.add_argument("--distances", help="WMDM distance matrix file")
    p_proj.add_argument("--meta", help="CSV with story_id,domain rows for labeling")

    p_eval = sub.add_parser("evaluate", help="cluster saved coordinates, score vs domains")
    p_eval.add_argument("--coords", required=True, help="coords CSV from run/project")
    p_eval.add_argument("--k", type=int, default=5, help="number of clusters")

    p_plot = sub.add_parser("plot", help="render saved coordinates to SVG")
    p_plot.add_argument("--coords", required=True, help="coords CSV from run/project")
    p_plot.add_argument("--title", help="plot title")

    p_rep = sub.add_parser("report", help="summarize a finished run directory")
    p_rep.add_argument("--run", required=True, help="directory with manifest.json")

    return parser


def _load_config(args) -> pipeline.RunConfig:
    cfg = pipeline.load_config(args.config) if args.config else pipeline.RunConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def _require_dataset(args, cfg) -> str:
    dataset = getattr(args, "dataset", None) or cfg.dataset
    if not dataset:
        raise ConfigError("a dataset is required (--dataset or config)")
    return dataset


def _cmd_ingest(args) -> int:
    cfg = _load_config(args)
    dataset = _require_dataset(args, cfg)
    mapping = corpus_mod.ColumnMapping(**(cfg.columns or {}))
    corpus = corpus_mod.load_corpus(dataset, mapping=mapping)
    hist = corpus_mod.domain_histogram(corpus)
    print(f"loaded {corpus.n} stories from {dataset}")
    for label, count in hist.items():
        print(f"  {label.value}: {count}")
    return 0


def _cmd_preprocess(args) -> int:
    cfg = _load_config(args)
    dataset = _require_dataset(args, cfg)
    stopwords_path = args.stopwords or cfg.stopwords
    mapping = corpus_mod.ColumnMapping(**(cfg.columns or {}))
    corpus = corpus_mod.load_corpus(dataset, mapping=mapping)
    stopwords = textprep.load_stopwords(stopwords_path)
    stories, before, after = textprep.preprocess_corpus(corpus, stopwords=stopwords)
    empty = sum(1 for s in stories if not s.tokens)
    print(f"vocabulary before filtering: {before.V}")
    print(f"vocabulary after filtering: {after.V}")
    print(f"stories with no tokens left: {empty}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "story_ids": [s.story_id for s in stories],
        "labels": [lab.value for lab in corpus.labels()],
        "tokens": [list(s.tokens) for s in stories],
        "vocab_before": before.V,
        "vocab_after": after.V,
    }
    (out / "preprocess.json").write_text(json.dumps(payload), encoding="utf-8")
    print(f"wrote {out / 'preprocess.json'}")
    return 0


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    cfg.approach = args.approach
    if getattr(args, "dataset", None):
        cfg.dataset = args.dataset

    def progress(stage, message):
        print(f"[{stage}] {message}", file=sys.stderr)

    manifest = pipeline.run_pipeline(
        cfg, args.out,
        parallelism=args.pairs_parallelism,
        progress=None if args.quiet else progress,
    )
    scores = manifest.get("scores", {})
    print(f"run complete: {args.out}")
    print(
        "purity={purity:.4f} ari={ari:.4f} nmi={nmi:.4f}".format(
            purity=scores.get("purity", float("nan")),
            ari=scores.get("ari", float("nan")),
            nmi=scores.get("nmi", float("nan")),
        )
    )
    return 0


def _read_meta(path):
    ids, labels = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            ids.append(row["story_id"])
            labels.append(row["domain"])
    return ids, labels


def _cmd_project(args) -> int:
    cfg = _load_config(args)
    if args.features:
        matrix = docgeom.load_flat(args.features)
        input_kind = "features"
    else:
        matrix = wmd.load_wmdm(args.distances)
        matrix = wmd.impute_sentinels(matrix)
        input_kind = "distances"
    n = matrix.shape[0]
    if args.meta:
        ids, labels = _read_meta(args.meta)
        if len(ids) != n:
            raise DataError(f"meta lists {len(ids)} stories, matrix has {n}")
    else:
        ids = [str(i) for i in range(n)]
        labels = ["Other"] * n
    ts = cfg.tsne
    projection = project.tsne(
        matrix, ids, labels,
        input_kind=input_kind,
        perplexity=ts.perplexity,
        learning_rate=ts.learning_rate,
        iterations=ts.iterations,
        early_exaggeration=ts.early_exaggeration,
        exaggeration_iters=ts.exaggeration_iters,
        seed=cfg.seed,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    project.save_coords_csv(projection, out / "coords.csv")
    project.save_kl_csv(projection.kl_trace, out / "kl_trace.csv")
    print(f"wrote {out / 'coords.csv'} and {out / 'kl_trace.csv'}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    projection = project.load_coords_csv(args.coords)
    if projection.n == 0:
        raise DataError(f"no rows in {args.coords}")
    run = evalcluster.kmeans_best(
        projection.coords, k=args.k, seeds=range(cfg.seed, cfg.seed + 10)
    )
    scores = evalcluster.agreement(run.labels, projection.labels)
    print(f"purity={scores.purity:.4f} ari={scores.ari:.4f} nmi={scores.nmi:.4f}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = {
        "k": args.k,
        "kmeans_seed": run.seed,
        "inertia": run.inertia,
        "purity": scores.purity,
        "ari": scores.ari,
        "nmi": scores.nmi,
    }
    (out / "evaluation.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    print(f"wrote {out / 'evaluation.json'}")
    return 0


def _cmd_plot(args) -> int:
    projection = project.load_coords_csv(args.coords)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    plotting.save_svg(projection, out / "plot.svg", title=args.title)
    print(f"wrote {out / 'plot.svg'}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.exists():
        raise DataError(f"no manifest.json in {run_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    print(f"approach: {manifest.get('approach')}")
    print(f"config hash: {manifest.get('config_hash')}")
    dataset = manifest.get("dataset", {})
    print(f"dataset: {dataset.get('path')} ({dataset.get('n_stories')} stories)")
    vocab = manifest.get("vocabulary", {})
    if vocab:
        print(
            f"vocabulary: {vocab.get('before_filtering')} -> "
            f"{vocab.get('after_filtering')} after filtering"
        )
    coverage = manifest.get("coverage")
    if coverage:
        print(
            f"embedding coverage: {coverage['token_coverage']:.4f} of tokens, "
            f"{coverage['affected_story_fraction']:.4f} of stories affected"
        )
    print("stages:")
    for stage in manifest.get("stages", []):
        mark = "cached" if stage.get("cache_hit") else f"{stage.get('seconds', 0):.2f}s"
        print(f"  {stage['name']}: {mark}")
    scores = manifest.get("scores")
    if scores:
        print(
            "scores: purity={purity:.4f} ari={ari:.4f} nmi={nmi:.4f}".format(**scores)
        )
    eval_path = run_dir / "evaluation.json"
    if eval_path.exists():
        evaluation = json.loads(eval_path.read_text(encoding="utf-8"))
        sizes = evaluation.get("cluster_sizes")
        if sizes:
            print(f"cluster sizes: {sizes}")
    return 0


_HANDLERS = {
    "ingest": _cmd_ingest,
    "preprocess": _cmd_preprocess,
    "run": _cmd_run,
    "project": _cmd_project,
    "evaluate": _cmd_evaluate,
    "plot": _cmd_plot,
    "report": _cmd_report,
}


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ConfigError):
        return 2
    if isinstance(exc, NumericError):
        return 4
    if isinstance(exc, (DataError, FileNotFoundError)):
        return 3
    return 3


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except StageError as exc:
        cause = exc.cause if exc.cause is not None else exc
        print(f"error in stage {exc.stage}: {cause}", file=sys.stderr)
        return _exit_code(cause)
    except (StorytopicsError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)


def console_main() -> None:
    sys.exit(main())
