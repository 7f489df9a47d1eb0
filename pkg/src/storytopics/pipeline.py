"""End-to-end runs: config, staged execution, caching, and the manifest.

A run is ingest -> preprocess -> approach-specific stages -> t-SNE ->
evaluate -> plot. Approach a1 goes through topic proportions, a2 through
flattened per-story embedding blocks, a3 through the all-pairs WMD
matrix. Every stage writes its artifact to a content-keyed cache under
<out>/cache and is skipped when the key already exists; keys chain the
upstream keys with the stage parameters, the dataset digest and the
stopword list, so any upstream change invalidates downstream artifacts.

All files are written atomically (tmp + rename). A lock file guards the
output directory against concurrent runs. manifest.json records config,
library versions, per-stage timings and cache hits, coverage and
empty-story reports, and the agreement scores.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import platform
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy

from . import corpus as corpus_mod
from . import docgeom, embed, evalcluster, lda, plotting, project, textprep, vectorize, wmd
from .errors import ConfigError, OutputDirLockedError, StageError

PACKAGE_VERSION = "0.1.0"


# --- configuration -----------------------------------------------------------

@dataclass
class LdaConfig:
    k: int = 5
    alpha: float | None = None
    beta: float = 0.01
    iterations: int = 1000
    mode: str = "tfidf_weighted"


@dataclass
class EmbeddingConfig:
    source: str = "self_trained"
    path: str | None = None
    dim: int = 50
    window: int = 5
    min_count: int = 5
    negatives: int = 5
    epochs: int = 15
    learning_rate: float = 0.025


@dataclass
class TsneConfig:
    perplexity: float = 30.0
    learning_rate: float = 200.0
    iterations: int = 1000
    early_exaggeration: float = 12.0
    exaggeration_iters: int = 250


@dataclass
class RunConfig:
    dataset: str | None = None
    approach: str = "a1"
    seed: int = 0
    stopwords: str | None = None
    columns: dict | None = None
    lda: LdaConfig = field(default_factory=LdaConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    tsne: TsneConfig = field(default_factory=TsneConfig)

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        cfg = RunConfig()
        nested = {"lda": LdaConfig, "embedding": EmbeddingConfig, "tsne": TsneConfig}
        for key, value in data.items():
            if key in nested:
                if not isinstance(value, dict):
                    raise ConfigError(f"config section {key!r} must be an object")
                section = nested[key]()
                allowed = {f.name for f in dataclasses.fields(section)}
                for sub, subval in value.items():
                    if sub not in allowed:
                        raise ConfigError(f"unknown config key {key}.{sub}")
                    setattr(section, sub, subval)
                setattr(cfg, key, section)
            elif key in ("dataset", "approach", "seed", "stopwords", "columns"):
                setattr(cfg, key, value)
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def validate(self) -> None:
        if self.approach not in ("a1", "a2", "a3"):
            raise ConfigError(f"approach must be a1, a2 or a3, not {self.approach!r}")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        if self.columns is not None and not isinstance(self.columns, dict):
            raise ConfigError("columns must be an object of column-name overrides")
        ld = self.lda
        if ld.k < 1 or ld.iterations < 1 or ld.beta <= 0:
            raise ConfigError("lda needs k >= 1, iterations >= 1, beta > 0")
        if ld.alpha is not None and ld.alpha <= 0:
            raise ConfigError("lda alpha must be positive when given")
        if ld.mode not in ("counts", "tfidf_weighted"):
            raise ConfigError(f"lda mode must be counts or tfidf_weighted, not {ld.mode!r}")
        em = self.embedding
        if em.source not in ("self_trained", "pretrained"):
            raise ConfigError("embedding source must be self_trained or pretrained")
        if em.source == "pretrained" and not em.path:
            raise ConfigError("a pretrained embedding needs a path")
        for name in ("dim", "window", "min_count", "negatives", "epochs"):
            if getattr(em, name) < 1:
                raise ConfigError(f"embedding {name} must be >= 1")
        if em.learning_rate <= 0:
            raise ConfigError("embedding learning_rate must be positive")
        ts = self.tsne
        if ts.perplexity < 1:
            raise ConfigError("tsne perplexity must be >= 1")
        if ts.learning_rate <= 0 or ts.early_exaggeration < 1:
            raise ConfigError("tsne optimizer settings must be positive")
        if ts.iterations < 1 or ts.exaggeration_iters < 0:
            raise ConfigError("tsne iteration counts must be positive")
        if ts.iterations < ts.exaggeration_iters:
            raise ConfigError("tsne iterations must cover the exaggeration phase")


def load_config(path: str | Path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    cfg = RunConfig.from_dict(data)
    cfg.validate()
    return cfg


def _canonical(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(config: RunConfig) -> str:
    return hashlib.sha256(_canonical(config.to_dict()).encode()).hexdigest()


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def pretrained_signature(path: str | Path) -> dict:
    """Cheap identity for very large vector files: size + first-MiB digest."""
    p = Path(path)
    size = p.stat().st_size
    with open(p, "rb") as fh:
        head = fh.read(1 << 20)
    return {"size": size, "head_sha256": hashlib.sha256(head).hexdigest()}


def _stage_key(stage: str, payload: dict) -> str:
    blob = _canonical({"stage": stage, "payload": payload})
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# --- atomic writes and locking -------------------------------------------------

def _atomic_write_bytes(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


def _atomic_write_text(path: Path, text: str) -> None:
    _atomic_write_bytes(path, text.encode("utf-8"))


@contextmanager
def _atomic_path(path: Path):
    """Yield a tmp path; it is renamed over the target only on success."""
    tmp = path.with_name(path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()


@contextmanager
def _output_lock(out_dir: Path):
    lock = out_dir / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputDirLockedError(
            f"{out_dir} is locked by another run (remove {lock} if stale)"
        ) from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield
    finally:
        if lock.exists():
            lock.unlink()


# --- pipeline ------------------------------------------------------------------

class _Recorder:
    def __init__(self, progress):
        self.progress = progress or (lambda stage, message: None)
        self.stages = []

    @contextmanager
    def stage(self, name: str, cache_hit: bool = False):
        self.progress(name, "cached" if cache_hit else "start")
        t0 = time.perf_counter()
        entry = {"name": name, "cache_hit": cache_hit}
        try:
            yield entry
        except StageError:
            raise
        except Exception as exc:
            raise StageError(stage=name, cause=exc) from exc
        entry["seconds"] = round(time.perf_counter() - t0, 6)
        self.stages.append(entry)
        self.progress(name, "done")


def _load_preprocessed(cache_file: Path):
    data = json.loads(cache_file.read_text(encoding="utf-8"))
    stories = [
        textprep.TokenizedStory(story_id=sid, tokens=tuple(toks))
        for sid, toks in zip(data["story_ids"], data["tokens"])
    ]
    return stories, data


def run_pipeline(config: RunConfig, out_dir: str | Path, parallelism: int = 1,
                 progress=None) -> dict:
    """Execute one approach end to end; returns the manifest (also on disk)."""
    config.validate()
    if not config.dataset:
        raise ConfigError("a dataset path is required to run the pipeline")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cache = out / "cache"
    cache.mkdir(exist_ok=True)

    rec = _Recorder(progress)
    manifest: dict = {
        "package_version": PACKAGE_VERSION,
        "python_version": platform.python_version(),
        "library_versions": {
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "numba": numba.__version__,
        },
        "config": config.to_dict(),
        "config_hash": config_hash(config),
        "approach": config.approach,
        "seed": config.seed,
        "parallelism": parallelism,
        "determinism": {
            "seeded": True,
            "pair_results_schedule_independent": True,
        },
    }

    with _output_lock(out):
        # ingest
        with rec.stage("ingest") as entry:
            mapping = corpus_mod.ColumnMapping(**(config.columns or {}))
            corpus = corpus_mod.load_corpus(config.dataset, mapping=mapping)
            dataset_sha = file_sha256(config.dataset)
            entry["n_stories"] = corpus.n
            manifest["dataset"] = {
                "path": str(config.dataset),
                "sha256": dataset_sha,
                "n_stories": corpus.n,
            }
            labels = [lab.value for lab in corpus.labels()]
            story_ids = [str(s.id) for s in corpus.stories]

        # preprocess
        stop_text = (
            Path(config.stopwords).read_text(encoding="utf-8")
            if config.stopwords
            else textprep.bundled_stopwords_text()
        )
        stop_sha = hashlib.sha256(stop_text.encode()).hexdigest()
        pre_key = _stage_key("preprocess", {
            "dataset": dataset_sha,
            "stopwords": stop_sha,
            "columns": config.columns,
        })
        pre_file = cache / f"preprocess_{pre_key}.json"
        pre_hit = pre_file.exists()
        with rec.stage("preprocess", cache_hit=pre_hit) as entry:
            if pre_hit:
                stories, pre_data = _load_preprocessed(pre_file)
            else:
                stopwords = textprep.load_stopwords(config.stopwords)
                stories, vocab_before, vocab_after = textprep.preprocess_corpus(
                    corpus, stopwords=stopwords
                )
                pre_data = {
                    "story_ids": story_ids,
                    "labels": labels,
                    "tokens": [list(s.tokens) for s in stories],
                    "vocab_before": vocab_before.V,
                    "vocab_after": vocab_after.V,
                }
                _atomic_write_text(pre_file, json.dumps(pre_data))
            vocab = textprep.build_vocabulary([s.tokens for s in stories])
            entry["artifact"] = pre_file.name
            entry["vocab_before"] = pre_data["vocab_before"]
            entry["vocab_after"] = pre_data["vocab_after"]
            manifest["vocabulary"] = {
                "before_filtering": pre_data["vocab_before"],
                "after_filtering": pre_data["vocab_after"],
            }
            manifest["empty_stories"] = [
                sid for sid, s in zip(story_ids, stories) if not s.tokens
            ]

        # approach-specific feature building
        table = None
        if config.approach in ("a2", "a3"):
            em = config.embedding
            if em.source == "self_trained":
                emb_key = _stage_key("embed", {
                    "preprocess": pre_key,
                    "params": dataclasses.asdict(em),
                    "seed": config.seed,
                })
                emb_file = cache / f"embed_{emb_key}.bin"
                emb_hit = emb_file.exists()
                with rec.stage("embed", cache_hit=emb_hit) as entry:
                    if emb_hit:
                        table = embed.load_word2vec_binary(emb_file)
                    else:
                        table = embed.train_skipgram(
                            stories,
                            dim=em.dim,
                            window=em.window,
                            min_count=em.min_count,
                            negatives=em.negatives,
                            epochs=em.epochs,
                            learning_rate=em.learning_rate,
                            seed=config.seed,
                        )
                        with _atomic_path(emb_file) as tmp:
                            embed.save_word2vec_binary(table, tmp)
                    entry["artifact"] = emb_file.name
                    entry["vectors"] = len(table)
            else:
                emb_key = _stage_key("embed", {
                    "pretrained": pretrained_signature(em.path),
                })
                with rec.stage("embed") as entry:
                    table = embed.load_word2vec_binary(em.path)
                    entry["artifact"] = str(em.path)
                    entry["vectors"] = len(table)
            with rec.stage("coverage") as entry:
                report = embed.coverage_report(stories, vocab, table)
                manifest["coverage"] = {
                    "token_coverage": report.token_coverage,
                    "affected_story_fraction": report.affected_story_fraction,
                    "embeddable_tokens": report.embeddable_tokens,
                    "matched_how": report.matched_how,
                    "dropped_tokens_total": int(report.dropped_per_story.sum()),
                }

        if config.approach == "a1":
            lda_key = _stage_key("lda", {
                "preprocess": pre_key,
                "params": dataclasses.asdict(config.lda),
                "seed": config.seed,
            })
            lda_file = cache / f"lda_{lda_key}.json"
            lda_hit = lda_file.exists()
            with rec.stage("lda", cache_hit=lda_hit) as entry:
                if lda_hit:
                    model = lda.load_lda(lda_file)
                else:
                    model = lda.fit_lda(
                        stories,
                        vocab,
                        k=config.lda.k,
                        alpha=config.lda.alpha,
                        beta=config.lda.beta,
                        iterations=config.lda.iterations,
                        seed=config.seed,
                        mode=config.lda.mode,
                    )
                    with _atomic_path(lda_file) as tmp:
                        lda.save_lda(model, tmp)
                entry["artifact"] = lda_file.name
            features = model.theta
            upstream_key = lda_key
            tsne_input_kind = "features"
            eval_features = features
        elif config.approach == "a2":
            flat_key = _stage_key("flat", {"embed": emb_key})
            flat_file = cache / f"flat_{flat_key}.bin"
            flat_hit = flat_file.exists()
            with rec.stage("flatten", cache_hit=flat_hit) as entry:
                if flat_hit:
                    features = docgeom.load_flat(flat_file)
                else:
                    flat = docgeom.flatten_corpus(stories, table)
                    features = flat.matrix
                    entry["s"] = flat.s
                    with _atomic_path(flat_file) as tmp:
                        docgeom.save_flat(features, tmp)
                entry["artifact"] = flat_file.name
                entry["width"] = features.shape[1]
            upstream_key = flat_key
            tsne_input_kind = "features"
            eval_features = features
        else:
            wmd_key = _stage_key("wmd", {"embed": emb_key})
            wmd_file = cache / f"wmd_{wmd_key}.wmdm"
            wmd_hit = wmd_file.exists()
            with rec.stage("wmd", cache_hit=wmd_hit) as entry:
                if wmd_hit:
                    matrix = wmd.load_wmdm(wmd_file)
                else:
                    def _wmd_progress(done, total):
                        rec.progress("wmd", f"{done}/{total} pairs")

                    dm = wmd.distance_matrix(
                        stories, table,
                        parallelism=parallelism,
                        progress=_wmd_progress if progress else None,
                    )
                    matrix = dm.matrix
                    with _atomic_path(wmd_file) as tmp:
                        wmd.save_wmdm(matrix, tmp)
                entry["artifact"] = wmd_file.name
            with rec.stage("impute") as entry:
                features = wmd.impute_sentinels(matrix)
                entry["imputed_entries"] = int(np.isnan(matrix).sum())
            upstream_key = wmd_key
            tsne_input_kind = "distances"
            eval_features = None  # derived from the distance matrix below

        # projection
        tsne_key = _stage_key("tsne", {
            "upstream": upstream_key,
            "params": dataclasses.asdict(config.tsne),
            "seed": config.seed,
            "input_kind": tsne_input_kind,
        })
        tsne_file = cache / f"tsne_{tsne_key}.csv"
        kl_file = cache / f"tsne_{tsne_key}_kl.csv"
        tsne_hit = tsne_file.exists() and kl_file.exists()
        with rec.stage("tsne", cache_hit=tsne_hit) as entry:
            if tsne_hit:
                projection = project.load_coords_csv(tsne_file)
                kl_trace = _load_kl_csv(kl_file)
                projection = project.Projection2D(
                    coords=projection.coords,
                    story_ids=projection.story_ids,
                    labels=projection.labels,
                    kl_trace=kl_trace,
                )
            else:
                ts = config.tsne
                projection = project.tsne(
                    features, story_ids, labels,
                    input_kind=tsne_input_kind,
                    perplexity=ts.perplexity,
                    learning_rate=ts.learning_rate,
                    iterations=ts.iterations,
                    early_exaggeration=ts.early_exaggeration,
                    exaggeration_iters=ts.exaggeration_iters,
                    seed=config.seed,
                )
                with _atomic_path(tsne_file) as tmp:
                    project.save_coords_csv(projection, tmp)
                with _atomic_path(kl_file) as tmp:
                    project.save_kl_csv(projection.kl_trace, tmp)
            entry["artifact"] = tsne_file.name
            if projection.kl_trace:
                entry["final_kl"] = projection.kl_trace[-1]

        # evaluation
        with rec.stage("evaluate") as entry:
            if eval_features is None:
                eval_features = evalcluster.classical_mds(features, dims=10)
            run = evalcluster.kmeans_best(
                eval_features, k=config.lda.k,
                seeds=range(config.seed, config.seed + 10),
            )
            scores = evalcluster.agreement(run.labels, labels)
            sizes = np.bincount(run.labels, minlength=config.lda.k)
            evaluation = {
                "k": config.lda.k,
                "kmeans_seed": run.seed,
                "inertia": run.inertia,
                "cluster_sizes": [int(v) for v in sizes],
                "purity": scores.purity,
                "ari": scores.ari,
                "nmi": scores.nmi,
            }
            manifest["scores"] = {
                "purity": scores.purity, "ari": scores.ari, "nmi": scores.nmi,
            }
            entry["purity"] = scores.purity

        # outputs
        with rec.stage("emit") as entry:
            _atomic_write_text(out / "coords.csv", Path(tsne_file).read_text())
            _atomic_write_text(out / "kl_trace.csv", Path(kl_file).read_text())
            svg = plotting.scatter_svg(
                projection, title=f"approach {config.approach}"
            )
            _atomic_write_text(out / "plot.svg", svg)
            _atomic_write_text(
                out / "evaluation.json", json.dumps(evaluation, indent=2)
            )
            entry["outputs"] = ["coords.csv", "kl_trace.csv", "plot.svg",
                                "evaluation.json", "manifest.json"]

        manifest["stages"] = rec.stages
        manifest["outputs"] = {
            "coords": "coords.csv",
            "kl_trace": "kl_trace.csv",
            "plot": "plot.svg",
            "evaluation": "evaluation.json",
        }
        _atomic_write_text(out / "manifest.json", json.dumps(manifest, indent=2))
    return manifest


def _load_kl_csv(path: Path) -> tuple[float, ...]:
    values = []
    with open(path, newline="", encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            if line.strip():
                values.append(float(line.split(",")[1]))
    return tuple(values)
