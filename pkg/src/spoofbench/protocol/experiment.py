"""Leave-one-class-out and cross-corpora experiment runner.

A run has two phases. Training extracts features for the training pools
and fits every natural/spoof model. Evaluation then extracts evaluation
features and scores them. Evaluation audio is never opened during the
training phase; ``ExperimentRunner.audio_log`` records every read with its
phase so this can be checked.
"""

from __future__ import annotations

import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..audio import load_signal
from ..config import as_list, dump_config, section
from ..evaluate import ScoreSet, Trial, eer_rocch, read_scores, write_scores
from ..features import FeatureConfig, apply_dynamics, extract_static
from ..features.config import FeatureMatrix
from ..features.io import read_features, write_features
from ..gmm import ModelPair, llr_score, read_model, train_gmm, write_model
from .cache import Cache, content_key, file_digest
from .manifest import Manifest, parse_manifest
from .masks import TrainMask, select_training
from .table import ResultRow, ResultTable, emit_table

log = logging.getLogger(__name__)

DEFAULT_EXPERIMENT = {
    "experiment.name": "synth_btas_matrix",
    "experiment.train_corpus": "synth",
    "experiment.eval_corpus": "same",
    "experiment.train_subset": "train",
    "experiment.eval_subset": "eval",
    "experiment.features": "MFCC,CQCC",
    "experiment.masks": "full,no_replay,no_ss,no_vc",
    "experiment.variants": "Static,StaticDelta,DeltaOnly",
    "experiment.seed": "42",
    "gmm.components": "32",
    "gmm.iterations": "10",
}


class PlanError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusRef:
    """Either a manifest on disk or a synthetic corpus spec built into the cache."""

    manifest: Path | None = None
    spec: object = None

    def describe(self) -> str:
        return str(self.manifest) if self.manifest else f"synth:{self.spec.digest()}"


@dataclass(frozen=True)
class ExperimentPlan:
    name: str
    train: CorpusRef
    eval: CorpusRef
    features: tuple
    masks: tuple
    variants: tuple
    components: int = 512
    iterations: int = 10
    seed: int = 42
    train_subset: str = "train"
    eval_subset: str = "eval"
    workers: int = 1
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def cross_corpora(self) -> bool:
        return self.train != self.eval

    @classmethod
    def from_config(cls, cfg: dict) -> "ExperimentPlan":
        from ..synthcorpus import CorpusSpec

        merged = dict(cfg)
        exp = section(merged, "experiment")
        try:
            def corpus_ref(value, spec_prefix):
                if value == "synth":
                    spec_cfg = section(merged, spec_prefix)
                    return CorpusRef(spec=CorpusSpec.from_config(spec_cfg))
                p = Path(value)
                return CorpusRef(manifest=p / "manifest.tsv" if p.is_dir() else p)

            train = corpus_ref(exp.get("train_corpus", "synth"), "corpus")
            ev_val = exp.get("eval_corpus", "same")
            ev = train if ev_val == "same" else corpus_ref(ev_val, "eval_corpus")
            feats = []
            for kind in as_list(exp.get("features", "MFCC,CQCC")):
                kind = kind.upper()
                opts = section(merged, f"feature.{kind.lower()}")
                opts["kind"] = kind
                feats.append(FeatureConfig.from_mapping(opts).static())
            masks = tuple(TrainMask.parse(m) for m in as_list(exp.get("masks", "full")))
            variants = tuple(as_list(exp.get("variants", "Static")))
            for v in variants:
                FeatureConfig(variant=v)
            gmm = section(merged, "gmm")
            plan = cls(
                name=exp.get("name", "experiment"), train=train, eval=ev,
                features=tuple(feats), masks=masks, variants=variants,
                components=int(gmm.get("components", 512)),
                iterations=int(gmm.get("iterations", 10)),
                seed=int(exp.get("seed", 42)),
                train_subset=exp.get("train_subset", "train"),
                eval_subset=exp.get("eval_subset", "eval"),
                workers=int(exp.get("workers", 1)),
                raw=merged,
            )
        except (KeyError, ValueError) as exc:
            raise PlanError(str(exc)) from exc
        if plan.components < 1 or plan.iterations < 0:
            raise PlanError("gmm.components must be >= 1 and gmm.iterations >= 0")
        if not plan.features or not plan.masks or not plan.variants:
            raise PlanError("plan needs at least one feature, mask and variant")
        return plan


def materialize_corpus(ref: CorpusRef, cache: Cache, workers: int = 1) -> Manifest:
    if ref.manifest is not None:
        return parse_manifest(ref.manifest)
    from ..synthcorpus import build_corpus

    out = cache.root / "corpora" / ref.spec.digest()
    marker = out / ".complete"
    if not marker.exists():
        log.info("building synthetic corpus %s in %s", ref.spec.name, out)
        build_corpus(ref.spec, out, workers=workers)
        marker.write_text(ref.spec.digest())
    return parse_manifest(out / "manifest.tsv", corpus=ref.spec.name)


def _extract_job(args):
    audio_path, cfg = args
    sig = load_signal(audio_path, cfg.sample_rate)
    fm = extract_static(sig, cfg)
    return fm.data


class ExperimentRunner:
    def __init__(self, plan: ExperimentPlan, cache: Cache | None = None):
        self.plan = plan
        self.cache = cache or Cache()
        self.audio_log = []
        self.timings = {}
        self._phase = "setup"
        self._audio_sha = {}
        self._static = {}

    # -- features -------------------------------------------------------
    def _audio_key(self, manifest, entry) -> str:
        path = manifest.audio_path(entry)
        if path not in self._audio_sha:
            self.audio_log.append((self._phase, str(path)))
            self._audio_sha[path] = file_digest(path)
        return self._audio_sha[path]

    def feature_key(self, manifest, entry, cfg: FeatureConfig) -> str:
        return content_key("feat", cfg.static().digest(), self._audio_key(manifest, entry))

    def _ensure_static(self, manifest, entries, cfg: FeatureConfig) -> list:
        keys = [self.feature_key(manifest, e, cfg) for e in entries]
        todo = [(k, e) for k, e in zip(keys, entries)
                if k not in self._static and self.cache.lookup("features", k, "feat") is None]
        seen = set()
        todo = [(k, e) for k, e in todo if not (k in seen or seen.add(k))]
        if todo:
            jobs = [(manifest.audio_path(e), cfg.static()) for _, e in todo]
            for _, e in todo:
                self.audio_log.append((self._phase, str(manifest.audio_path(e))))
            if self.plan.workers > 1 and len(jobs) > 1:
                with ProcessPoolExecutor(self.plan.workers) as ex:
                    results = list(ex.map(_extract_job, jobs, chunksize=4))
            else:
                results = [_extract_job(j) for j in jobs]
            digest = cfg.static().digest()
            for (k, _), data in zip(todo, results):
                self.cache.store("features", k, "feat", lambda p, d=data: write_features(p, d, digest))
        return keys

    def static_features(self, key: str, cfg: FeatureConfig) -> FeatureMatrix:
        if key not in self._static:
            data, _ = read_features(self.cache.path("features", key, "feat"))
            self._static[key] = FeatureMatrix(data, cfg.static())
        return self._static[key]

    def features(self, key: str, cfg: FeatureConfig, variant: str) -> FeatureMatrix:
        return apply_dynamics(self.static_features(key, cfg), variant, cfg.delta_ctx)

    # -- models ---------------------------------------------------------
    def model_key(self, feat_keys, cfg: FeatureConfig) -> str:
        p = self.plan
        return content_key("gmm", cfg.digest(), p.components, p.iterations, p.seed, *feat_keys)

    def get_model(self, manifest, entries, cfg: FeatureConfig, role: str):
        keys = self._ensure_static(manifest, entries, cfg)
        mkey = self.model_key(keys, cfg)
        hit = self.cache.lookup("models", mkey, "gmm")
        if hit is not None:
            return mkey, read_model(hit)
        data = np.vstack([self.features(k, cfg, cfg.variant).data for k in keys])
        model = train_gmm(data, self.plan.components, self.plan.iterations, self.plan.seed,
                          feature_digest=cfg.digest(), descriptor=role)
        self.cache.store("models", mkey, "gmm", lambda pth: write_model(pth, model))
        return mkey, read_model(self.cache.path("models", mkey, "gmm"))

    # -- run ------------------------------------------------------------
    def cells(self):
        for cfg in self.plan.features:
            for mask in self.plan.masks:
                for variant in self.plan.variants:
                    yield cfg, mask, variant

    def run(self, out_dir=None) -> ResultTable:
        p = self.plan
        t0 = time.perf_counter()
        self._phase = "setup"
        train_m = materialize_corpus(p.train, self.cache, p.workers)
        eval_m = train_m if p.eval == p.train else materialize_corpus(p.eval, self.cache, p.workers)
        self.timings["corpus"] = time.perf_counter() - t0

        tags = eval_m.tags(p.eval_subset)
        table = ResultTable(tags, eval_m.tag_classes())
        pairs = {}

        self._phase = "train"
        t1 = time.perf_counter()
        for cfg, mask, variant in self.cells():
            row = ResultRow(cfg.kind, mask.code, variant)
            table.rows.append(row)
            vcfg = cfg.with_variant(variant)
            try:
                natural, spoof = select_training(train_m, mask, p.train_subset)
                nk, nat = self.get_model(train_m, natural, vcfg, "natural")
                sk, spf = self.get_model(train_m, spoof, vcfg, f"spoof:{mask.code}")
                pairs[id(row)] = (nk, sk, ModelPair(nat, spf))
            except Exception as exc:  # a failed cell must not stop the others
                log.exception("training failed for %s/%s/%s", cfg.kind, mask.code, variant)
                row.error = f"{type(exc).__name__}: {exc}"
        self.timings["train"] = time.perf_counter() - t1

        self._phase = "eval"
        t2 = time.perf_counter()
        eval_entries = sorted(eval_m.subset(p.eval_subset), key=lambda e: e.utt_id)
        for row in table.rows:
            if row.failed:
                continue
            cfg = next(c for c in p.features if c.kind == row.feature)
            vcfg = cfg.with_variant(row.variant)
            try:
                if not eval_entries:
                    raise PlanError(f"no {p.eval_subset} utterances in {eval_m.corpus}")
                nk, sk, pair = pairs[id(row)]
                scores = self.score(eval_m, eval_entries, vcfg, nk, sk, pair)
                for tag, ss in scores.per_attack().items():
                    row.eer[tag] = eer_rocch(ss)
            except Exception as exc:
                log.exception("evaluation failed for %s/%s/%s", row.feature, row.mask, row.variant)
                row.error = f"{type(exc).__name__}: {exc}"
        self.timings["eval"] = time.perf_counter() - t2
        self.timings["total"] = time.perf_counter() - t0

        if out_dir is not None:
            self.write_outputs(table, out_dir)
        return table

    def score(self, manifest, entries, cfg, nat_key, spoof_key, pair) -> ScoreSet:
        keys = self._ensure_static(manifest, entries, cfg)
        skey = content_key("scores", nat_key, spoof_key, cfg.digest(), *keys)
        hit = self.cache.lookup("scores", skey, "tsv")
        if hit is not None:
            return read_scores(hit)
        trials = []
        for e, k in zip(entries, keys):
            X = self.features(k, cfg, cfg.variant)
            label = "genuine" if e.label.is_genuine else "spoof"
            trials.append(Trial(e.utt_id, label, e.label.tag, llr_score(pair, X)))
        path = self.cache.store("scores", skey, "tsv", lambda pth: write_scores(pth, trials))
        return read_scores(path)

    def write_outputs(self, table: ResultTable, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_table(table, "tsv", out / "results.tsv")
        emit_table(table, "markdown", out / "results.md")
        (out / "plan.cfg").write_text(dump_config(self.plan.raw))
        info = {
            "name": self.plan.name,
            "seed": self.plan.seed,
            "train_corpus": self.plan.train.describe(),
            "eval_corpus": self.plan.eval.describe(),
            "cache": str(self.cache.root),
            "cache_hits": self.cache.hits,
            "cache_misses": self.cache.misses,
            "timings_s": {k: round(v, 3) for k, v in self.timings.items()},
            "versions": {"spoofbench": __version__, "numpy": np.__version__,
                         "python": platform.python_version()},
            "failed_cells": [[r.feature, r.mask, r.variant, r.error] for r in table.rows if r.failed],
        }
        (out / "run.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")


def run_experiment(plan: ExperimentPlan, cache: Cache | None = None, out_dir=None) -> ResultTable:
    return ExperimentRunner(plan, cache).run(out_dir)
