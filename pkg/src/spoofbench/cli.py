"""Command-line entry point: ``spoofbench <verb> [options]``.

Verbs
    synth        build a synthetic corpus (wav files + manifest)
    extract      static features for the utterances of a manifest subset
    train        natural and spoof GMMs for one training mask
    score        LLR scores of a manifest subset against a trained model pair
    eval         pooled and per-attack EER of a score file
    experiment   the full feature x mask x variant matrix
    spectrogram  grayscale image and dB matrix of a wav file

Every verb reads the same flat ``key=value`` config (``--config``) with
``--set key=value`` overrides, and writes ``config.cfg`` (the resolved
config, replayable with ``--config``) and ``run-<verb>.json`` (seed,
versions, timing, outcome) into ``--out-dir``.

Exit status: 0 success, 1 runtime failure, 2 usage error, 3 config or
validation error. The last stderr line of a failure reads
``error[<category>]: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .audio import export_spectrogram, load_signal
from .config import ConfigError, apply_overrides, dump_config, load_config, section
from .evaluate import Trial, eer_rocch, read_scores, write_scores
from .features import FeatureConfig, apply_dynamics, extract_static
from .features.config import FeatureMatrix
from .features.io import read_features, write_features
from .gmm import ModelPair, llr_score, read_model, train_gmm, write_model
from .protocol import (DEFAULT_EXPERIMENT, ExperimentPlan, ExperimentRunner, ManifestError,
                       PlanError, TrainMask, TrainingConfigError, parse_manifest, render_table,
                       select_training)
from .protocol.cache import Cache

log = logging.getLogger("spoofbench")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, EXIT_CONFIG = 0, 1, 2, 3
VERBS = ("synth", "extract", "train", "score", "eval", "experiment", "spectrogram")

# Defaults for single-step verbs; experiment defaults live in the protocol package.
STEP_DEFAULTS = {
    "feature.kind": "MFCC",
    "feature.variant": "Static",
    "gmm.components": "32",
    "gmm.iterations": "10",
    "experiment.seed": "42",
}


class UsageError(Exception):
    pass


# -- config helpers ------------------------------------------------------

def feature_config(cfg: dict) -> FeatureConfig:
    """``feature.kind`` and ``feature.variant`` plus per-kind options ``feature.<kind>.*``."""
    kind = cfg.get("feature.kind", "MFCC").upper()
    opts = section(cfg, f"feature.{kind.lower()}")
    opts["kind"] = kind
    opts["variant"] = cfg.get("feature.variant", "Static")
    try:
        return FeatureConfig.from_mapping(opts)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"feature config: {exc}") from None


def _int(cfg, key):
    try:
        return int(cfg[key])
    except (KeyError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {cfg.get(key)!r}") from None


def _manifest(path):
    if path is None:
        raise UsageError("--manifest is required")
    p = Path(path)
    return parse_manifest(p / "manifest.tsv" if p.is_dir() else p)


def _feature_path(feat_dir: Path, utt_id: str) -> Path:
    return feat_dir / f"{utt_id}.feat"


def _load_features(feat_dir: Path, utt_id: str, cfg: FeatureConfig) -> FeatureMatrix:
    path = _feature_path(feat_dir, utt_id)
    try:
        data, digest = read_features(path)
    except OSError as exc:
        raise OSError(f"missing features for {utt_id}: {exc}") from None
    if digest != cfg.static().digest():
        raise ConfigError(f"{path} was extracted with a different feature config")
    return apply_dynamics(FeatureMatrix(data, cfg.static()), cfg.variant, cfg.delta_ctx)


# -- verbs ---------------------------------------------------------------

def cmd_synth(args, cfg, out: Path) -> dict:
    from .synthcorpus import CorpusSpec, build_corpus

    try:
        spec = CorpusSpec.from_config(cfg)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"corpus config: {exc}") from None
    m = build_corpus(spec, out, workers=args.workers)
    print(f"wrote {len(m.entries)} utterances to {out} (corpus digest {spec.digest()})")
    return {"utterances": len(m.entries), "corpus_digest": spec.digest()}


def cmd_extract(args, cfg, out: Path) -> dict:
    fcfg = feature_config(cfg)
    m = _manifest(args.manifest)
    entries = sorted((e for s in args.subset.split(",") for e in m.subset(s.strip())),
                     key=lambda e: e.utt_id)
    if not entries:
        raise ConfigError(f"no {args.subset} utterances in {m.corpus}")
    digest = fcfg.static().digest()
    for e in entries:
        fm = extract_static(load_signal(m.audio_path(e), fcfg.sample_rate), fcfg.static())
        write_features(_feature_path(out, e.utt_id), fm.data, digest)
    print(f"extracted {fcfg.kind} features for {len(entries)} utterances into {out}")
    return {"utterances": len(entries), "feature_digest": digest}


def cmd_train(args, cfg, out: Path) -> dict:
    fcfg = feature_config(cfg)
    m = _manifest(args.manifest)
    if args.features is None:
        raise UsageError("--features is required (output directory of `extract`)")
    mask = TrainMask.parse(cfg.get("train.mask", "full"))
    K, iters, seed = (_int(cfg, k) for k in ("gmm.components", "gmm.iterations", "experiment.seed"))
    natural, spoof = select_training(m, mask, args.subset)
    feat_dir = Path(args.features)
    for role, pool in (("natural", natural), ("spoof", spoof)):
        data = np.vstack([_load_features(feat_dir, e.utt_id, fcfg).data for e in pool])
        model = train_gmm(data, K, iters, seed, feature_digest=fcfg.digest(), descriptor=role)
        write_model(out / f"{role}.gmm", model)
        log.info("trained %s model on %d frames from %d utterances", role, len(data), len(pool))
    print(f"wrote natural.gmm and spoof.gmm (mask {mask.name}) to {out}")
    return {"mask": mask.code, "natural": len(natural), "spoof": len(spoof)}


def cmd_score(args, cfg, out: Path) -> dict:
    fcfg = feature_config(cfg)
    m = _manifest(args.manifest)
    if args.features is None or args.models is None:
        raise UsageError("--features and --models are required")
    mdir = Path(args.models)
    pair = ModelPair(read_model(mdir / "natural.gmm"), read_model(mdir / "spoof.gmm"))
    if pair.natural.feature_digest != fcfg.digest():
        raise ConfigError("models were trained with a different feature config")
    feat_dir = Path(args.features)
    trials = []
    for e in sorted(m.subset(args.subset), key=lambda e: e.utt_id):
        X = _load_features(feat_dir, e.utt_id, fcfg)
        label = "genuine" if e.label.is_genuine else "spoof"
        trials.append(Trial(e.utt_id, label, e.label.tag, llr_score(pair, X)))
    if not trials:
        raise ConfigError(f"no {args.subset} utterances in {m.corpus}")
    write_scores(out / "scores.tsv", trials)
    print(f"scored {len(trials)} trials into {out / 'scores.tsv'}")
    return {"trials": len(trials)}


def cmd_eval(args, cfg, out: Path) -> dict:
    if not args.inputs:
        raise UsageError("eval needs a score file")
    scores = read_scores(args.inputs[0])
    res = {"pooled": eer_rocch(scores)}
    res.update({tag: eer_rocch(ss) for tag, ss in scores.per_attack().items()})
    lines = [f"EER {100 * res['pooled']:.2f}%"]
    lines += [f"{tag}\tEER {100 * v:.2f}%" for tag, v in res.items() if tag != "pooled"]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    (out / "eer.txt").write_text(text)
    return {"eer": res}


def cmd_experiment(args, cfg, out: Path) -> dict:
    try:
        plan = ExperimentPlan.from_config(cfg)
    except PlanError as exc:
        raise ConfigError(str(exc)) from None
    runner = ExperimentRunner(plan, Cache())
    table = runner.run(out)
    sys.stdout.write(render_table(table, "markdown"))
    failed = [r for r in table.rows if r.failed]
    if failed:
        raise RuntimeError(f"{len(failed)} of {len(table.rows)} cells failed, see {out / 'run.json'}")
    return {"cells": len(table.rows), "cache_hits": runner.cache.hits,
            "cache_misses": runner.cache.misses}


def cmd_spectrogram(args, cfg, out: Path) -> dict:
    if not args.inputs:
        raise UsageError("spectrogram needs at least one wav file")
    floor = float(cfg.get("spectrogram.floor_db", -100.0))
    written = []
    for src in args.inputs:
        sig = load_signal(src, int(cfg.get("spectrogram.sample_rate", 16000)))
        written += [str(p) for p in export_spectrogram(sig, out / Path(src).stem, floor)]
    print("\n".join(written))
    return {"files": written}


COMMANDS = {
    "synth": cmd_synth, "extract": cmd_extract, "train": cmd_train, "score": cmd_score,
    "eval": cmd_eval, "experiment": cmd_experiment, "spectrogram": cmd_spectrogram,
}


# -- plumbing ------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spoofbench", description="Spoofing countermeasure benchmark harness.")
    p.add_argument("--version", action="version", version=f"spoofbench {__version__}")
    p.add_argument("verb", choices=VERBS)
    p.add_argument("inputs", nargs="*", help="score file (eval) or wav files (spectrogram)")
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="sets experiment.seed and corpus.seed")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out-dir", default="spoofbench-out", help="output directory")
    p.add_argument("--manifest", help="corpus manifest (file or corpus directory)")
    p.add_argument("--subset", default=None,
                   help="manifest subset; extract accepts a comma list such as train,eval")
    p.add_argument("--features", help="feature directory written by `extract`")
    p.add_argument("--models", help="model directory written by `train`")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def resolve_config(args) -> dict:
    base = dict(DEFAULT_EXPERIMENT) if args.verb == "experiment" else dict(STEP_DEFAULTS)
    if args.config:
        base.update(load_config(args.config))
    cfg = apply_overrides(base, args.overrides)
    if args.seed is not None:
        cfg["experiment.seed"] = str(args.seed)
        cfg["corpus.seed"] = str(args.seed)
    if args.verb == "experiment":
        cfg["experiment.workers"] = str(args.workers)
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg


def _write_run_log(out: Path, record: dict) -> None:
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"run-{record['verb']}.json").write_text(json.dumps(record, indent=2, sort_keys=True, default=str) + "\n")
    except OSError as exc:
        log.warning("could not write run log: %s", exc)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"error[usage]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.subset is None:
        args.subset = "eval" if args.verb == "score" else "train"

    out = Path(args.out_dir)
    record = {"verb": args.verb, "argv": argv, "versions": {
        "spoofbench": __version__, "python": platform.python_version(),
        "numpy": np.__version__, "scipy": scipy.__version__}}
    t0 = time.perf_counter()
    code, category = EXIT_OK, None
    try:
        cfg = resolve_config(args)
        record["config"] = cfg
        record["seed"] = cfg.get("experiment.seed")
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.cfg").write_text(dump_config(cfg))
        record["result"] = COMMANDS[args.verb](args, cfg, out)
    except UsageError as exc:
        code, category, msg = EXIT_USAGE, "usage", str(exc)
    except (ConfigError, PlanError, TrainingConfigError, ManifestError) as exc:
        code, category, msg = EXIT_CONFIG, "config", str(exc)
    except Exception as exc:  # anything else is a runtime failure of the pipeline
        log.debug("runtime failure", exc_info=True)
        code, category, msg = EXIT_RUNTIME, "runtime", f"{type(exc).__name__}: {exc}"
    record["elapsed_s"] = round(time.perf_counter() - t0, 3)
    record["exit_code"] = code
    if category:
        record["error"] = {"category": category, "message": msg}
        print(f"error[{category}]: {msg}", file=sys.stderr)
    if code != EXIT_USAGE:
        _write_run_log(out, record)
    return code


if __name__ == "__main__":
    sys.exit(main())
