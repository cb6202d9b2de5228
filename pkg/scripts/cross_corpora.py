"""Compare cross-corpus training (SS/VC-only corpus) with matched training on one eval set.

    python3 scripts/cross_corpora.py --out-dir runs/cross
"""

import argparse
import os
import sys
from pathlib import Path

from spoofbench.config import apply_overrides, load_config
from spoofbench.protocol import DEFAULT_EXPERIMENT, ExperimentPlan, ExperimentRunner

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(cfg: dict, out: Path):
    runner = ExperimentRunner(ExperimentPlan.from_config(cfg))
    return runner, runner.run(out)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIGS / "cross_asvspoof_to_btas.cfg"))
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out-dir", default="runs/cross")
    args = ap.parse_args(argv)
    out = Path(args.out_dir)

    cross_cfg = apply_overrides({**DEFAULT_EXPERIMENT, **load_config(args.config)}, args.overrides)
    cross_cfg["experiment.workers"] = str(args.workers)
    # matched: train and evaluate on the eval corpus, with the same features and models
    matched_cfg = {k: v for k, v in cross_cfg.items() if not k.startswith(("corpus.", "eval_corpus."))}
    matched_cfg.update({f"corpus.{k[len('eval_corpus.'):]}": v
                        for k, v in cross_cfg.items() if k.startswith("eval_corpus.")})
    matched_cfg.update({"experiment.name": "matched", "experiment.eval_corpus": "same"})

    runner, cross = run(cross_cfg, out / "cross")
    train_dir = str(runner.cache.root / "corpora" / runner.plan.train.spec.digest())
    train_reads = [p for phase, p in runner.audio_log if phase == "train"]
    clean = all(p.startswith(train_dir) for p in train_reads)
    _, matched = run(matched_cfg, out / "matched")

    print("feature\tvariant\tmatched %\tcross %")
    worse = True
    for row in cross.rows:
        a = matched.overall_average(matched.row(row.feature, row.mask, row.variant))
        b = cross.overall_average(row)
        worse &= b > a
        print(f"{row.feature}\t{row.variant}\t{100 * a:.2f}\t{100 * b:.2f}")
    print(f"train phase read only training audio: {clean}")
    return 0 if clean and worse else 1


if __name__ == "__main__":
    sys.exit(main())
