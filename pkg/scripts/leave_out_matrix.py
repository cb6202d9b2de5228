"""Run the leave-one-class-out matrix and compare each excluded class with full training.

    python3 scripts/leave_out_matrix.py --out-dir runs/matrix [--config configs/quick.cfg]
"""

import argparse
import os
import sys
from pathlib import Path

from spoofbench.config import apply_overrides, load_config
from spoofbench.protocol import DEFAULT_EXPERIMENT, ExperimentPlan, ExperimentRunner, render_table
from spoofbench.protocol.cache import Cache

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
LEAVE_OUT = (("REPLAY", "011"), ("SS", "101"), ("VC", "110"))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(CONFIGS / "btas_matrix.cfg"))
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--out-dir", default="runs/matrix")
    args = ap.parse_args(argv)

    cfg = apply_overrides({**DEFAULT_EXPERIMENT, **load_config(args.config)}, args.overrides)
    cfg["experiment.workers"] = str(args.workers)
    runner = ExperimentRunner(ExperimentPlan.from_config(cfg))
    table = runner.run(args.out_dir)
    print(render_table(table, "markdown"))
    print()
    print("variant\tfeature\tclass\tfull %\tleft out %\tdegrades")
    holds = True
    for variant in runner.plan.variants:
        for feature in (f.kind for f in runner.plan.features):
            full = table.row(feature, "111", variant)
            for cls, mask in LEAVE_OUT:
                if not any(m.code == mask for m in runner.plan.masks):
                    continue
                a = table.class_average(full, cls)
                b = table.class_average(table.row(feature, mask, variant), cls)
                holds &= variant != "Static" or b >= a
                print(f"{variant}\t{feature}\t{cls}\t{100 * a:.2f}\t{100 * b:.2f}\t{'yes' if b >= a else 'no'}")
    print(f"\ntimings: { {k: round(v, 1) for k, v in runner.timings.items()} }")
    return 0 if holds else 1


if __name__ == "__main__":
    sys.exit(main())
