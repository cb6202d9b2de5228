"""Write one spectrogram image per attack tag (plus genuine) from a corpus manifest.

    python3 scripts/export_spectrograms.py CORPUS_DIR --out-dir runs/spectrograms
"""

import argparse
import sys
from pathlib import Path

from spoofbench.cli import main as cli_main
from spoofbench.protocol import parse_manifest


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("corpus", help="corpus directory or manifest.tsv")
    ap.add_argument("--subset", default="eval")
    ap.add_argument("--out-dir", default="runs/spectrograms")
    args = ap.parse_args(argv)
    path = Path(args.corpus)
    m = parse_manifest(path / "manifest.tsv" if path.is_dir() else path)
    first = {}
    for e in sorted(m.subset(args.subset), key=lambda e: e.utt_id):
        first.setdefault("genuine" if e.label.is_genuine else e.label.tag, e)
    wavs = [str(m.audio_path(e)) for e in first.values()]
    return cli_main(["spectrogram", *wavs, "--out-dir", args.out_dir])


if __name__ == "__main__":
    sys.exit(main())
