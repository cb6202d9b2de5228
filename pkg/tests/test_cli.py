import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from spoofbench.audio import Signal, write_wav
from spoofbench.cli import main
from spoofbench.synthcorpus import BTAS_ATTACKS

SMALL_GMM = ["--set", "gmm.components=2", "--set", "gmm.iterations=3"]


def write_scores_file(path, genuine, spoof):
    rows = [f"g{i}\tgenuine\t-\t{v!r}" for i, v in enumerate(genuine)]
    rows += [f"s{i}\tspoof\tR{i % 2 + 1}\t{v!r}" for i, v in enumerate(spoof)]
    path.write_text("\n".join(rows) + "\n")
    return path


def test_eval_perfect_separation(tmp_path, capsys):
    scores = write_scores_file(tmp_path / "s.tsv", [2.0, 3.0, 4.0], [-1.0, 0.0, 1.0])
    assert main(["eval", str(scores), "--out-dir", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "EER 0.00%"
    assert "R1\tEER 0.00%" in out
    log = json.loads((tmp_path / "o" / "run-eval.json").read_text())
    assert log["exit_code"] == 0 and "numpy" in log["versions"] and "elapsed_s" in log


@pytest.mark.parametrize("argv", [["frobnicate"], ["eval", "--bogus-flag"], []])
def test_usage_errors(argv, capsys):
    assert main(argv) == 2
    assert "error[usage]" in capsys.readouterr().err


def test_missing_required_input_is_usage_error(tmp_path, capsys):
    assert main(["eval", "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize("extra", [["--set", "experiment.masks=none_of_these"],
                                   ["--set", "gmm.components=zero"],
                                   ["--set", "experiment.variants=Cubic"],
                                   ["--set", "novalue"],
                                   ["--config", "/nonexistent/x.cfg"]])
def test_config_errors(tmp_path, extra, capsys):
    assert main(["experiment", "--out-dir", str(tmp_path), *extra]) == 3
    err = capsys.readouterr().err
    assert "error[config]" in err
    log = json.loads((tmp_path / "run-experiment.json").read_text())
    assert log["error"]["category"] == "config"


def test_runtime_error(tmp_path, capsys):
    assert main(["eval", str(tmp_path / "missing.tsv"), "--out-dir", str(tmp_path)]) == 1
    assert "error[runtime]" in capsys.readouterr().err


def test_score_file_without_trials_fails(tmp_path):
    (tmp_path / "e.tsv").write_text("")
    assert main(["eval", str(tmp_path / "e.tsv"), "--out-dir", str(tmp_path)]) == 1


def test_synth_then_experiment_replays_from_snapshot(tmp_path, cache_env):
    corpus = tmp_path / "corpus"
    sets = ["--set", "corpus.genuine.train=6", "--set", "corpus.genuine.dev=0",
            "--set", "corpus.genuine.eval=4", "--set", "corpus.per_attack.train=2",
            "--set", "corpus.per_attack.dev=0", "--set", "corpus.per_attack.eval=1",
            "--set", "corpus.eval_only=1", "--set", "corpus.dur_min=0.3",
            "--set", "corpus.dur_max=0.4"]
    assert main(["synth", "--out-dir", str(corpus), "--seed", "3", *sets]) == 0
    assert (corpus / "manifest.tsv").exists()

    exp = ["experiment", "--set", f"experiment.train_corpus={corpus}",
           "--set", "experiment.features=MFCC", "--set", "experiment.masks=full,no_ss",
           "--set", "experiment.variants=Static", *SMALL_GMM]
    assert main([*exp, "--out-dir", str(tmp_path / "run1")]) == 0
    first = (tmp_path / "run1" / "results.tsv").read_text()
    assert len(first.splitlines()) == 3
    assert (tmp_path / "run1" / "results.md").exists()

    snapshot = tmp_path / "run1" / "config.cfg"
    assert main(["experiment", "--config", str(snapshot), "--out-dir", str(tmp_path / "run2")]) == 0
    assert (tmp_path / "run2" / "results.tsv").read_text() == first
    assert (tmp_path / "run2" / "config.cfg").read_text() == snapshot.read_text()


def _cached(root, kind):
    return {p.read_bytes() for p in (root / kind).rglob("*") if p.is_file()}


def test_manual_pipeline_equals_experiment_cell(tmp_path, tiny_corpus, cache_env):
    manifest_bytes = (tiny_corpus / "manifest.tsv").read_bytes()
    common = ["--manifest", str(tiny_corpus), "--seed", "5", *SMALL_GMM,
              "--set", "feature.kind=MFCC", "--set", "feature.variant=StaticDelta"]
    feats, models, scores = tmp_path / "feats", tmp_path / "models", tmp_path / "scores"
    assert main(["extract", "--subset", "train,eval", "--out-dir", str(feats), *common]) == 0
    assert main(["train", "--features", str(feats), "--out-dir", str(models),
                 "--set", "train.mask=no_vc", *common]) == 0
    assert main(["score", "--features", str(feats), "--models", str(models),
                 "--out-dir", str(scores), *common]) == 0

    assert main(["experiment", "--out-dir", str(tmp_path / "exp"), "--seed", "5", *SMALL_GMM,
                 "--set", f"experiment.train_corpus={tiny_corpus}",
                 "--set", "experiment.features=MFCC", "--set", "experiment.masks=no_vc",
                 "--set", "experiment.variants=StaticDelta"]) == 0

    # the cell never reads the VC training utterances it leaves out
    vc_train = {f"train_{a.tag}_" for a in BTAS_ATTACKS if a.cls == "VC"}
    used = [p for p in feats.glob("*.feat") if p.name[:9] not in vc_train]
    assert len(used) < len(list(feats.glob("*.feat")))
    assert {p.read_bytes() for p in used} <= _cached(cache_env, "features")
    cached_models = _cached(cache_env, "models")
    assert (models / "natural.gmm").read_bytes() in cached_models
    assert (models / "spoof.gmm").read_bytes() in cached_models
    assert (scores / "scores.tsv").read_bytes() in _cached(cache_env, "scores")
    # inputs are left untouched
    assert (tiny_corpus / "manifest.tsv").read_bytes() == manifest_bytes


def test_feature_config_mismatch_is_config_error(tmp_path, tiny_corpus):
    feats = tmp_path / "feats"
    assert main(["extract", "--manifest", str(tiny_corpus), "--out-dir", str(feats),
                 "--set", "feature.kind=MFCC"]) == 0
    assert main(["train", "--manifest", str(tiny_corpus), "--features", str(feats),
                 "--out-dir", str(tmp_path / "m"), "--set", "feature.kind=MFCC",
                 "--set", "feature.mfcc.n_filters=24", *SMALL_GMM]) == 3


def test_spectrogram_verb(tmp_path):
    wav = tmp_path / "tone.wav"
    t = np.arange(8000) / 16000
    write_wav(wav, Signal(0.5 * np.sin(2 * np.pi * 440 * t), 16000))
    assert main(["spectrogram", str(wav), "--out-dir", str(tmp_path / "spec")]) == 0
    assert (tmp_path / "spec" / "tone.pgm").read_bytes().startswith(b"P5\n")
    assert (tmp_path / "spec" / "tone.tsv").exists()


def test_module_entry_point(tmp_path):
    scores = write_scores_file(tmp_path / "s.tsv", [1.0, -1.0], [-2.0, 0.0])
    proc = subprocess.run([sys.executable, "-m", "spoofbench", "eval", str(scores),
                           "--out-dir", str(tmp_path / "o")], capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "EER 25.00%"
    proc = subprocess.run([sys.executable, "-m", "spoofbench", "nope"], capture_output=True)
    assert proc.returncode == 2
    assert Path(tmp_path / "o" / "config.cfg").exists()
