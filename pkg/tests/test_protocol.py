import os
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import TINY_SPEC
from spoofbench.config import ConfigError, apply_overrides, dump_config, parse_config_text
from spoofbench.protocol import (AttackLabel, Entry, ExperimentPlan, ExperimentRunner, Manifest,
                                 ManifestError, PlanError, ResultRow, ResultTable, TrainMask,
                                 TrainingConfigError, emit_table, parse_manifest, render_table,
                                 select_training, write_manifest)
from spoofbench.protocol.cache import Cache, content_key, default_cache_dir

BTAS_CLASSES = {"R1": "REPLAY", "R2": "REPLAY", "R3": "REPLAY", "R4": "REPLAY", "R5": "SS",
                "R6": "SS", "R7": "VC", "R8": "VC", "R9": "REPLAY", "R10": "REPLAY"}


def write_rows(path, rows, header=True):
    lines = ["utt_id\tpath\tsubset\tclass\ttag"] if header else []
    lines += ["\t".join(r) for r in rows]
    path.write_text("\n".join(lines) + "\n")
    return path


def btas_manifest():
    entries = [Entry(f"g{i}", Path(f"g{i}.wav"), "train", AttackLabel("GENUINE")) for i in range(3)]
    for tag, cls in BTAS_CLASSES.items():
        subset = "eval" if tag in ("R9", "R10") else "train"
        entries += [Entry(f"{tag}_{i}", Path(f"{tag}_{i}.wav"), subset, AttackLabel(cls, tag))
                    for i in range(2)]
    return Manifest(tuple(entries), "btas_like")


# -- manifest -----------------------------------------------------------------

def test_minimal_manifest(tmp_path):
    p = write_rows(tmp_path / "m.tsv", [("a", "a.wav", "train", "GENUINE", "-"),
                                        ("b", "b.wav", "train", "REPLAY", "R1")])
    m = parse_manifest(p, check_paths=False)
    assert len(m) == 2
    assert m.tags() == ["R1"]
    assert m.entries[1].label == AttackLabel("REPLAY", "R1", True)


def test_duplicate_id_named(tmp_path):
    p = write_rows(tmp_path / "m.tsv", [("a", "a.wav", "train", "GENUINE", "-"),
                                        ("a", "b.wav", "eval", "GENUINE", "-")])
    with pytest.raises(ManifestError, match="'a'"):
        parse_manifest(p, check_paths=False)


@pytest.mark.parametrize("row,msg", [
    (("a", "a.wav", "test", "GENUINE", "-"), "subset"),
    (("a", "a.wav", "train", "TTS", "X"), "class"),
    (("a", "a.wav", "train", "REPLAY", "-"), "tag"),
    (("a", "a.wav", "train"), "fields"),
])
def test_malformed_rows(tmp_path, row, msg):
    p = write_rows(tmp_path / "m.tsv", [row])
    with pytest.raises(ManifestError, match=msg) as info:
        parse_manifest(p, check_paths=False)
    assert ":2:" in str(info.value)


def test_bad_header_and_missing_audio(tmp_path):
    p = write_rows(tmp_path / "m.tsv", [("a", "a.wav", "train", "GENUINE", "-")])
    with pytest.raises(ManifestError, match="missing"):
        parse_manifest(p)
    p.write_text("id\tfile\n")
    with pytest.raises(ManifestError, match="header"):
        parse_manifest(p)


def test_eval_only_tags_are_unknown():
    m = btas_manifest()
    known = {e.label.tag: e.label.known for e in m.entries if not e.label.is_genuine}
    assert not known["R9"] and not known["R10"] and known["R1"]
    assert m.tags() == [f"R{i}" for i in range(1, 11)]


def test_manifest_roundtrip(tmp_path):
    m = btas_manifest()
    write_manifest(tmp_path / "m.tsv", m)
    back = parse_manifest(tmp_path / "m.tsv", corpus="btas_like", check_paths=False)
    assert back.entries == m.entries


# -- masks ------------------------------------------------------------------------

def test_mask_parsing():
    assert TrainMask.parse("no_replay").code == "011"
    assert TrainMask.parse("101").name == "no_ss"
    assert TrainMask.parse("full").excluded_classes() == ()
    with pytest.raises(TrainingConfigError):
        TrainMask.parse("000")
    with pytest.raises(TrainingConfigError):
        TrainMask.parse("everything")


def test_full_mask_takes_every_train_spoof():
    m = btas_manifest()
    natural, spoof = select_training(m, TrainMask())
    assert len(natural) == 3
    assert {e.label.tag for e in spoof} == {f"R{i}" for i in range(1, 9)}


def test_no_replay_pool_is_ss_and_vc():
    natural, spoof = select_training(btas_manifest(), TrainMask.parse("no_replay"))
    assert {e.label.tag for e in spoof} == {"R5", "R6", "R7", "R8"}


def test_pool_without_matching_spoof_is_an_error():
    m = Manifest((Entry("g", Path("g.wav"), "train", AttackLabel("GENUINE")),
                  Entry("r", Path("r.wav"), "train", AttackLabel("REPLAY", "R1"))))
    with pytest.raises(TrainingConfigError):
        select_training(m, TrainMask.parse("no_replay"))


@given(st.tuples(st.booleans(), st.booleans(), st.booleans()),
       st.tuples(st.booleans(), st.booleans(), st.booleans()))
def test_selection_is_monotone(a, b):
    if not any(a):
        return
    lo = TrainMask(*a)
    hi = TrainMask(*(x or y for x, y in zip(a, b)))
    m = btas_manifest()
    small = {e.utt_id for e in select_training(m, lo)[1]}
    big = {e.utt_id for e in select_training(m, hi)[1]}
    assert small <= big


# -- result tables ------------------------------------------------------------------

def reread_averages(text, tag_classes):
    """Parse an emitted TSV table and recompute every average from the printed cells."""
    lines = [ln.split("\t") for ln in text.strip().split("\n")]
    head = lines[0]
    tags = [h for h in head if h in tag_classes]
    out = []
    for row in lines[1:]:
        cells = dict(zip(head, row))
        vals = {t: Decimal(cells[t].strip("[]")) for t in tags}
        q = lambda xs: (sum(xs, Decimal(0)) / len(xs)).quantize(  # noqa: E731
            Decimal("0.01"), rounding=ROUND_HALF_UP)
        got = {}
        for cls, col in (("REPLAY", "Avg Replay"), ("SS", "Avg SS"), ("VC", "Avg VC")):
            got[col] = (q([vals[t] for t in tags if tag_classes[t] == cls]), Decimal(cells[col]))
        got["Avg All"] = (q(list(vals.values())), Decimal(cells["Avg All"]))
        out.append(got)
    return out


def random_table(seed):
    rng = np.random.default_rng(seed)
    tags = list(BTAS_CLASSES)
    rt = ResultTable(tags, BTAS_CLASSES)
    for feat in ("MFCC", "CQCC"):
        for mask in ("111", "011", "101", "110"):
            rt.rows.append(ResultRow(feat, mask, "Static",
                                     {t: float(rng.uniform(0, 0.3)) for t in tags}))
    return rt


@pytest.mark.parametrize("seed", range(5))
def test_averages_recomputed_by_reader(seed):
    rt = random_table(seed)
    for row in reread_averages(render_table(rt, "tsv"), BTAS_CLASSES):
        for recomputed, emitted in row.values():
            assert recomputed == emitted


def test_table_layout_and_markers():
    rt = random_table(0)
    lines = render_table(rt, "tsv").splitlines()
    head = lines[0].split("\t")
    assert head[:5] == ["Feature", "Replay", "SS", "VC", "Type"]
    assert head[-4:] == ["Avg Replay", "Avg SS", "Avg VC", "Avg All"]
    no_replay = lines[2].split("\t")
    assert no_replay[1:4] == ["x", "Y", "Y"]
    assert no_replay[5].startswith("[") and no_replay[9][0].isdigit()


def test_markdown_is_rectangular(tmp_path):
    rt = random_table(1)
    rt.rows.append(ResultRow("CQCC", "111", "DeltaOnly", error="RuntimeError: boom"))
    md = emit_table(rt, "markdown", tmp_path / "t.md").read_text().splitlines()
    counts = {ln.count("|") for ln in md}
    assert len(counts) == 1
    assert "FAIL" in md[-1]


def test_single_cell_table():
    rt = ResultTable(["R1"], {"R1": "REPLAY"}, [ResultRow("MFCC", "111", "Static", {"R1": 0.0123})])
    lines = render_table(rt, "tsv").splitlines()
    assert len(lines) == 2
    assert lines[1].split("\t")[5] == "1.23"


def test_class_averages_are_exact_means():
    rt = random_table(2)
    row = rt.rows[0]
    expected = np.mean([row.eer[t] for t in rt.members("REPLAY")])
    assert rt.class_average(row, "REPLAY") == pytest.approx(expected, abs=1e-15)


# -- config and cache -------------------------------------------------------------

def test_config_text():
    cfg = parse_config_text("# note\na.b = 1\n\nc = x = y  # tail\n")
    assert cfg == {"a.b": "1", "c": "x = y"}
    assert apply_overrides(cfg, ["a.b=2"])["a.b"] == "2"
    assert parse_config_text(dump_config(cfg)) == cfg
    with pytest.raises(ConfigError, match=":1:"):
        parse_config_text("novalue\n")
    with pytest.raises(ConfigError):
        apply_overrides(cfg, ["novalue"])


def test_cache_env_and_atomic_store(cache_env):
    assert default_cache_dir() == cache_env
    cache = Cache()
    key = content_key("x", 1)
    assert cache.lookup("features", key, "feat") is None
    p = cache.store("features", key, "feat", lambda tmp: Path(tmp).write_bytes(b"abc"))
    assert p == cache_env / "features" / key[:2] / f"{key}.feat"
    assert cache.lookup("features", key, "feat") == p
    assert (cache.hits, cache.misses) == (1, 1)
    assert not [f for f in os.listdir(p.parent) if f.startswith(".tmp")]


def test_failed_writer_leaves_nothing(tmp_path):
    cache = Cache(tmp_path)

    def boom(tmp):
        Path(tmp).write_bytes(b"partial")
        raise OSError("disk full")

    with pytest.raises(OSError):
        cache.store("models", "ab" * 32, "gmm", boom)
    assert os.listdir(tmp_path / "models" / "ab") == []


# -- experiment runner ----------------------------------------------------------------

def tiny_plan(corpus_dir, **extra):
    cfg = {"experiment.train_corpus": str(corpus_dir), "experiment.features": "MFCC",
           "experiment.masks": "full", "experiment.variants": "Static",
           "gmm.components": "2", "gmm.iterations": "3", "experiment.seed": "1"}
    cfg.update(extra)
    return ExperimentPlan.from_config(cfg)


def test_plan_validation():
    with pytest.raises(PlanError):
        ExperimentPlan.from_config({"experiment.masks": "bogus"})
    with pytest.raises(PlanError):
        ExperimentPlan.from_config({"experiment.variants": "Cubic"})
    with pytest.raises(PlanError):
        ExperimentPlan.from_config({"gmm.components": "0"})
    with pytest.raises(PlanError):
        ExperimentPlan.from_config({"corpus.bogus": "1"})
    plan = ExperimentPlan.from_config({})
    assert not plan.cross_corpora and plan.components == 512


def test_smoke_run(tiny_corpus, tmp_path):
    runner = ExperimentRunner(tiny_plan(tiny_corpus), Cache(tmp_path / "c"))
    rt = runner.run(tmp_path / "out")
    assert len(rt.rows) == 1 and not rt.rows[0].failed
    assert set(rt.rows[0].eer) == set(rt.tags) == {f"R{i}" for i in range(1, 11)}
    assert all(0 <= v <= 0.5 for v in rt.rows[0].eer.values())
    for name in ("results.tsv", "results.md", "plan.cfg", "run.json"):
        assert (tmp_path / "out" / name).exists()


def test_runs_are_deterministic_and_cache_transparent(tiny_corpus, tmp_path):
    plan = tiny_plan(tiny_corpus, **{"experiment.masks": "full,no_vc"})
    a = render_table(ExperimentRunner(plan, Cache(tmp_path / "a")).run(), "tsv")
    b = render_table(ExperimentRunner(plan, Cache(tmp_path / "b")).run(), "tsv")
    warm = ExperimentRunner(plan, Cache(tmp_path / "a"))
    c = render_table(warm.run(), "tsv")
    assert a == b == c
    assert warm.cache.misses == 0


def test_training_phase_reads_only_training_audio(tiny_corpus, tmp_path):
    runner = ExperimentRunner(tiny_plan(tiny_corpus), Cache(tmp_path / "c"))
    runner.run()
    train_reads = [p for phase, p in runner.audio_log if phase == "train"]
    assert train_reads and all("/train_" in p for p in train_reads)
    assert any("/eval_" in p for phase, p in runner.audio_log if phase == "eval")


def test_failed_cell_does_not_stop_others(tiny_corpus, tmp_path):
    # drop the VC training utterances, so a VC-only mask has no spoof pool
    lines = (tiny_corpus / "manifest.tsv").read_text().splitlines(keepends=True)
    kept = [ln for ln in lines if not (ln.startswith("train_R7") or ln.startswith("train_R8"))]
    manifest = tmp_path / "manifest.tsv"
    manifest.write_text("".join(kept).replace("\twav/", f"\t{tiny_corpus}/wav/"))
    plan = tiny_plan(manifest, **{"experiment.masks": "full,001"})
    rt = ExperimentRunner(plan, Cache(tmp_path / "c")).run(tmp_path / "out")
    ok, bad = rt.rows
    assert not ok.failed and "TrainingConfigError" in bad.error
    assert "FAIL" in (tmp_path / "out" / "results.tsv").read_text()


def test_synthetic_corpus_reference(tmp_path):
    cfg = {f"corpus.{k}": v for k, v in TINY_SPEC.as_config().items()}
    cfg = {k.replace("corpus.corpus.", "corpus."): v for k, v in cfg.items()}
    cfg.update({"experiment.features": "MFCC", "experiment.masks": "full",
                "experiment.variants": "Static", "gmm.components": "2", "gmm.iterations": "2"})
    plan = ExperimentPlan.from_config(cfg)
    assert plan.train.spec == TINY_SPEC
    cache = Cache(tmp_path)
    rt = ExperimentRunner(plan, cache).run()
    assert (tmp_path / "corpora" / TINY_SPEC.digest() / ".complete").exists()
    assert not rt.rows[0].failed
