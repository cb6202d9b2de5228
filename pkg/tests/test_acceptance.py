"""Acceptance criteria 1-8; each test records one PASS/FAIL line shown in the terminal summary."""

import itertools
import math
import os
import time
from contextlib import contextmanager

import numpy as np
import pytest
from scipy.fft import idct

from oracles import brute_force_rocch_eer, direct_avg_loglik, naive_cqt, naive_sweep_eer
from spoofbench.audio import Signal
from spoofbench.evaluate import ScoreSet, eer_rocch, eer_sweep
from spoofbench.features import cqcc, cqt, cqt_kernel, cqcc_config, mfcc, mfcc_config
from spoofbench.features.dynamics import deltas
from spoofbench.features.mfcc import cepstrum, filterbank_energies, mel_scale
from spoofbench.gmm import GmmModel, ModelPair, TrainingLog, avg_log_likelihood, llr_score, train_gmm
from spoofbench.protocol import DEFAULT_EXPERIMENT, ExperimentPlan, ExperimentRunner, render_table
from spoofbench.protocol.cache import Cache

SR = 16000
RESULTS = []


@contextmanager
def criterion(number, title):
    t0 = time.perf_counter()
    try:
        yield
    except BaseException:
        RESULTS.append(f"criterion {number} FAIL  {title} ({time.perf_counter() - t0:.1f} s)")
        raise
    RESULTS.append(f"criterion {number} PASS  {title} ({time.perf_counter() - t0:.1f} s)")


# -- 1. CQT against the direct-correlation oracle -------------------------------------

def random_signal(rng):
    kind = rng.integers(4)
    if kind == 0:
        x = rng.standard_normal(SR)
    elif kind == 1:
        x = rng.uniform(-1, 1, SR)
    elif kind == 2:
        x = np.cumsum(rng.standard_normal(SR))
        x -= x.mean()
    else:
        x = rng.standard_normal(SR) * (rng.random(SR) < 0.05)
        x += 0.01 * rng.standard_normal(SR)
    return rng.uniform(0.01, 1.0) * x / np.max(np.abs(x))


def test_cqt_oracle_equivalence():
    with criterion(1, "CQT matches the direct-correlation oracle on 100 random 1-s signals"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(2024)
        worst = 0.0
        for i in range(100):
            # most signals use a coarse grid; every 40th uses the default 96 bins per octave
            f_min, B = (15.0, 96) if i % 40 == 0 else (62.5, 24)
            x = random_signal(rng)
            fast = np.abs(cqt(Signal(x, SR), cqcc_config(f_min=f_min, bins_per_octave=B)))
            ref = np.abs(naive_cqt(x, SR, f_min, 4000.0, B, 160))
            assert fast.shape == ref.shape
            worst = max(worst, float(np.max(np.abs(fast - ref) / ref)))
        assert worst < 1e-6, worst
        assert time.perf_counter() - t0 < 60


# -- 2. ROCCH EER against the brute-force hull oracle ----------------------------------

def random_scoreset(rng):
    ng, ns = rng.integers(1, 65, 2)
    if rng.random() < 0.5:
        # few distinct values, many ties
        return (rng.integers(-5, 6, ng).astype(float).tolist(),
                rng.integers(-5, 6, ns).astype(float).tolist())
    shift = rng.uniform(0, 3)
    return rng.normal(shift, 1, ng).tolist(), rng.normal(0, 1, ns).tolist()


def test_rocch_eer_oracle_equivalence():
    with criterion(2, "ROCCH EER matches the hull oracle on 1000 random score sets"):
        t0 = time.perf_counter()
        rng = np.random.default_rng(99)
        for _ in range(1000):
            g, s = random_scoreset(rng)
            ss = ScoreSet(g, s)
            e = eer_rocch(ss)
            assert abs(e - brute_force_rocch_eer(g, s)) <= 1e-9
            assert e <= eer_sweep(ss)
            assert eer_sweep(ss) == pytest.approx(naive_sweep_eer(g, s), abs=1e-12)
        assert time.perf_counter() - t0 < 30


# -- 3. EM ------------------------------------------------------------------------------

def test_em_correctness():
    with criterion(3, "EM monotone on 50 runs, 2-D recovery, density oracle on 100 models"):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            D = int(rng.integers(1, 5))
            x = rng.normal(size=(400, D)) * rng.uniform(0.2, 3, D) + rng.integers(-4, 4, (400, 1))
            tlog = TrainingLog()
            train_gmm(x, int(rng.integers(1, 9)), 10, seed=seed, training_log=tlog)
            h = np.array(tlog.avg_log_likelihood)
            assert h.size == 11 and np.all(np.diff(h) >= -1e-8), seed

        rng = np.random.default_rng(0)
        pick = rng.random(10000) < 0.5
        x = np.where(pick[:, None], [0.0, 0.0], [3.0, 3.0]) + rng.standard_normal((10000, 2))
        m = train_gmm(x, 2, 10, seed=0)
        truth = np.array([[0.0, 0.0], [3.0, 3.0]])
        assert min(np.abs(m.means[list(p)] - truth).max()
                   for p in itertools.permutations(range(2))) < 0.05

        rng = np.random.default_rng(1)
        for _ in range(100):
            K, D = int(rng.integers(1, 6)), int(rng.integers(1, 5))
            w = rng.uniform(0.1, 1.0, K)
            model = GmmModel(w / w.sum(), rng.normal(0, 2, (K, D)), rng.uniform(0.3, 2.0, (K, D)))
            X = rng.normal(0, 2, (int(rng.integers(1, 30)), D))
            ref = direct_avg_loglik(model.weights, model.means, model.variances, X)
            assert abs(avg_log_likelihood(model, X) - ref) <= 1e-9 * abs(ref)


# -- 4. analytic values -------------------------------------------------------------

def test_analytic_spot_values():
    with criterion(4, "analytic spot values"):
        std = GmmModel(np.array([1.0]), np.array([[0.0]]), np.array([[1.0]]))
        value = avg_log_likelihood(std, np.array([[0.0]]))
        # -0.9189385 is the exact constant rounded to seven places
        assert round(value, 7) == -0.9189385
        assert abs(value + 0.5 * math.log(2 * math.pi)) <= 1e-9
        shifted = GmmModel(np.array([1.0]), np.array([[1.0]]), np.array([[1.0]]))
        assert abs(llr_score(ModelPair(std, shifted), np.array([[0.0]])) - 0.5) <= 1e-12
        assert abs(float(mel_scale(700.0)) - 2595 * math.log10(2)) <= 1e-9
        v = np.random.default_rng(3).uniform(-30, 5, 20)
        assert np.max(np.abs(idct(cepstrum(v, 20), type=2, norm="ortho") - v)) <= 1e-9


# -- 5. feature properties ----------------------------------------------------------

def test_feature_properties():
    with criterion(5, "deltas, gain invariance of c1.., CQT bin-centre tones"):
        rng = np.random.default_rng(5)
        assert np.all(deltas(np.full((50, 6), -3.25)) == 0)
        x = rng.standard_normal((60, 5))
        np.testing.assert_allclose(deltas(x[::-1])[::-1], -deltas(x), atol=1e-12)

        a = 0.5
        t = np.arange(SR) / SR
        mcfg = mfcc_config()
        tone = Signal(0.5 * np.sin(2 * np.pi * 440.0 * t), SR)
        assert filterbank_energies(tone, mcfg).min() > mcfg.log_floor
        C1, C2 = mfcc(tone, mcfg).data, mfcc(Signal(a * tone.samples, SR), mcfg).data
        np.testing.assert_allclose(C2[:, 0] - C1[:, 0], math.sqrt(20) * math.log(a * a), atol=1e-8)
        np.testing.assert_allclose(C2[:, 1:], C1[:, 1:], atol=1e-8)

        # a pure tone leaves far CQT bins below the floor, so use one partial per bin centre
        ccfg = cqcc_config()
        freqs = cqt_kernel(ccfg).freqs
        phases = rng.uniform(0, 2 * np.pi, freqs.size)
        comb = Signal(0.1 * np.sin(2 * np.pi * freqs[:, None] * t + phases[:, None]).sum(0), SR)
        assert a * a * (np.abs(cqt(comb, ccfg)) ** 2).min() > ccfg.log_floor
        Q1, Q2 = cqcc(comb, ccfg).data, cqcc(Signal(a * comb.samples, SR), ccfg).data
        np.testing.assert_allclose(Q2[:, 0] - Q1[:, 0], math.sqrt(freqs.size) * math.log(a * a),
                                   atol=1e-7)
        np.testing.assert_allclose(Q2[:, 1:], Q1[:, 1:], atol=1e-7)

        kern = cqt_kernel(ccfg)
        n = 2 * SR
        fits = np.flatnonzero(kern.lengths <= SR)
        for k in rng.choice(fits, 10, replace=False):
            X = np.abs(cqt(Signal(0.5 * np.sin(2 * np.pi * kern.freqs[k] * np.arange(n) / SR), SR), ccfg))
            centre = np.arange(X.shape[0]) * kern.hop
            inside = (centre - kern.lengths[k] // 2 >= 0) & (centre + kern.lengths[k] // 2 < n)
            assert inside.sum() > 50
            assert np.all(np.argmax(X[inside], axis=1) == k), k


# -- 6-8. end-to-end runs on the default synthetic corpus ------------------------------

def default_plan(**overrides):
    cfg = dict(DEFAULT_EXPERIMENT)
    cfg["experiment.workers"] = str(os.cpu_count() or 1)
    cfg.update(overrides)
    return ExperimentPlan.from_config(cfg)


@pytest.fixture(scope="module")
def default_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("default_run")
    runner = ExperimentRunner(default_plan(), Cache(root / "cache"))
    t0 = time.perf_counter()
    table = runner.run(root / "out")
    return root, runner, table, time.perf_counter() - t0


def test_leave_out_degrades_detection(default_run):
    _, _, table, elapsed = default_run
    with criterion(6, f"leave-out cells >= full-training cells, overall <= 5 %, "
                      f"matrix in {elapsed:.0f} s < 600 s"):
        assert elapsed < 600, elapsed
        assert not any(r.failed for r in table.rows)
        for feature in ("MFCC", "CQCC"):
            full = table.row(feature, "111", "Static")
            assert table.overall_average(full) <= 0.05
            for cls, mask in (("REPLAY", "011"), ("SS", "101"), ("VC", "110")):
                left_out = table.row(feature, mask, "Static")
                assert table.class_average(left_out, cls) >= table.class_average(full, cls), (feature, cls)


def test_cross_corpora_is_worse_than_matched(default_run, tmp_path):
    with criterion(7, "SS/VC-only training corpus scores worse on the replay corpus"):
        root, _, table, _ = default_run
        plan = default_plan(**{
            "experiment.name": "cross", "experiment.eval_corpus": "synth",
            "experiment.features": "MFCC", "experiment.masks": "full", "experiment.variants": "Static",
            "corpus.name": "synth_asvspoof", "corpus.layout": "asvspoof", "corpus.seed": "7",
            "corpus.genuine.dev": "0", "corpus.genuine.eval": "0",
            "corpus.per_attack.dev": "0", "corpus.per_attack.eval": "0", "corpus.eval_only": "0",
        })
        assert plan.cross_corpora
        runner = ExperimentRunner(plan, Cache(root / "cache"))
        cross = runner.run(tmp_path / "out")
        train_dir = str(root / "cache" / "corpora" / plan.train.spec.digest())
        train_reads = [p for phase, p in runner.audio_log if phase == "train"]
        assert train_reads and all(p.startswith(train_dir) for p in train_reads)
        assert all(not p.startswith(train_dir) for phase, p in runner.audio_log if phase == "eval")
        matched = table.overall_average(table.row("MFCC", "111", "Static"))
        crossed = cross.overall_average(cross.row("MFCC", "111", "Static"))
        assert crossed > matched, (crossed, matched)


def test_rerun_is_byte_identical(default_run, tmp_path):
    with criterion(8, "cold rerun byte-identical, warm rerun identical"):
        root, _, table, _ = default_run
        first = {name: (root / "out" / name).read_bytes() for name in ("results.tsv", "results.md")}

        assert not (tmp_path / "cache").exists()
        cold = ExperimentRunner(default_plan(), Cache(tmp_path / "cache"))
        cold_table = cold.run(tmp_path / "cold")
        assert render_table(cold_table, "tsv") == render_table(table, "tsv")
        assert {n: (tmp_path / "cold" / n).read_bytes() for n in first} == first

        warm = ExperimentRunner(default_plan(), Cache(root / "cache"))
        warm_table = warm.run(tmp_path / "warm")
        assert warm.cache.misses == 0
        assert [(r.feature, r.mask, r.variant, r.eer) for r in warm_table.rows] == \
               [(r.feature, r.mask, r.variant, r.eer) for r in table.rows]
        assert {n: (tmp_path / "warm" / n).read_bytes() for n in first} == first
