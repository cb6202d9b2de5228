"""Seeded synthetic stand-ins for genuine speech and replay / SS / VC attacks.

The surrogates are deliberately crude. Genuine speech comes from a glottal
pulse train with jittered pitch through a few time-varying resonators. SS
uses a constant pitch and broad, slowly moving resonances. VC warps the
short-time spectral envelope of genuine speech with a bilinear frequency
map. Replay runs a signal through a chain of simulated loudspeaker /
microphone devices.

Every utterance draws its randomness from ``SeedSequence(master_seed,
spawn_key=(subset, tag, index))``, so generation order never changes output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import signal as sps

from .audio import Signal, to_pcm16, write_wav
from .config import as_list, dump_config, section
from .protocol.manifest import SUBSETS, AttackLabel, Entry, Manifest, write_manifest

GENERATOR_VERSION = 1  # bump whenever generated audio changes
BLOCK = 80  # samples between resonator coefficient updates (5 ms at 16 kHz)
GENUINE_PEAK = 0.5


@dataclass(frozen=True)
class DeviceProfile:
    name: str
    ir: np.ndarray
    band: tuple = (0.0, None)
    noise_db: float = -np.inf
    bits: int = 16
    order: int = 4

    def __post_init__(self):
        ir = np.asarray(self.ir, dtype=np.float64)
        if ir.ndim != 1 or ir.size == 0 or not np.all(np.isfinite(ir)):
            raise ValueError("impulse response must be a finite, nonempty vector")
        object.__setattr__(self, "ir", ir)
        if not 2 <= self.bits <= 24:
            raise ValueError("bits must be in 2..24")


def identity_profile() -> DeviceProfile:
    return DeviceProfile("identity", np.array([1.0]), (0.0, None), -np.inf, 16)


def _room_ir(rng, rt60: float, sr: int, direct: float = 1.0, length_s: float = 0.08,
             tail_gain: float = 0.08, reflections: float = 1.0):
    n = int(length_s * sr)
    t = np.arange(n) / sr
    tail = rng.standard_normal(n) * np.exp(-6.9 * t / rt60) * tail_gain
    ir = tail
    ir[0] = direct
    for delay_ms, gain in ((2.3, 0.35), (4.9, -0.22), (7.1, 0.15)):
        ir[int(delay_ms * sr / 1000)] += reflections * gain * rng.uniform(0.7, 1.0)
    return ir


def _peaking(ir, f0, gain_db, q, sr):
    # RBJ peaking equaliser applied to the impulse response
    A = 10 ** (gain_db / 40)
    w0 = 2 * np.pi * f0 / sr
    alpha = np.sin(w0) / (2 * q)
    b = [1 + alpha * A, -2 * np.cos(w0), 1 - alpha * A]
    a = [1 + alpha / A, -2 * np.cos(w0), 1 - alpha / A]
    return sps.lfilter(b, a, ir)


# name -> (band Hz, filter order, noise dB FS, bits, rt60 s, [(peak Hz, gain dB, Q), ...])
_DEVICES = {
    "LP": ((120.0, 7000.0), 2, -60.0, 16, 0.12, [(1200.0, 4.0, 1.5), (3500.0, -3.0, 2.0)]),
    "HQ": ((50.0, 7900.0), 2, -70.0, 16, 0.20, [(90.0, 3.0, 0.8)]),
    "PH1": ((250.0, 6000.0), 2, -58.0, 16, 0.10, [(2200.0, 6.0, 2.0)]),
    "PH2": ((300.0, 5000.0), 2, -56.0, 14, 0.09, [(900.0, 5.0, 1.2), (2800.0, 4.0, 3.0)]),
    "PH3": ((150.0, 7500.0), 2, -62.0, 16, 0.15, [(600.0, -5.0, 1.0), (4500.0, 6.0, 2.5)]),
    "TEL": ((300.0, 3400.0), 8, -60.0, 16, 0.05, []),
}


def device_profile(name: str, sr: int = 16000) -> DeviceProfile:
    """Built-in device: LP, HQ, PH1, PH2, PH3, or TEL (3.4 kHz telephone band)."""
    band, order, noise, bits, rt60, peaks = _DEVICES[name]
    seed = int.from_bytes(hashlib.sha256(name.encode()).digest()[:4], "little")
    ir = _room_ir(np.random.default_rng(seed), rt60, sr, tail_gain=0.02, reflections=0.15)
    for f0, g, q in peaks:
        ir = _peaking(ir, f0, g, q, sr)
    return DeviceProfile(name, ir, band, noise, bits, order)


def _bandpass(x, band, sr, order=4):
    lo, hi = band
    nyq = sr / 2
    lo_on = lo is not None and lo > 0
    hi_on = hi is not None and hi < nyq
    if lo_on and hi_on:
        sos = sps.butter(order, [lo, hi], btype="bandpass", fs=sr, output="sos")
    elif lo_on:
        sos = sps.butter(order, lo, btype="highpass", fs=sr, output="sos")
    elif hi_on:
        sos = sps.butter(order, hi, btype="lowpass", fs=sr, output="sos")
    else:
        return x
    return sps.sosfilt(sos, x)


def sim_replay(sig: Signal, dev: DeviceProfile, seed) -> Signal:
    """One playback/recording pass through ``dev``; output keeps the input's length and peak."""
    x = sig.samples
    n = x.shape[0]
    rng = np.random.default_rng(seed)
    y = sps.fftconvolve(x, dev.ir)[:n] if dev.ir.size > 1 else x * dev.ir[0]
    y = _bandpass(y, dev.band, sig.sample_rate, dev.order)
    if np.isfinite(dev.noise_db):
        y = y + rng.standard_normal(n) * 10 ** (dev.noise_db / 20)
    scale = 2 ** (dev.bits - 1)
    y = np.round(y * scale) / scale
    peak_in = np.max(np.abs(x)) if n else 0.0
    peak_out = np.max(np.abs(y)) if n else 0.0
    if peak_out > 0 and peak_in > 0:
        y = y * (peak_in / peak_out)
    return Signal(y, sig.sample_rate)


def replay_chain(sig: Signal, devices, seed) -> Signal:
    ss = np.random.SeedSequence(seed) if not isinstance(seed, np.random.SeedSequence) else seed
    for dev, child in zip(devices, ss.spawn(len(devices))):
        sig = sim_replay(sig, dev, child)
    return sig


@dataclass(frozen=True)
class VoiceStyle:
    jitter: float = 0.015
    intonation: float = 0.08
    bandwidth_scale: float = 1.0
    transition_s: float = 0.03
    n_formants: tuple = (2, 4)
    aspiration: float = 0.03


GENUINE_STYLE = VoiceStyle()
# same breath noise as genuine speech, so the envelope itself carries the difference
SS_STYLE = VoiceStyle(jitter=0.0, intonation=0.0, bandwidth_scale=2.8, transition_s=0.09,
                      n_formants=(3, 3))

_FORMANT_RANGES = ((300, 850), (850, 2300), (2200, 3100), (3200, 3900))
_BANDWIDTHS = ((60, 110), (70, 140), (100, 180), (130, 220))


def _resonator_sos(freqs, bws, sr):
    r = np.exp(-np.pi * bws / sr)
    c = 2 * r * np.cos(2 * np.pi * freqs / sr)
    sos = np.zeros((freqs.size, 6))
    sos[:, 0] = 1 - c + r * r  # unit gain at DC
    sos[:, 3] = 1.0
    sos[:, 4] = -c
    sos[:, 5] = r * r
    return sos


def synth_voice(rng: np.random.Generator, n: int, sr: int, style: VoiceStyle):
    """Source-filter synthesis. Returns ``(samples, f0_track)`` with f0 per block (0 when unvoiced)."""
    n_blocks = int(np.ceil(n / BLOCK))
    t_blk = np.arange(n_blocks) * BLOCK / sr

    # segment plan: voiced / fricative / pause, 60-250 ms each
    kinds, bounds = [], [0.0]
    while bounds[-1] < n / sr:
        kinds.append(rng.choice(3, p=[0.72, 0.18, 0.10]))
        bounds.append(bounds[-1] + rng.uniform(0.06, 0.25))
    seg = np.searchsorted(bounds, t_blk, side="right") - 1

    nf = int(rng.integers(style.n_formants[0], style.n_formants[1] + 1))
    targets = np.stack([rng.uniform(*_FORMANT_RANGES[i], size=len(kinds)) for i in range(nf)], 1)
    bw = np.array([rng.uniform(*_BANDWIDTHS[i]) for i in range(nf)]) * style.bandwidth_scale
    # smooth the stepwise targets into trajectories
    tau = max(style.transition_s * sr / BLOCK, 1.0)
    a = np.exp(-1.0 / tau)
    traj = sps.lfilter([1 - a], [1, -a], targets[seg], axis=0, zi=targets[:1] * a)[0]

    f0_base = rng.uniform(80, 250)
    f0 = f0_base * (1 + style.intonation * np.sin(2 * np.pi * rng.uniform(0.3, 0.8) * t_blk
                                                  + rng.uniform(0, 2 * np.pi))
                    - 0.5 * style.intonation * t_blk / max(t_blk[-1], 1e-9))
    voiced_blk = np.array(kinds)[seg] == 0

    # excitation: pulses at jittered periods, then a -12 dB/oct glottal tilt
    exc = np.zeros(n)
    pos = rng.uniform(0, sr / f0_base)
    while pos < n:
        b = min(int(pos) // BLOCK, n_blocks - 1)
        period = sr / f0[b] * (1 + style.jitter * rng.standard_normal())
        if voiced_blk[b]:
            exc[int(pos)] += 1.0
        pos += max(period, 8.0)
    exc = sps.lfilter([1.0], [1.0, -1.9, 0.9025], exc) * 0.05
    noise = rng.standard_normal(n)
    kind_per_sample = np.array(kinds)[np.repeat(seg, BLOCK)[:n]]
    voiced = (kind_per_sample == 0).astype(np.float64)
    src = (exc + style.aspiration * noise) * voiced
    fric = np.where(kind_per_sample == 1, 0.25, np.where(kind_per_sample == 2, 0.002, 0.0))
    env = sps.lfilter([0.02], [1, -0.98], np.ones(n))  # onset ramp
    fric_src = noise * fric

    y = np.zeros(n)
    zi = np.zeros((nf, 2))
    for b in range(n_blocks):
        sl = slice(b * BLOCK, min((b + 1) * BLOCK, n))
        sos = _resonator_sos(traj[b], bw, sr)
        y[sl], zi = sps.sosfilt(sos, src[sl], zi=zi)
    # fricatives: a broad high resonance
    fsos = sps.butter(2, [2000, 3800], btype="bandpass", fs=sr, output="sos")
    y = y + sps.sosfilt(fsos, fric_src) * 0.3
    y = sps.lfilter([1.0, -0.95], [1.0], y) * env
    y = y / max(np.max(np.abs(y)), 1e-12) * GENUINE_PEAK
    return y, np.where(voiced_blk, f0, 0.0)


def _n_samples(rng, spec) -> int:
    return int(round(rng.uniform(spec.dur_min, spec.dur_max) * spec.sample_rate))


def capture(y: np.ndarray, rng: np.random.Generator, sr: int) -> np.ndarray:
    """Direct recording of a live talker: random mild coloration, band edges and noise floor."""
    ir = _room_ir(rng, rng.uniform(0.02, 0.12), sr, tail_gain=rng.uniform(0.02, 0.06),
                  reflections=rng.uniform(0.0, 0.4))
    for _ in range(2):
        ir = _peaking(ir, rng.uniform(300, 5000), rng.uniform(-5, 5), rng.uniform(0.7, 2.5), sr)
    y = sps.fftconvolve(y, ir)[: y.shape[0]]
    y = _bandpass(y, (rng.uniform(40, 250), rng.uniform(5500, 7900)), sr, 2)
    y = y + rng.standard_normal(y.shape[0]) * 10 ** (rng.uniform(-66, -50) / 20)
    return y / max(np.max(np.abs(y)), 1e-12) * GENUINE_PEAK


def gen_genuine_one(seed, spec) -> Signal:
    rng = np.random.default_rng(seed)
    y, _ = synth_voice(rng, _n_samples(rng, spec), spec.sample_rate, GENUINE_STYLE)
    return Signal(capture(y, rng, spec.sample_rate), spec.sample_rate)


def gen_genuine(seed, n: int, spec) -> list:
    """``n`` genuine surrogate utterances; utterance ``i`` depends only on ``(seed, i)``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return [gen_genuine_one(np.random.SeedSequence(seed, spawn_key=(i,)), spec) for i in range(n)]


def sim_ss(seed, spec, style: VoiceStyle = SS_STYLE) -> Signal:
    """Over-smoothed, monotone-pitch synthetic speech surrogate."""
    rng = np.random.default_rng(seed)
    y, _ = synth_voice(rng, _n_samples(rng, spec), spec.sample_rate, style)
    return Signal(capture(y, rng, spec.sample_rate), spec.sample_rate)


def ss_pitch_track(seed, spec, style: VoiceStyle = SS_STYLE) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return synth_voice(rng, _n_samples(rng, spec), spec.sample_rate, style)[1]


def bilinear_warp(omega, alpha: float):
    """All-pass frequency warp on ``[0, pi]``; ``alpha > 0`` moves frequencies up."""
    omega = np.asarray(omega, dtype=np.float64)
    return omega + 2 * np.arctan2(alpha * np.sin(omega), 1 - alpha * np.cos(omega))


def _log_envelope(mag, n_lifter):
    logm = np.log(np.maximum(mag, 1e-12))
    cep = np.fft.irfft(logm, axis=0)
    cep[n_lifter:-n_lifter + 1 or None] = 0.0
    return np.fft.rfft(cep, axis=0).real


VC_NPERSEG = 512
VC_OVERLAP = 384


def warp_envelope(sig: Signal, alpha: float, n_lifter: int = 30) -> Signal:
    """Move the short-time envelope along a bilinear warp, keeping the fine structure."""
    x = sig.samples
    n = x.shape[0]
    _, _, Z = sps.stft(x, nperseg=VC_NPERSEG, noverlap=VC_OVERLAP, window="hann",
                       boundary="zeros", padded=True)
    if alpha != 0.0:
        mag = np.abs(Z)
        logE = _log_envelope(mag, n_lifter)
        omega = np.linspace(0, np.pi, Z.shape[0])
        src = bilinear_warp(omega, -alpha)
        logW = np.stack([np.interp(src, omega, col) for col in logE.T], axis=1)
        Z = Z * np.exp(logW - logE)
    _, y = sps.istft(Z, nperseg=VC_NPERSEG, noverlap=VC_OVERLAP, window="hann",
                     boundary=True)
    y = y[:n] if y.shape[0] >= n else np.pad(y, (0, n - y.shape[0]))
    return Signal(y, sig.sample_rate)


def vc_alpha(seed, lo: float = 0.08, hi: float = 0.18) -> float:
    rng = np.random.default_rng(seed)
    return float(rng.choice([-1.0, 1.0]) * rng.uniform(lo, hi))


def sim_vc(sig: Signal, seed, warp_range=(0.08, 0.18)) -> Signal:
    """Voice-conversion surrogate: envelope warp with a seeded factor, then peak-matched."""
    if len(sig) == 0:
        raise ValueError("sim_vc needs a nonempty input")
    y = warp_envelope(sig, vc_alpha(seed, *warp_range)).samples
    peak = np.max(np.abs(y))
    if peak > 0:
        y = y * (np.max(np.abs(sig.samples)) / peak)
    return Signal(y, sig.sample_rate)


@dataclass(frozen=True)
class AttackRecipe:
    tag: str
    cls: str
    source: str  # genuine | ss | vc
    devices: tuple = ()
    eval_only: bool = False
    style: str = "default"  # source variant, distinguishes e.g. S-tags


# BTAS-shaped: every attack is a replay; SS/VC sources are replayed too
BTAS_ATTACKS = (
    AttackRecipe("R1", "REPLAY", "genuine", ("LP", "LP")),
    AttackRecipe("R2", "REPLAY", "genuine", ("LP", "HQ", "LP")),
    AttackRecipe("R3", "REPLAY", "genuine", ("PH1", "LP")),
    AttackRecipe("R4", "REPLAY", "genuine", ("PH2", "LP")),
    AttackRecipe("R5", "SS", "ss", ("LP", "LP")),
    AttackRecipe("R6", "SS", "ss", ("LP", "HQ", "LP")),
    AttackRecipe("R7", "VC", "vc", ("LP", "LP")),
    AttackRecipe("R8", "VC", "vc", ("LP", "HQ", "LP")),
    AttackRecipe("R9", "REPLAY", "genuine", ("PH2", "PH3"), eval_only=True),
    AttackRecipe("R10", "REPLAY", "genuine", ("LP", "PH2", "PH3"), eval_only=True),
)

# ASVspoof-shaped: direct SS/VC without a playback channel; S6-S10 unseen
ASVSPOOF_ATTACKS = (
    AttackRecipe("S1", "VC", "vc", style="vc_a"),
    AttackRecipe("S2", "VC", "vc", style="vc_b"),
    AttackRecipe("S3", "SS", "ss", style="ss_a"),
    AttackRecipe("S4", "SS", "ss", style="ss_b"),
    AttackRecipe("S5", "VC", "vc", style="vc_c"),
    AttackRecipe("S6", "VC", "vc", eval_only=True, style="vc_d"),
    AttackRecipe("S7", "VC", "vc", eval_only=True, style="vc_e"),
    AttackRecipe("S8", "VC", "vc", eval_only=True, style="vc_a"),
    AttackRecipe("S9", "VC", "vc", eval_only=True, style="vc_b"),
    AttackRecipe("S10", "SS", "ss", eval_only=True, style="ss_c"),
)

LAYOUTS = {"btas": BTAS_ATTACKS, "asvspoof": ASVSPOOF_ATTACKS}

_SS_STYLES = {
    "default": SS_STYLE,
    "ss_a": SS_STYLE,
    "ss_b": VoiceStyle(jitter=0.0, intonation=0.0, bandwidth_scale=2.2, transition_s=0.12,
                       n_formants=(4, 4), aspiration=0.0),
    "ss_c": VoiceStyle(jitter=0.0, intonation=0.0, bandwidth_scale=3.5, transition_s=0.06,
                       n_formants=(2, 2), aspiration=0.01),
}
_VC_RANGES = {
    "default": (0.08, 0.18), "vc_a": (0.08, 0.14), "vc_b": (0.12, 0.20),
    "vc_c": (0.05, 0.10), "vc_d": (0.15, 0.25), "vc_e": (0.03, 0.08),
}


@dataclass(frozen=True)
class CorpusSpec:
    """Utterance counts per subset: genuine plus ``per_attack`` for each tag of the layout."""

    name: str = "synth_btas"
    layout: str = "btas"
    seed: int = 42
    sample_rate: int = 16000
    dur_min: float = 2.0
    dur_max: float = 4.0
    genuine: dict = field(default_factory=lambda: {"train": 200, "dev": 200, "eval": 200})
    per_attack: dict = field(default_factory=lambda: {"train": 40, "dev": 40, "eval": 40})
    eval_only: int = 40

    def __post_init__(self):
        if self.layout not in LAYOUTS:
            raise ValueError(f"layout must be one of {sorted(LAYOUTS)}")
        if not 0 < self.dur_min <= self.dur_max:
            raise ValueError("need 0 < dur_min <= dur_max")
        counts = list(self.genuine.values()) + list(self.per_attack.values()) + [self.eval_only]
        if any(int(c) < 0 for c in counts):
            raise ValueError("counts must be >= 0")

    def attacks(self) -> tuple:
        return LAYOUTS[self.layout]

    def as_config(self) -> dict:
        cfg = {f"corpus.{k}": str(getattr(self, k))
               for k in ("name", "layout", "seed", "sample_rate", "dur_min", "dur_max", "eval_only")}
        for s in SUBSETS:
            cfg[f"corpus.genuine.{s}"] = str(self.genuine.get(s, 0))
            cfg[f"corpus.per_attack.{s}"] = str(self.per_attack.get(s, 0))
        return cfg

    def digest(self) -> str:
        text = dump_config(self.as_config()) + f"generator={GENERATOR_VERSION}\n"
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_config(cls, cfg: dict) -> "CorpusSpec":
        c = section(cfg, "corpus") if any(k.startswith("corpus.") for k in cfg) else dict(cfg)
        base = cls()
        kw = {}
        for k, conv in (("name", str), ("layout", str), ("seed", int), ("sample_rate", int),
                        ("dur_min", float), ("dur_max", float), ("eval_only", int)):
            if k in c:
                kw[k] = conv(c[k])
        gen = dict(base.genuine)
        per = dict(base.per_attack)
        for s in SUBSETS:
            if f"genuine.{s}" in c:
                gen[s] = int(c[f"genuine.{s}"])
            if f"per_attack.{s}" in c:
                per[s] = int(c[f"per_attack.{s}"])
        known = {"name", "layout", "seed", "sample_rate", "dur_min", "dur_max", "eval_only"} | \
            {f"{p}.{s}" for p in ("genuine", "per_attack") for s in SUBSETS}
        unknown = sorted(set(c) - known)
        if unknown:
            raise KeyError(f"unknown corpus option(s): {', '.join(unknown)}")
        return cls(genuine=gen, per_attack=per, **kw)


@dataclass(frozen=True)
class UtteranceRecipe:
    utt_id: str
    subset: str
    label: AttackLabel
    source: str
    source_seed: tuple
    attack_seed: tuple
    devices: tuple
    style: str = "default"


def corpus_recipes(spec: CorpusSpec) -> list:
    """Every utterance of the corpus with the seeds needed to regenerate it."""
    out = []
    for si, subset in enumerate(SUBSETS):
        for i in range(int(spec.genuine.get(subset, 0))):
            key = (si, 0, i)
            out.append(UtteranceRecipe(f"{subset}_gen_{i:04d}", subset, AttackLabel("GENUINE"),
                                       "genuine", key, key, ()))
        for ti, rec in enumerate(spec.attacks(), 1):
            if rec.eval_only:
                count = spec.eval_only if subset == "eval" else 0
            else:
                count = int(spec.per_attack.get(subset, 0))
            for i in range(count):
                key = (si, ti, i)
                out.append(UtteranceRecipe(
                    f"{subset}_{rec.tag}_{i:04d}", subset, AttackLabel(rec.cls, rec.tag),
                    rec.source, key + (0,), key + (1,), rec.devices, rec.style))
    return out


def render(recipe: UtteranceRecipe, spec: CorpusSpec) -> Signal:
    src_ss = np.random.SeedSequence(spec.seed, spawn_key=recipe.source_seed)
    atk_ss = np.random.SeedSequence(spec.seed, spawn_key=recipe.attack_seed)
    if recipe.source == "genuine":
        sig = gen_genuine_one(src_ss, spec)
    elif recipe.source == "ss":
        sig = sim_ss(src_ss, spec, _SS_STYLES[recipe.style if recipe.style in _SS_STYLES else "default"])
    elif recipe.source == "vc":
        base = gen_genuine_one(src_ss, spec)
        sig = sim_vc(base, atk_ss.spawn(1)[0], _VC_RANGES.get(recipe.style, _VC_RANGES["default"]))
    else:
        raise ValueError(f"unknown source {recipe.source!r}")
    if recipe.devices:
        sig = replay_chain(sig, [device_profile(d, spec.sample_rate) for d in recipe.devices], atk_ss)
    return sig


def _render_job(args):
    recipe, spec, path = args
    write_wav(path, render(recipe, spec))
    return recipe.utt_id


def build_corpus(spec: CorpusSpec, out_dir, workers: int = 1) -> Manifest:
    """Write ``wav/<utt>.wav``, ``manifest.tsv``, ``recipes.tsv`` and ``corpus.cfg`` under ``out_dir``."""
    out = Path(out_dir)
    try:
        (out / "wav").mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create corpus directory {out}: {exc}") from exc
    recipes = corpus_recipes(spec)
    jobs = [(r, spec, out / "wav" / f"{r.utt_id}.wav") for r in recipes]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as ex:
            list(ex.map(_render_job, jobs, chunksize=8))
    else:
        for job in jobs:
            _render_job(job)
    entries = tuple(Entry(r.utt_id, Path("wav") / f"{r.utt_id}.wav", r.subset, r.label)
                    for r in recipes)
    manifest = Manifest(entries, spec.name, out)
    write_manifest(out / "manifest.tsv", manifest)
    with open(out / "recipes.tsv", "w") as fh:
        fh.write("utt_id\tsource\tsource_key\tattack_key\tdevices\tstyle\n")
        for r in recipes:
            fh.write(f"{r.utt_id}\t{r.source}\t{','.join(map(str, r.source_seed))}\t"
                     f"{','.join(map(str, r.attack_seed))}\t{','.join(r.devices) or '-'}\t{r.style}\n")
    (out / "corpus.cfg").write_text(dump_config(spec.as_config()))
    return manifest


def read_recipes(path) -> dict:
    out = {}
    with open(path) as fh:
        next(fh)
        for line in fh:
            utt, source, sk, ak, devs, style = line.rstrip("\n").split("\t")
            out[utt] = dict(source=source, source_seed=tuple(int(v) for v in sk.split(",")),
                            attack_seed=tuple(int(v) for v in ak.split(",")),
                            devices=tuple(as_list(devs)) if devs != "-" else (), style=style)
    return out


def audio_digest(sig: Signal) -> str:
    return hashlib.sha256(to_pcm16(sig.samples).tobytes()).hexdigest()
