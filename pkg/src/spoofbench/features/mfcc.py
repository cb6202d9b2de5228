from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.fft import dct

from ..audio import Signal, frame_signal, power_spectrum
from .config import FeatureConfig, FeatureMatrix


def mel_scale(f):
    """Hz to mel, ``2595 * log10(1 + f / 700)``."""
    return 2595.0 * np.log10(1.0 + np.asarray(f, dtype=np.float64) / 700.0)


def inv_mel_scale(m):
    return 700.0 * (10.0 ** (np.asarray(m, dtype=np.float64) / 2595.0) - 1.0)


def mel_filter_edges(n_filters: int, f_min: float, f_max: float) -> np.ndarray:
    """The ``n_filters + 2`` mel-uniform frequencies (Hz); interior points are filter centers."""
    return inv_mel_scale(np.linspace(mel_scale(f_min), mel_scale(f_max), n_filters + 2))


def mel_filter_centers(n_filters: int, f_min: float, f_max: float) -> np.ndarray:
    return mel_filter_edges(n_filters, f_min, f_max)[1:-1]


def mel_filterbank(n_filters: int, nfft: int, sample_rate: int, f_min: float, f_max: float) -> np.ndarray:
    """Triangular filters on FFT bins, ``n_filters x (nfft/2 + 1)``.

    Edge frequencies are snapped to bins with ``floor((nfft + 1) f / sr)`` so
    every filter reaches exactly 1.0 at its center bin. When two edges land on
    the same bin the corresponding slope is skipped and the filter may be a
    single bin wide.
    """
    if n_filters < 1:
        raise ValueError("n_filters must be >= 1")
    if f_max > sample_rate / 2:
        raise ValueError("f_max above Nyquist")
    n_bins = nfft // 2 + 1
    hz = mel_filter_edges(n_filters, f_min, f_max)
    bins = np.minimum(np.floor((nfft + 1) * hz / sample_rate).astype(int), n_bins - 1)
    fb = np.zeros((n_filters, n_bins))
    for m in range(n_filters):
        lo, c, hi = bins[m], bins[m + 1], bins[m + 2]
        if c > lo:
            k = np.arange(lo, c)
            fb[m, k] = (k - lo) / (c - lo)
        fb[m, c] = 1.0
        if hi > c:
            k = np.arange(c + 1, hi + 1)
            fb[m, k] = (hi - k) / (hi - c)
    return fb


@lru_cache(maxsize=16)
def _cached_filterbank(n_filters, nfft, sample_rate, f_min, f_max):
    fb = mel_filterbank(n_filters, nfft, sample_rate, f_min, f_max)
    fb.flags.writeable = False
    return fb


def cepstrum(log_energies: np.ndarray, n_ceps: int) -> np.ndarray:
    """Orthonormal DCT-II along the last axis, truncated to ``n_ceps``."""
    return dct(log_energies, type=2, norm="ortho", axis=-1)[..., :n_ceps]


def filterbank_energies(sig: Signal, cfg: FeatureConfig) -> np.ndarray:
    fm = frame_signal(sig, cfg.frame_ms, cfg.hop_ms, cfg.window)
    P = power_spectrum(fm, cfg.nfft)
    fb = _cached_filterbank(cfg.n_filters, cfg.nfft, sig.sample_rate, cfg.f_min, cfg.f_max)
    return P @ fb.T


def mfcc(sig: Signal, cfg: FeatureConfig) -> FeatureMatrix:
    """Static MFCCs, one row per frame; an utterance shorter than a frame yields zero rows."""
    if cfg.kind != "MFCC":
        raise ValueError("mfcc() needs an MFCC config")
    E = filterbank_energies(sig, cfg)
    if E.shape[0] == 0:
        return FeatureMatrix(np.zeros((0, cfg.n_ceps)), cfg.static())
    C = cepstrum(np.log(np.maximum(E, cfg.log_floor)), cfg.n_ceps)
    return FeatureMatrix(C, cfg.static())
