"""Frame-synchronous constant-Q transform and constant-Q cepstral coefficients.

Every bin is evaluated on the same uniform grid of analysis instants
``c_t = t * hop``. Bin ``k`` correlates the signal with a periodic Hann window
of length ``N_k`` modulated to ``f_k`` and normalised by ``1/N_k``; the window
starts at ``c_t - N_k // 2``. Samples outside the signal count as zero.

A Hann window is a sum of three complex exponentials, so each correlation is
a combination of three rectangular-window sums of the demodulated signal.
Those are differences of prefix sums, and the prefix sums are only needed at
positions that share a fixed offset modulo the hop. Splitting the signal
into hop-sized blocks turns all of that into a few dense matrix products,
independent of the window lengths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from ..audio import Signal
from .config import FeatureConfig, FeatureMatrix
from .mfcc import cepstrum


@dataclass(frozen=True)
class CqtKernel:
    freqs: np.ndarray
    lengths: np.ndarray
    q: float
    hop: int
    sample_rate: int


def n_bins(bins_per_octave: int, f_min: float, f_max: float) -> int:
    # the epsilon keeps exact octave multiples from rounding down a bin
    return int(np.floor(bins_per_octave * np.log2(f_max / f_min) + 1e-9)) + 1


def q_factor(bins_per_octave: int) -> float:
    return 1.0 / (2.0 ** (1.0 / bins_per_octave) - 1.0)


def cqt_kernel(cfg: FeatureConfig, sample_rate: int | None = None) -> CqtKernel:
    sr = int(sample_rate or cfg.sample_rate)
    B = cfg.bins_per_octave
    Q = q_factor(B)
    if cfg.f_max * (1.0 + 1.0 / (2.0 * Q)) > sr / 2.0:
        raise ValueError(
            f"f_max={cfg.f_max} Hz plus half a bandwidth exceeds Nyquist ({sr / 2} Hz)")
    K = n_bins(B, cfg.f_min, cfg.f_max)
    freqs = cfg.f_min * 2.0 ** (np.arange(K) / B)
    lengths = np.round(Q * sr / freqs).astype(np.int64)
    hop = int(round(cfg.hop_ms * sr / 1000.0))
    return CqtKernel(freqs, lengths, Q, hop, sr)


def n_instants(n_samples: int, hop: int) -> int:
    return 0 if n_samples == 0 else (n_samples - 1) // hop + 1


def _cmatmul(x, E_re, E_im):
    # real x complex product; contiguous operands keep BLAS on its fast path
    out = np.empty((x.shape[0], E_re.shape[1]), dtype=np.complex128)
    out.real = x @ E_re
    out.imag = x @ E_im
    return out


def _prefix_at(x_blocks, E_re, E_im, offsets, phase_blocks, C, j_idx):
    """Prefix sums ``P(j*H + r)`` for block indices ``j_idx`` (T x Q) and per-column offset ``r``."""
    nb, H = x_blocks.shape
    mask = np.arange(H)[:, None] < offsets[None, :]
    A = _cmatmul(x_blocks, E_re * mask, E_im * mask)
    V = C[:nb] + phase_blocks * A
    total = C[nb:nb + 1]
    ext = np.concatenate([np.zeros_like(total), V, total], axis=0)
    return np.take_along_axis(ext, np.clip(j_idx, -1, nb) + 1, axis=0)


def cqt(sig: Signal, cfg: FeatureConfig) -> np.ndarray:
    """Complex CQT coefficients, ``T x K`` with ``T = ceil(N / hop)``."""
    if cfg.kind != "CQCC":
        raise ValueError("cqt() needs a CQCC config")
    kern = cqt_kernel(cfg, sig.sample_rate)
    return cqt_from_kernel(sig.samples, kern)


def cqt_from_kernel(x: np.ndarray, kern: CqtKernel) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    H = kern.hop
    K = kern.freqs.shape[0]
    T = n_instants(x.shape[0], H)
    if T == 0:
        return np.zeros((0, K), dtype=np.complex128)
    nb = T
    xb = np.zeros(nb * H)
    xb[: x.shape[0]] = x
    xb = xb.reshape(nb, H)

    N = kern.lengths
    half = N // 2
    omega = 2.0 * np.pi * kern.freqs / kern.sample_rate
    theta = 2.0 * np.pi / N
    # columns: [omega | omega - theta | omega + theta]
    nu = np.concatenate([omega, omega - theta, omega + theta])
    Nq = np.tile(N, 3)
    hq = np.tile(half, 3)

    i = np.arange(H)
    arg = np.outer(i, nu)
    E_re, E_im = np.cos(arg), -np.sin(arg)
    F = _cmatmul(xb, E_re, E_im)
    phase = np.exp(-1j * np.outer(np.arange(nb) * H, nu))
    C = np.zeros((nb + 1, nu.shape[0]), dtype=np.complex128)
    np.cumsum(phase * F, axis=0, out=C[1:])

    t = np.arange(T)[:, None]
    start = -hq
    stop = Nq - hq
    j_start = t + np.floor_divide(start, H)[None, :]
    j_stop = t + np.floor_divide(stop, H)[None, :]
    P1 = _prefix_at(xb, E_re, E_im, np.mod(start, H), phase, C, j_start)
    P2 = _prefix_at(xb, E_re, E_im, np.mod(stop, H), phase, C, j_stop)

    s = t * H + start[None, :]
    R = np.exp(1j * nu[None, :] * s) * (P2 - P1)
    X = 0.5 * R[:, :K] - 0.25 * R[:, K:2 * K] - 0.25 * R[:, 2 * K:]
    return X / N[None, :]


def resample_geometric_to_linear(log_spectrum, f_grid, n_linear: int) -> np.ndarray:
    """Natural cubic spline through ``(f_grid, log_spectrum)`` sampled on a uniform grid.

    Works on a single K-vector or on a ``T x K`` matrix (frames along axis 0).
    The uniform grid spans ``[f_grid[0], f_grid[-1]]``. With fewer than four
    knots linear interpolation is used instead.
    """
    f_grid = np.asarray(f_grid, dtype=np.float64)
    y = np.asarray(log_spectrum, dtype=np.float64)
    if n_linear < 2:
        raise ValueError("n_linear must be >= 2")
    if np.any(np.diff(f_grid) <= 0):
        raise ValueError("f_grid must be strictly increasing")
    uniform = np.linspace(f_grid[0], f_grid[-1], n_linear)
    if f_grid.shape[0] < 4:
        if y.ndim == 1:
            return np.interp(uniform, f_grid, y)
        return np.stack([np.interp(uniform, f_grid, row) for row in y])
    return CubicSpline(f_grid, y, axis=-1, bc_type="natural")(uniform)


def cqcc(sig: Signal, cfg: FeatureConfig) -> FeatureMatrix:
    """Static CQCCs: log CQT power, spline-resampled to a linear axis, then DCT."""
    if cfg.kind != "CQCC":
        raise ValueError("cqcc() needs a CQCC config")
    kern = cqt_kernel(cfg, sig.sample_rate)
    X = cqt_from_kernel(sig.samples, kern)
    if X.shape[0] == 0:
        return FeatureMatrix(np.zeros((0, cfg.n_ceps)), cfg.static())
    logp = np.log(np.maximum(X.real ** 2 + X.imag ** 2, cfg.log_floor))
    lin = resample_geometric_to_linear(logp, kern.freqs, kern.freqs.shape[0])
    return FeatureMatrix(cepstrum(lin, cfg.n_ceps), cfg.static())
