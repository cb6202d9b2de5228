"""Audio ingestion and short-time analysis.

WAV I/O is a small RIFF parser so that malformed and unsupported files are
reported with distinct exception types.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal as sps

CANONICAL_RATE = 16000
WINDOWS = ("hamming", "hann", "rect")


class WavFormatError(ValueError):
    """Raised for files that are not well-formed RIFF/WAVE."""


class UnsupportedWavError(WavFormatError):
    """Raised for valid WAVE files with an encoding we do not read."""


@dataclass(frozen=True)
class Signal:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if int(self.sample_rate) <= 0:
            raise ValueError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples must be finite")
        x = x.copy()
        x.flags.writeable = False
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameMatrix:
    frames: np.ndarray
    frame_len: int
    hop: int
    sample_rate: int
    window: str = field(default="hamming")

    def __post_init__(self):
        f = np.asarray(self.frames, dtype=np.float64).reshape(-1, self.frame_len)
        f.flags.writeable = False
        object.__setattr__(self, "frames", f)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]


def _chunks(data: bytes):
    pos = 12
    while pos + 8 <= len(data):
        cid, size = struct.unpack("<4sI", data[pos:pos + 8])
        body = data[pos + 8:pos + 8 + size]
        if len(body) < size:
            raise WavFormatError(f"chunk {cid!r} truncated")
        yield cid, body
        pos += 8 + size + (size & 1)


def read_wav(path) -> Signal:
    """Read a 16-bit PCM WAV file and return its first channel scaled to [-1, 1)."""
    path = Path(path)
    data = path.read_bytes()
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"WAVE":
        raise WavFormatError(f"{path}: not a RIFF/WAVE file")
    fmt = None
    pcm = None
    for cid, body in _chunks(data):
        if cid == b"fmt ":
            if len(body) < 16:
                raise WavFormatError(f"{path}: fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
        elif cid == b"data":
            pcm = body
    if fmt is None or pcm is None:
        raise WavFormatError(f"{path}: missing fmt or data chunk")
    tag, channels, rate, _, block_align, bits = fmt
    if tag != 1:
        raise UnsupportedWavError(f"{path}: format tag {tag} is not PCM")
    if bits != 16:
        raise UnsupportedWavError(f"{path}: {bits}-bit samples not supported")
    if channels < 1 or rate <= 0 or block_align != 2 * channels:
        raise WavFormatError(f"{path}: inconsistent fmt chunk")
    n = len(pcm) // block_align
    x = np.frombuffer(pcm[: n * block_align], dtype="<i2").reshape(n, channels)[:, 0]
    return Signal(x.astype(np.float64) / 32768.0, rate)


def to_pcm16(samples) -> np.ndarray:
    x = np.round(np.asarray(samples, dtype=np.float64) * 32768.0)
    return np.clip(x, -32768, 32767).astype("<i2")


def write_wav(path, sig: Signal) -> None:
    """Write mono 16-bit PCM. Samples are rounded to the nearest code and clipped."""
    pcm = to_pcm16(sig.samples).tobytes()
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + len(pcm), b"WAVE",
        b"fmt ", 16, 1, 1, sig.sample_rate, 2 * sig.sample_rate, 2, 16,
        b"data", len(pcm),
    )
    Path(path).write_bytes(header + pcm)


def resample(sig: Signal, target_rate: int) -> Signal:
    """Polyphase windowed-sinc resampling to ``target_rate``.

    Output length is ``round(N * target / source)``. Equal rates return the
    input unchanged.
    """
    target_rate = int(target_rate)
    if target_rate <= 0:
        raise ValueError("target_rate must be positive")
    if target_rate == sig.sample_rate:
        return sig
    ratio = Fraction(target_rate, sig.sample_rate)
    n_out = int(round(len(sig) * target_rate / sig.sample_rate))
    y = sps.resample_poly(sig.samples, ratio.numerator, ratio.denominator)
    if y.shape[0] >= n_out:
        y = y[:n_out]
    else:
        y = np.pad(y, (0, n_out - y.shape[0]))
    return Signal(y, target_rate)


def get_window(name: str, length: int) -> np.ndarray:
    if name == "rect":
        return np.ones(length)
    if name not in WINDOWS:
        raise ValueError(f"unknown window {name!r}; expected one of {WINDOWS}")
    return sps.get_window(name, length, fftbins=True)


def frame_count(n: int, frame_len: int, hop: int) -> int:
    if n < frame_len:
        return 0
    return (n - frame_len) // hop + 1


def frame_signal(sig: Signal, frame_ms: float, hop_ms: float, window: str = "hamming") -> FrameMatrix:
    """Slice ``sig`` into windowed frames; the partial tail frame is dropped."""
    if not frame_ms >= hop_ms > 0:
        raise ValueError("need frame_ms >= hop_ms > 0")
    L = int(round(frame_ms * sig.sample_rate / 1000.0))
    H = int(round(hop_ms * sig.sample_rate / 1000.0))
    if L < 1 or H < 1:
        raise ValueError("frame or hop shorter than one sample")
    return frame_samples(sig.samples, L, H, sig.sample_rate, window)


def frame_samples(x: np.ndarray, frame_len: int, hop: int, sample_rate: int,
                  window: str = "hamming") -> FrameMatrix:
    T = frame_count(x.shape[0], frame_len, hop)
    if T == 0:
        return FrameMatrix(np.zeros((0, frame_len)), frame_len, hop, sample_rate, window)
    idx = np.arange(frame_len)[None, :] + hop * np.arange(T)[:, None]
    frames = x[idx] * get_window(window, frame_len)[None, :]
    return FrameMatrix(frames, frame_len, hop, sample_rate, window)


def power_spectrum(fm: FrameMatrix, nfft: int) -> np.ndarray:
    """Squared magnitude of the real FFT of each frame, bins ``0..nfft/2``."""
    if nfft < fm.frame_len or nfft & (nfft - 1):
        raise ValueError(f"nfft must be a power of two >= frame length, got {nfft}")
    if fm.n_frames == 0:
        return np.zeros((0, nfft // 2 + 1))
    spec = np.fft.rfft(fm.frames, n=nfft, axis=1)
    return spec.real ** 2 + spec.imag ** 2


def spectrogram_db(sig: Signal, frame_ms: float = 20.0, hop_ms: float = 10.0,
                   nfft: int = 512, floor_db: float = -100.0) -> np.ndarray:
    """Log power spectrogram in dB relative to a full-scale sinusoid, T x (nfft/2+1)."""
    fm = frame_signal(sig, frame_ms, hop_ms, "hann")
    win = get_window("hann", fm.frame_len)
    ref = (win.sum() / 2.0) ** 2
    p = power_spectrum(fm, nfft) / ref
    return np.maximum(10.0 * np.log10(np.maximum(p, 1e-30)), floor_db)


def export_spectrogram(sig: Signal, out, floor_db: float = -100.0) -> tuple[Path, Path]:
    """Write ``<out>.pgm`` (binary P5, low frequencies at the bottom) and ``<out>.tsv``.

    Pixel intensity maps ``floor_db..0 dB`` linearly onto ``0..255``; the TSV
    holds one frame per row with values in dB.
    """
    if len(sig) == 0:
        raise ValueError("cannot export spectrogram of an empty signal")
    out = Path(out)
    pgm_path = out.with_suffix(".pgm")
    tsv_path = out.with_suffix(".tsv")
    S = spectrogram_db(sig, floor_db=floor_db)
    img = np.clip((S - floor_db) / -floor_db, 0.0, 1.0)
    img = np.round(img * 255).astype(np.uint8).T[::-1]
    try:
        with open(pgm_path, "wb") as fh:
            fh.write(b"P5\n%d %d\n255\n" % (img.shape[1], img.shape[0]))
            fh.write(np.ascontiguousarray(img).tobytes())
        with open(tsv_path, "w") as fh:
            for row in S:
                fh.write("\t".join(f"{v:.6f}" for v in row) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing spectrogram to {out}: {exc}") from exc
    return pgm_path, tsv_path


def load_tsv_matrix(path) -> np.ndarray:
    return np.loadtxt(path, delimiter="\t", ndmin=2)


def load_signal(path, target_rate: int = CANONICAL_RATE) -> Signal:
    return resample(read_wav(path), target_rate)
