from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

KINDS = ("MFCC", "CQCC")
VARIANTS = ("Static", "StaticDelta", "DeltaOnly")


@dataclass(frozen=True)
class FeatureConfig:
    """Front-end parameters. Defaults give the MFCC setup; see :func:`cqcc_config`."""

    kind: str = "MFCC"
    n_ceps: int = 20
    f_min: float = 0.0
    f_max: float = 8000.0
    bins_per_octave: int = 96
    n_filters: int = 20
    frame_ms: float = 20.0
    hop_ms: float = 10.0
    nfft: int = 512
    window: str = "hamming"
    variant: str = "Static"
    delta_ctx: int = 2
    sample_rate: int = 16000
    log_floor: float = 1e-10

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        lo_ok = self.f_min >= 0 if self.kind == "MFCC" else self.f_min > 0
        if not (lo_ok and self.f_min < self.f_max <= self.sample_rate / 2):
            raise ValueError(
                f"need 0 < f_min < f_max <= {self.sample_rate / 2}, got {self.f_min}..{self.f_max}")
        if self.n_ceps < 1 or self.bins_per_octave < 1 or self.n_filters < 1:
            raise ValueError("n_ceps, bins_per_octave and n_filters must be >= 1")
        if self.delta_ctx < 1:
            raise ValueError("delta_ctx must be >= 1")

    @property
    def dim(self) -> int:
        return self.n_ceps * {"Static": 1, "StaticDelta": 3, "DeltaOnly": 2}[self.variant]

    def static(self) -> "FeatureConfig":
        return replace(self, variant="Static")

    def with_variant(self, variant: str) -> "FeatureConfig":
        return replace(self, variant=variant)

    def as_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        """Stable hex digest of every field; used to tag feature and model files."""
        items = "\n".join(f"{f.name}={getattr(self, f.name)!r}" for f in fields(self))
        return hashlib.sha256(items.encode()).hexdigest()[:32]

    @classmethod
    def from_mapping(cls, values: dict) -> "FeatureConfig":
        kind = str(values.get("kind", "MFCC")).upper()
        base = cqcc_config() if kind == "CQCC" else cls()
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in known:
                raise KeyError(f"unknown feature option {key!r}")
            default = getattr(base, key)
            if key == "kind":
                kwargs[key] = kind
            elif isinstance(default, bool):
                kwargs[key] = str(raw).lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                kwargs[key] = int(raw)
            elif isinstance(default, float):
                kwargs[key] = float(raw)
            else:
                kwargs[key] = str(raw)
        return replace(base, **kwargs)


def cqcc_config(**overrides) -> FeatureConfig:
    """CQCC defaults: 15 Hz to 4 kHz, 96 bins per octave, 20 coefficients, 10 ms hop."""
    base = FeatureConfig(kind="CQCC", f_min=15.0, f_max=4000.0, bins_per_octave=96,
                         n_ceps=20, hop_ms=10.0, window="hann")
    return replace(base, **overrides)


def mfcc_config(**overrides) -> FeatureConfig:
    return replace(FeatureConfig(), **overrides)


@dataclass(frozen=True)
class FeatureMatrix:
    data: np.ndarray
    config: FeatureConfig

    def __post_init__(self):
        d = np.asarray(self.data, dtype=np.float64)
        if d.ndim != 2:
            raise ValueError("feature data must be 2-D (frames x dims)")
        if not np.all(np.isfinite(d)):
            raise ValueError("feature matrix contains non-finite values")
        d = d.copy()
        d.flags.writeable = False
        object.__setattr__(self, "data", d)

    @property
    def n_frames(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]
