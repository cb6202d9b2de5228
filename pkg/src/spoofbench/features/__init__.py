from .config import KINDS, VARIANTS, FeatureConfig, FeatureMatrix, cqcc_config, mfcc_config
from .cqcc import cqcc, cqt, cqt_kernel, resample_geometric_to_linear
from .dynamics import apply_dynamics, deltas
from .mfcc import mel_filter_centers, mel_filterbank, mel_scale, mfcc


def extract_static(sig, cfg: FeatureConfig) -> FeatureMatrix:
    return mfcc(sig, cfg) if cfg.kind == "MFCC" else cqcc(sig, cfg)


def extract(sig, cfg: FeatureConfig) -> FeatureMatrix:
    """Static features followed by the dynamics variant named in ``cfg``."""
    return apply_dynamics(extract_static(sig, cfg), cfg.variant, cfg.delta_ctx)


__all__ = [
    "KINDS", "VARIANTS", "FeatureConfig", "FeatureMatrix", "cqcc_config", "mfcc_config",
    "cqcc", "cqt", "cqt_kernel", "resample_geometric_to_linear", "apply_dynamics", "deltas",
    "mel_filter_centers", "mel_filterbank", "mel_scale", "mfcc", "extract", "extract_static",
]
