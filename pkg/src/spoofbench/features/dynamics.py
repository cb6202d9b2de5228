from __future__ import annotations

import numpy as np

from .config import VARIANTS, FeatureMatrix


def deltas(x: np.ndarray, ctx: int = 2) -> np.ndarray:
    """Regression deltas over ``2 * ctx + 1`` frames with replicated edge frames."""
    x = np.asarray(x, dtype=np.float64)
    T = x.shape[0]
    if T == 0:
        return x.copy()
    padded = np.concatenate([np.repeat(x[:1], ctx, axis=0), x, np.repeat(x[-1:], ctx, axis=0)])
    num = np.zeros_like(x)
    for k in range(1, ctx + 1):
        num += k * (padded[ctx + k:ctx + k + T] - padded[ctx - k:ctx - k + T])
    return num / (2.0 * sum(k * k for k in range(1, ctx + 1)))


def apply_dynamics(static: FeatureMatrix, variant: str, delta_ctx: int = 2) -> FeatureMatrix:
    """Build the Static, StaticDelta ``[x|d|dd]`` or DeltaOnly ``[d|dd]`` variant."""
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}")
    cfg = static.config.with_variant(variant)
    x = static.data
    if variant == "Static":
        return FeatureMatrix(x, cfg)
    d1 = deltas(x, delta_ctx)
    d2 = deltas(d1, delta_ctx)
    parts = [x, d1, d2] if variant == "StaticDelta" else [d1, d2]
    return FeatureMatrix(np.hstack(parts), cfg)
