"""Diagonal-covariance GMMs trained by EM, and the two-model likelihood-ratio detector."""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

log = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)
FLOOR_SCALE = 1e-3
STARVED = 1e-10
MONOTONE_SLACK = 1e-8
CHUNK = 16384


class EmptyUtteranceError(ValueError):
    pass


class ConfigMismatchError(ValueError):
    pass


@dataclass(frozen=True)
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    feature_digest: str = ""
    descriptor: str = ""

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        mu = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        var = np.atleast_2d(np.asarray(self.variances, dtype=np.float64))
        if mu.shape != var.shape or w.shape != (mu.shape[0],):
            raise ValueError(f"inconsistent shapes {w.shape}, {mu.shape}, {var.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1")
        if np.any(var <= 0):
            raise ValueError("variances must be positive")
        for name, arr in (("weights", w), ("means", mu), ("variances", var)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_components(self) -> int:
        return self.weights.shape[0]

    @property
    def dim(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class ModelPair:
    natural: GmmModel
    spoof: GmmModel

    def __post_init__(self):
        if self.natural.dim != self.spoof.dim:
            raise ValueError("natural and spoof models differ in dimension")
        if self.natural.feature_digest != self.spoof.feature_digest:
            raise ConfigMismatchError("natural and spoof models were trained on different features")

    def swapped(self) -> "ModelPair":
        return ModelPair(self.spoof, self.natural)


@dataclass
class TrainingLog:
    avg_log_likelihood: list = field(default_factory=list)
    reseeded: list = field(default_factory=list)


def variance_floor(data: np.ndarray, scale: float = FLOOR_SCALE) -> np.ndarray:
    v = np.var(data, axis=0)
    # a constant dimension still needs a positive floor
    return np.maximum(scale * v, np.finfo(float).tiny * 1e10)


def _normalise(w):
    w = np.asarray(w, dtype=np.float64)
    w = w / w.sum()
    # fold the rounding residue into the largest weight so the simplex holds to 1e-12
    w[np.argmax(w)] += 1.0 - w.sum()
    return w


def _sq_dist(x, c):
    d = (x * x).sum(1)[:, None] - 2.0 * x @ c.T + (c * c).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_init(data, n_components: int, seed: int = 0, n_iter: int = 10,
                floor: np.ndarray | None = None, feature_digest: str = "",
                descriptor: str = "") -> GmmModel:
    """Seeded k-means: K distinct frames as initial centers, then ``n_iter`` Lloyd steps."""
    x = np.asarray(data, dtype=np.float64)
    N, D = x.shape
    K = int(n_components)
    if N < K:
        raise ValueError(f"only {N} frames for {K} components; use a smaller K")
    floor = variance_floor(x) if floor is None else floor
    rng = np.random.default_rng(seed)
    shift = x.mean(0)
    xc = x - shift
    centers = xc[np.sort(rng.choice(N, size=K, replace=False))].copy()
    labels = np.zeros(N, dtype=np.int64)
    for _ in range(n_iter):
        labels = np.argmin(_sq_dist(xc, centers), axis=1)
        counts = np.bincount(labels, minlength=K)
        sums = np.zeros((K, D))
        np.add.at(sums, labels, xc)
        for k in range(K):
            if counts[k] > 0:
                centers[k] = sums[k] / counts[k]
            else:
                centers[k] = xc[rng.integers(N)]
    labels = np.argmin(_sq_dist(xc, centers), axis=1)
    counts = np.bincount(labels, minlength=K).astype(np.float64)
    variances = np.empty((K, D))
    for k in range(K):
        members = xc[labels == k]
        if members.shape[0] > 0:
            centers[k] = members.mean(0)
            variances[k] = members.var(0)
        else:
            variances[k] = np.var(xc, axis=0)
    variances = np.maximum(variances, floor[None, :])
    return GmmModel(_normalise(counts), centers + shift, variances, feature_digest, descriptor)


def _component_loglik(x, means, variances, log_weights):
    """``log w_k + log N(x_t; mu_k, diag var_k)`` for every frame and component."""
    prec = 1.0 / variances
    const = log_weights - 0.5 * (x.shape[1] * LOG_2PI + np.log(variances).sum(1)
                                  + (means * means * prec).sum(1))
    return const[None, :] - 0.5 * ((x * x) @ prec.T) + x @ (means * prec).T


def _centered(model: GmmModel, x: np.ndarray, shift: np.ndarray):
    return x - shift, model.means - shift


def frame_log_likelihood(model: GmmModel, X) -> np.ndarray:
    x = np.asarray(X, dtype=np.float64)
    shift = model.means.mean(0)
    out = np.empty(x.shape[0])
    with np.errstate(divide="ignore"):
        lw = np.log(model.weights)
    for a in range(0, x.shape[0], CHUNK):
        xc, mc = _centered(model, x[a:a + CHUNK], shift)
        out[a:a + CHUNK] = logsumexp(_component_loglik(xc, mc, model.variances, lw), axis=1)
    return out


def avg_log_likelihood(model: GmmModel, X) -> float:
    """Mean over frames of ``log sum_k w_k N(x_t; mu_k, var_k)``."""
    data = getattr(X, "data", X)
    x = np.atleast_2d(np.asarray(data, dtype=np.float64))
    if x.shape[0] == 0 or np.asarray(data).size == 0:
        raise EmptyUtteranceError("cannot score an utterance with zero frames")
    if x.shape[1] != model.dim:
        raise ValueError(f"feature dim {x.shape[1]} does not match model dim {model.dim}")
    return float(frame_log_likelihood(model, x).mean())


def llr_score(pair: ModelPair, X) -> float:
    return avg_log_likelihood(pair.natural, X) - avg_log_likelihood(pair.spoof, X)


def check_compatible(model: GmmModel, feature_digest: str, force: bool = False) -> None:
    if not force and model.feature_digest and feature_digest and model.feature_digest != feature_digest:
        raise ConfigMismatchError(
            f"model trained on features {model.feature_digest}, got {feature_digest}"
            " (pass force to override)")


def _accumulate(x, model, shift, chunk):
    K, D = model.means.shape
    with np.errstate(divide="ignore"):
        lw = np.log(model.weights)
    mc = model.means - shift
    n = np.zeros(K)
    s1 = np.zeros((K, D))
    s2 = np.zeros((K, D))
    total = 0.0
    for a in range(0, x.shape[0], chunk):
        xc = x[a:a + chunk] - shift
        lp = _component_loglik(xc, mc, model.variances, lw)
        norm = logsumexp(lp, axis=1)
        total += norm.sum()
        gamma = np.exp(lp - norm[:, None])
        n += gamma.sum(0)
        s1 += gamma.T @ xc
        s2 += gamma.T @ (xc * xc)
    return n, s1, s2, total / x.shape[0]


def em_train(data, init: GmmModel, iterations: int = 10, seed: int = 0,
             floor: np.ndarray | None = None, chunk: int = CHUNK,
             training_log: TrainingLog | None = None) -> GmmModel:
    """Run ``iterations`` EM steps from ``init``.

    Variances are floored every M-step. A component whose total
    responsibility drops below 1e-10 is moved onto a random frame. The average
    log-likelihood is checked to be non-decreasing in every iteration without
    a reseed; a violation raises ``RuntimeError``.
    """
    x = np.asarray(getattr(data, "data", data), dtype=np.float64)
    if x.shape[1] != init.dim:
        raise ValueError("data dimension does not match the initial model")
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    if iterations == 0:
        return init
    floor = variance_floor(x) if floor is None else floor
    tlog = training_log if training_log is not None else TrainingLog()
    rng = np.random.default_rng(seed)
    shift = x.mean(0)
    global_var = np.maximum(np.var(x, axis=0), floor)
    model = init
    reseeded_prev = False
    for it in range(iterations + 1):
        n, s1, s2, avg_ll = _accumulate(x, model, shift, chunk)
        if tlog.avg_log_likelihood and not reseeded_prev:
            prev = tlog.avg_log_likelihood[-1]
            if avg_ll < prev - MONOTONE_SLACK:
                raise RuntimeError(f"EM log-likelihood decreased at iteration {it}: {prev} -> {avg_ll}")
        tlog.avg_log_likelihood.append(avg_ll)
        if it == iterations:
            break
        safe = np.maximum(n, STARVED)[:, None]
        means = s1 / safe
        variances = np.maximum(s2 / safe - means * means, floor[None, :])
        weights = n.copy()
        starved = np.flatnonzero(n < STARVED)
        for k in starved:
            means[k] = x[rng.integers(x.shape[0])] - shift
            variances[k] = global_var
            weights[k] = n.sum() / model.n_components
            log.info("EM iteration %d: component %d starved, reseeded", it, k)
            tlog.reseeded.append((it, int(k)))
        reseeded_prev = starved.size > 0
        model = GmmModel(_normalise(weights), means + shift, variances,
                         init.feature_digest, init.descriptor)
    return model


def train_gmm(data, n_components: int, iterations: int = 10, seed: int = 0,
              feature_digest: str = "", descriptor: str = "",
              training_log: TrainingLog | None = None) -> GmmModel:
    x = np.asarray(getattr(data, "data", data), dtype=np.float64)
    floor = variance_floor(x)
    init = kmeans_init(x, n_components, seed, floor=floor,
                       feature_digest=feature_digest, descriptor=descriptor)
    return em_train(x, init, iterations, seed=seed, floor=floor, training_log=training_log)


MAGIC = b"SBGM"
VERSION = 1
_HEADER = struct.Struct("<4sIQQ32s")


def write_model(path, model: GmmModel) -> None:
    digest = model.feature_digest.encode("ascii")[:32].ljust(32, b"0")
    head = _HEADER.pack(MAGIC, VERSION, model.n_components, model.dim, digest)
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in (model.weights, model.means, model.variances))
    Path(path).write_bytes(head + body)


def read_model(path) -> GmmModel:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ValueError(f"{path}: truncated model header")
    magic, version, K, D, digest = _HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION:
        raise ValueError(f"{path}: not a version-{VERSION} model file")
    vals = np.frombuffer(raw[_HEADER.size:], dtype="<f8")
    if vals.size != K + 2 * K * D:
        raise ValueError(f"{path}: body size does not match K={K}, D={D}")
    w = vals[:K]
    mu = vals[K:K + K * D].reshape(K, D)
    var = vals[K + K * D:].reshape(K, D)
    d = digest.decode("ascii")
    return GmmModel(w, mu, var, "" if d == "0" * 32 else d)
