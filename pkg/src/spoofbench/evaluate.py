"""ROC convex hull, ROCCH-EER and score files.

Genuine trials are expected to score high. A threshold ``theta`` accepts
scores ``>= theta``; tied scores always fall on the same side.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

LABELS = ("genuine", "spoof")


class ScoreFileError(ValueError):
    pass


@dataclass(frozen=True)
class Trial:
    utt_id: str
    label: str
    attack: str
    score: float


@dataclass(frozen=True)
class ScoreSet:
    genuine: np.ndarray
    spoof: np.ndarray
    trials: tuple = field(default=(), compare=False)

    def __post_init__(self):
        g = np.asarray(self.genuine, dtype=np.float64).ravel()
        s = np.asarray(self.spoof, dtype=np.float64).ravel()
        if g.size == 0 or s.size == 0:
            raise ValueError("both genuine and spoof scores must be nonempty")
        if not (np.all(np.isfinite(g)) and np.all(np.isfinite(s))):
            raise ValueError("scores must be finite")
        object.__setattr__(self, "genuine", g)
        object.__setattr__(self, "spoof", s)
        object.__setattr__(self, "trials", tuple(self.trials))

    def __eq__(self, other):
        return (isinstance(other, ScoreSet) and self.trials == other.trials
                and np.array_equal(self.genuine, other.genuine)
                and np.array_equal(self.spoof, other.spoof))

    @classmethod
    def from_trials(cls, trials) -> "ScoreSet":
        trials = tuple(trials)
        g = [t.score for t in trials if t.label == "genuine"]
        s = [t.score for t in trials if t.label == "spoof"]
        return cls(g, s, trials)

    def attacks(self) -> list:
        return sorted({t.attack for t in self.trials if t.label == "spoof"})

    def for_attack(self, attack: str) -> "ScoreSet":
        """All genuine trials against the spoof trials of one attack type."""
        keep = [t for t in self.trials if t.label == "genuine" or t.attack == attack]
        return ScoreSet.from_trials(keep)

    def per_attack(self) -> dict:
        return {a: self.for_attack(a) for a in self.attacks()}


@dataclass(frozen=True)
class RocchCurve:
    """Hull vertices as (false-alarm rate, miss rate), false-alarm ascending."""

    pfa: np.ndarray
    pmiss: np.ndarray
    fractions: tuple = field(default=(), compare=False, repr=False)

    @property
    def vertices(self) -> np.ndarray:
        return np.column_stack([self.pfa, self.pmiss])


def _tie_groups(genuine, spoof):
    scores = np.concatenate([genuine, spoof])
    is_tar = np.concatenate([np.ones(genuine.size, int), np.zeros(spoof.size, int)])
    uniq, inv = np.unique(scores, return_inverse=True)
    n_tar = np.bincount(inv, weights=is_tar, minlength=uniq.size).astype(int)
    n_all = np.bincount(inv, minlength=uniq.size)
    return n_tar, n_all - n_tar


def rocch(scores: ScoreSet) -> RocchCurve:
    """Convex hull of the ROC via pool-adjacent-violators on tie groups.

    Groups are visited in ascending score order and merged while the target
    fraction fails to increase strictly, which leaves no collinear vertices.
    """
    n_tar, n_non = _tie_groups(scores.genuine, scores.spoof)
    blocks = []  # [targets, nontargets]
    for t, n in zip(n_tar.tolist(), n_non.tolist()):
        blocks.append([t, n])
        # merge while previous ratio >= current ratio, compared exactly
        while len(blocks) > 1:
            (t1, n1), (t2, n2) = blocks[-2], blocks[-1]
            if t1 * (t2 + n2) >= t2 * (t1 + n1):
                blocks[-2:] = [[t1 + t2, n1 + n2]]
            else:
                break
    Nt, Nn = int(n_tar.sum()), int(n_non.sum())
    # threshold above all scores, then lowered across blocks from the top
    miss, fa = Nt, 0
    pts = [(Fraction(fa, Nn), Fraction(miss, Nt))]
    for t, n in reversed(blocks):
        miss -= t
        fa += n
        pts.append((Fraction(fa, Nn), Fraction(miss, Nt)))
    pfa = np.array([float(p[0]) for p in pts])
    pmiss = np.array([float(p[1]) for p in pts])
    return RocchCurve(pfa, pmiss, tuple(pts))


def rocch_eer(curve: RocchCurve) -> float:
    pts = curve.fractions or tuple(
        (Fraction(a), Fraction(b)) for a, b in zip(curve.pfa, curve.pmiss))
    for (x1, y1), (x2, y2) in zip(pts[:-1], pts[1:]):
        d1, d2 = y1 - x1, y2 - x2
        if d1 >= 0 >= d2:
            if d1 == d2:
                return float(x1)
            return float(x1 + (x2 - x1) * d1 / (d1 - d2))
    raise AssertionError("hull does not cross the equal-error line")


def eer_rocch(scores: ScoreSet) -> float:
    """ROCCH equal error rate as a fraction in [0, 0.5]."""
    return rocch_eer(rocch(scores))


def eer_sweep(scores: ScoreSet) -> float:
    """Naive EER: min over thresholds of max(false-alarm, miss)."""
    g, s = np.sort(scores.genuine), np.sort(scores.spoof)
    thr = np.concatenate([np.unique(np.concatenate([g, s])), [np.inf]])
    pmiss = np.searchsorted(g, thr, side="left") / g.size
    pfa = 1.0 - np.searchsorted(s, thr, side="left") / s.size
    return float(np.min(np.maximum(pmiss, pfa)))


def _fmt(x: float) -> str:
    return repr(float(x))


def write_scores(path, trials) -> None:
    trials = list(trials.trials if isinstance(trials, ScoreSet) else trials)
    with open(path, "w") as fh:
        for t in trials:
            fh.write(f"{t.utt_id}\t{t.label}\t{t.attack or '-'}\t{_fmt(t.score)}\n")


def parse_trial(line: str, lineno: int, source="") -> Trial:
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 4:
        raise ScoreFileError(f"{source}:{lineno}: expected 4 tab-separated fields, got {len(parts)}")
    utt, label, attack, raw = parts
    if label not in LABELS:
        raise ScoreFileError(f"{source}:{lineno}: label must be genuine or spoof, got {label!r}")
    try:
        score = float(raw)
    except ValueError:
        raise ScoreFileError(f"{source}:{lineno}: bad score {raw!r}") from None
    if not np.isfinite(score):
        raise ScoreFileError(f"{source}:{lineno}: non-finite score")
    return Trial(utt, label, "" if attack == "-" else attack, score)


def read_scores(path) -> ScoreSet:
    trials = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            trials.append(parse_trial(line, lineno, path))
    if not trials:
        raise ScoreFileError(f"{path}: no trials")
    try:
        return ScoreSet.from_trials(trials)
    except ValueError as exc:
        raise ScoreFileError(f"{Path(path)}: {exc}") from None
