from __future__ import annotations

from dataclasses import dataclass

from .manifest import Manifest

MASK_NAMES = {
    "full": (True, True, True),
    "no_replay": (False, True, True),
    "no_ss": (True, False, True),
    "no_vc": (True, True, False),
}


class TrainingConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TrainMask:
    include_replay: bool = True
    include_ss: bool = True
    include_vc: bool = True

    def __post_init__(self):
        if not (self.include_replay or self.include_ss or self.include_vc):
            raise TrainingConfigError("a training mask must include at least one spoof class")

    @classmethod
    def parse(cls, text: str) -> "TrainMask":
        """``full``, ``no_replay``, ``no_ss``, ``no_vc`` or three 0/1 flags such as ``011``."""
        text = text.strip()
        if text in MASK_NAMES:
            return cls(*MASK_NAMES[text])
        if len(text) == 3 and set(text) <= {"0", "1"}:
            return cls(*(c == "1" for c in text))
        raise TrainingConfigError(f"unknown mask {text!r}")

    @property
    def code(self) -> str:
        return "".join("1" if f else "0" for f in (self.include_replay, self.include_ss, self.include_vc))

    @property
    def name(self) -> str:
        for name, flags in MASK_NAMES.items():
            if flags == (self.include_replay, self.include_ss, self.include_vc):
                return name
        return self.code

    def includes(self, cls_name: str) -> bool:
        return {"REPLAY": self.include_replay, "SS": self.include_ss,
                "VC": self.include_vc, "GENUINE": True}[cls_name]

    def excluded_classes(self) -> tuple:
        return tuple(c for c in ("REPLAY", "SS", "VC") if not self.includes(c))


def select_training(m: Manifest, mask: TrainMask, subset: str = "train"):
    """Natural and spoof training pools as id-sorted entry lists."""
    natural = sorted((e for e in m.subset(subset) if e.label.is_genuine), key=lambda e: e.utt_id)
    spoof = sorted((e for e in m.subset(subset)
                    if not e.label.is_genuine and mask.includes(e.label.cls)),
                   key=lambda e: e.utt_id)
    if not spoof:
        raise TrainingConfigError(f"mask {mask.name} leaves no spoofed {subset} data in {m.corpus}")
    if not natural:
        raise TrainingConfigError(f"no genuine {subset} data in {m.corpus}")
    return natural, spoof
