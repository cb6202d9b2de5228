from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

CLASSES = ("GENUINE", "REPLAY", "SS", "VC")
SUBSETS = ("train", "dev", "eval")
HEADER = ("utt_id", "path", "subset", "class", "tag")


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class AttackLabel:
    cls: str
    tag: str = ""
    known: bool = True

    def __post_init__(self):
        if self.cls not in CLASSES:
            raise ValueError(f"unknown class {self.cls!r}")
        if self.cls == "GENUINE" and self.tag:
            raise ValueError("genuine speech carries no attack tag")
        if self.cls != "GENUINE" and not self.tag:
            raise ValueError(f"{self.cls} entries need an attack tag")

    @property
    def is_genuine(self) -> bool:
        return self.cls == "GENUINE"


@dataclass(frozen=True)
class Entry:
    utt_id: str
    path: Path
    subset: str
    label: AttackLabel


@dataclass(frozen=True)
class Manifest:
    entries: tuple
    corpus: str = ""
    root: Path = Path(".")

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            if e.utt_id in seen:
                raise ManifestError(f"duplicate utterance id {e.utt_id!r}")
            seen.add(e.utt_id)
        train_tags = {e.label.tag for e in entries if e.subset in ("train", "dev")}
        # a tag is "known" iff it occurs in train or dev
        fixed = tuple(
            e if e.label.is_genuine else Entry(
                e.utt_id, e.path, e.subset,
                AttackLabel(e.label.cls, e.label.tag, e.label.tag in train_tags))
            for e in entries)
        object.__setattr__(self, "entries", fixed)

    def __len__(self):
        return len(self.entries)

    def subset(self, name: str) -> list:
        return [e for e in self.entries if e.subset == name]

    def tags(self, subset: str | None = None) -> list:
        return sorted({e.label.tag for e in self.entries
                       if not e.label.is_genuine and (subset is None or e.subset == subset)},
                      key=tag_sort_key)

    def tag_classes(self) -> dict:
        return {e.label.tag: e.label.cls for e in self.entries if not e.label.is_genuine}

    def audio_path(self, entry: Entry) -> Path:
        return entry.path if entry.path.is_absolute() else self.root / entry.path

    def missing(self) -> list:
        return [e.utt_id for e in self.entries if not self.audio_path(e).exists()]


def tag_sort_key(tag: str):
    head = tag.rstrip("0123456789")
    tail = tag[len(head):]
    return (head, int(tail) if tail else -1, tag)


def parse_manifest(path, corpus: str | None = None, check_paths: bool = True) -> Manifest:
    """Read a manifest TSV with header ``utt_id path subset class tag``.

    Relative audio paths resolve against the manifest's directory. Missing
    audio raises unless ``check_paths`` is false.
    """
    path = Path(path)
    entries = []
    seen = set()
    with open(path) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if tuple(header) != HEADER:
            raise ManifestError(f"{path}:1: header must be {' '.join(HEADER)}")
        for lineno, line in enumerate(fh, 2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) == 4:
                parts.append("")
            if len(parts) != 5:
                raise ManifestError(f"{path}:{lineno}: expected 5 fields, got {len(parts)}")
            utt, p, subset, cls, tag = parts
            if subset not in SUBSETS:
                raise ManifestError(f"{path}:{lineno}: unknown subset {subset!r}")
            if cls not in CLASSES:
                raise ManifestError(f"{path}:{lineno}: unknown class {cls!r}")
            if utt in seen:
                raise ManifestError(f"{path}:{lineno}: duplicate utterance id {utt!r}")
            seen.add(utt)
            tag = "" if tag == "-" else tag
            try:
                label = AttackLabel(cls, tag)
            except ValueError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from None
            entries.append(Entry(utt, Path(p), subset, label))
    m = Manifest(tuple(entries), corpus or path.parent.name, path.parent)
    if check_paths:
        missing = m.missing()
        if missing:
            raise ManifestError(f"{path}: {len(missing)} audio files missing, e.g. {missing[0]}")
    return m


def write_manifest(path, manifest: Manifest) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(HEADER) + "\n")
        for e in manifest.entries:
            fh.write(f"{e.utt_id}\t{e.path.as_posix()}\t{e.subset}\t{e.label.cls}\t{e.label.tag or '-'}\n")
