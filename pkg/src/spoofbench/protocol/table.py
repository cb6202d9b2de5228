"""Result tables shaped like the per-attack EER tables: one row per (feature, mask, variant)."""

from __future__ import annotations

from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from .manifest import tag_sort_key

CLASS_COLUMNS = (("REPLAY", "Replay"), ("SS", "SS"), ("VC", "VC"))


@dataclass
class ResultRow:
    feature: str
    mask: str  # three flags, replay/ss/vc
    variant: str
    eer: dict = field(default_factory=dict)  # tag -> fraction
    error: str = ""

    @property
    def failed(self) -> bool:
        return bool(self.error)

    def excluded(self, cls: str) -> bool:
        idx = {"REPLAY": 0, "SS": 1, "VC": 2}.get(cls)
        return idx is not None and self.mask[idx] == "0"


@dataclass
class ResultTable:
    tags: list
    tag_classes: dict
    rows: list = field(default_factory=list)

    def row(self, feature, mask, variant) -> ResultRow:
        for r in self.rows:
            if (r.feature, r.mask, r.variant) == (feature, mask, variant):
                return r
        raise KeyError((feature, mask, variant))

    def members(self, cls: str) -> list:
        return [t for t in self.tags if self.tag_classes.get(t) == cls]

    def class_average(self, row: ResultRow, cls: str):
        vals = [row.eer[t] for t in self.members(cls) if t in row.eer]
        return sum(vals) / len(vals) if vals else None

    def overall_average(self, row: ResultRow):
        vals = [row.eer[t] for t in self.tags if t in row.eer]
        return sum(vals) / len(vals) if vals else None


def _pct(x: float) -> Decimal:
    return (Decimal(repr(float(x))) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def _mean(vals) -> Decimal:
    return (sum(vals, Decimal(0)) / len(vals)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def table_lines(rt: ResultTable) -> list:
    """Header and rows as lists of strings.

    Per-attack cells are EER percent with two decimals, ``[..]`` around cells
    of classes the mask left out of training. Averages are means of the
    printed per-attack values, so a reader can recompute them exactly.
    """
    head = ["Feature", "Replay", "SS", "VC", "Type", *rt.tags,
            *(f"Avg {label}" for _, label in CLASS_COLUMNS), "Avg All"]
    lines = [head]
    for r in rt.rows:
        flags = ["Y" if c == "1" else "x" for c in r.mask]
        cells, shown = [], {}
        for t in rt.tags:
            if r.failed:
                cells.append("FAIL")
            elif t not in r.eer:
                cells.append("-")
            else:
                shown[t] = _pct(r.eer[t])
                txt = f"{shown[t]}"
                cells.append(f"[{txt}]" if r.excluded(rt.tag_classes[t]) else txt)
        avgs = []
        for cls, _ in CLASS_COLUMNS:
            vals = [shown[t] for t in rt.members(cls) if t in shown]
            avgs.append(str(_mean(vals)) if vals else "-")
        allv = list(shown.values())
        avgs.append(str(_mean(allv)) if allv else "-")
        lines.append([r.feature, *flags, r.variant, *cells, *avgs])
    return lines


def render_table(rt: ResultTable, fmt: str = "tsv") -> str:
    lines = table_lines(rt)
    if fmt == "tsv":
        return "".join("\t".join(row) + "\n" for row in lines)
    if fmt == "markdown":
        out = ["| " + " | ".join(lines[0]) + " |",
               "|" + "|".join("---" for _ in lines[0]) + "|"]
        out += ["| " + " | ".join(row) + " |" for row in lines[1:]]
        return "\n".join(out) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def emit_table(rt: ResultTable, fmt: str, path) -> Path:
    path = Path(path)
    path.write_text(render_table(rt, fmt))
    return path
