"""Top-1 and macro-averaged Top-1 accuracy over the relation classes."""

from __future__ import annotations

from dataclasses import dataclass

from .events import Corpus, LabelSpace


@dataclass
class EvalReport:
    label_space: LabelSpace
    confusion: list[list[int]]  # confusion[gold][pred]
    n: int
    top1: float
    macro_top1: float
    per_class_accuracy: dict[str, float]
    absent_classes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "label_space": self.label_space.name,
            "n": self.n,
            "top1": self.top1,
            "macro_top1": self.macro_top1,
            "per_class_accuracy": self.per_class_accuracy,
            "absent_classes": list(self.absent_classes),
            "confusion": self.confusion,
        }


def evaluate(predictions: dict[tuple[str, int], str], gold: Corpus) -> EvalReport:
    """Score per-instance label predictions against the gold corpus.

    ``predictions`` maps (sequence_id, target_index) to a label and must cover
    exactly the gold relation instances.  Classes absent from gold are excluded
    from the macro mean and flagged in the report.
    """
    space = gold.label_space
    labels = space.labels
    gold_keys = {(seq.id, rel.target_index) for seq in gold.sequences for rel in seq.relations}
    if set(predictions) != gold_keys:
        missing = gold_keys - set(predictions)
        extra = set(predictions) - gold_keys
        raise ValueError(
            f"predictions do not cover the gold instances exactly "
            f"({len(missing)} missing, {len(extra)} extra)"
        )
    c = space.size
    confusion = [[0] * c for _ in range(c)]
    for seq in gold.sequences:
        for rel in seq.relations:
            pred = predictions[(seq.id, rel.target_index)]
            if pred not in space:
                raise ValueError(f"predicted label {pred!r} outside space {space.name!r}")
            confusion[space.index(rel.label)][space.index(pred)] += 1
    n = sum(sum(row) for row in confusion)
    top1 = (sum(confusion[i][i] for i in range(c)) / n) if n else 0.0
    per_class = {}
    absent = []
    for i, lbl in enumerate(labels):
        support = sum(confusion[i])
        if support == 0:
            absent.append(lbl)
        else:
            per_class[lbl] = confusion[i][i] / support
    macro = sum(per_class.values()) / len(per_class) if per_class else 0.0
    return EvalReport(space, confusion, n, top1, macro, per_class, tuple(absent))


@dataclass
class ComparisonRow:
    name: str
    macro_top1: float
    top1: float
    n: int


def compare(reports: list[tuple[str, EvalReport]]) -> list[ComparisonRow]:
    """Fixed-column comparison, sorted by macro accuracy descending, names break ties."""
    if not reports:
        raise ValueError("need at least one report to compare")
    rows = [ComparisonRow(name, r.macro_top1, r.top1, r.n) for name, r in reports]
    rows.sort(key=lambda row: (-row.macro_top1, row.name))
    return rows


def comparison_csv(rows: list[ComparisonRow]) -> str:
    lines = ["name,macro_top1,top1,n"]
    lines += [f"{r.name},{r.macro_top1:.6f},{r.top1:.6f},{r.n}" for r in rows]
    return "\n".join(lines) + "\n"
