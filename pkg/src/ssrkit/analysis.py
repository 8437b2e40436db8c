"""Corpus pattern statistics and the non-learned baselines they motivate."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import InsufficientDataError
from .events import CENTER_INDEX, Corpus

DISTANCES = (-2, -1, 1, 2)


def relation_histogram(corpus: Corpus) -> dict[str, int]:
    hist = {label: 0 for label in corpus.label_space.labels}
    for rel in corpus.relation_instances():
        hist[rel.label] += 1
    return hist


def _dominant(hist: dict[str, int]) -> str:
    # argmax with lexicographic tie-break on the label name
    return min(hist, key=lambda lbl: (-hist[lbl], lbl))


def _is_tied(hist: dict[str, int]) -> bool:
    top = max(hist.values())
    return sum(1 for v in hist.values() if v == top) > 1


@dataclass
class PairRelationTable:
    table: dict[tuple[str, str], dict[str, int]]
    global_dominant: str

    def dominant_for(self, pair: tuple[str, str]) -> str:
        return _dominant(self.table[pair])

    @property
    def num_pairs(self) -> int:
        return len(self.table)

    def non_global_fraction(self) -> float:
        """Fraction of pairs whose dominant label differs from the global one.

        Pairs with a tied histogram are counted as NOT differing (conservative);
        use ``tie_count`` to see how many those are.
        """
        if not self.table:
            return 0.0
        n = sum(
            1
            for hist in self.table.values()
            if not _is_tied(hist) and _dominant(hist) != self.global_dominant
        )
        return n / len(self.table)

    @property
    def tie_count(self) -> int:
        return sum(1 for hist in self.table.values() if _is_tied(hist))


def pair_dominant_table(corpus: Corpus) -> PairRelationTable:
    """Per (target verb, center verb) label histograms plus the global dominant."""
    labels = corpus.label_space.labels
    table: dict[tuple[str, str], dict[str, int]] = {}
    global_hist = {lbl: 0 for lbl in labels}
    for seq in corpus.sequences:
        for rel in seq.relations:
            pair = (seq.event(rel.target_index).verb, seq.event(CENTER_INDEX).verb)
            hist = table.setdefault(pair, {lbl: 0 for lbl in labels})
            hist[rel.label] += 1
            global_hist[rel.label] += 1
    return PairRelationTable(table, _dominant(global_hist))


@dataclass
class DistanceDistribution:
    counts: dict[str, dict[int, int]]

    def total(self) -> int:
        return sum(sum(row.values()) for row in self.counts.values())


def distance_distribution(corpus: Corpus) -> DistanceDistribution:
    counts = {lbl: {d: 0 for d in DISTANCES} for lbl in corpus.label_space.labels}
    for rel in corpus.relation_instances():
        counts[rel.label][rel.distance] += 1
    return DistanceDistribution(counts)


def memorization_baseline(train: Corpus, test: Corpus) -> dict[tuple[str, int], str]:
    """Predict the train-set dominant label of each verb pair; fall back to the
    global dominant for unseen pairs."""
    if train.label_space.name != test.label_space.name:
        raise ValueError("train and test corpora use different label spaces")
    if not train.sequences:
        raise InsufficientDataError("empty training corpus")
    table = pair_dominant_table(train)
    preds = {}
    for seq in test.sequences:
        for rel in seq.relations:
            pair = (seq.event(rel.target_index).verb, seq.event(CENTER_INDEX).verb)
            if pair in table.table:
                preds[(seq.id, rel.target_index)] = table.dominant_for(pair)
            else:
                preds[(seq.id, rel.target_index)] = table.global_dominant
    return preds


def majority_baseline(train: Corpus, test: Corpus) -> dict[tuple[str, int], str]:
    """Predict the global dominant train label for every test instance."""
    if train.label_space.name != test.label_space.name:
        raise ValueError("train and test corpora use different label spaces")
    if not train.sequences:
        raise InsufficientDataError("empty training corpus")
    dominant = _dominant(relation_histogram(train))
    return {
        (seq.id, rel.target_index): dominant
        for seq in test.sequences
        for rel in seq.relations
    }


def histogram_csv(hist: dict[str, int]) -> str:
    lines = ["label,count"]
    lines += [f"{lbl},{hist[lbl]}" for lbl in hist]
    return "\n".join(lines) + "\n"


def distance_csv(dist: DistanceDistribution) -> str:
    lines = ["label,distance,count"]
    for lbl, row in dist.counts.items():
        for d in DISTANCES:
            lines.append(f"{lbl},{d},{row[d]}")
    return "\n".join(lines) + "\n"
