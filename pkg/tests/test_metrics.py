import random

import pytest

from ssrkit.metrics import compare, comparison_csv, evaluate

from conftest import VIDSITU, make_sequence, random_corpus
from ssrkit.events import Corpus


def _gold_fixture():
    """Gold class counts [2,2,2,2]; correct counts [2,1,0,2] by class index."""
    labels = VIDSITU.labels
    seqs = []
    preds = {}
    k = 0
    correct_per_class = [2, 1, 0, 2]
    for ci, lbl in enumerate(labels):
        for j in range(2):
            sid = f"g{k}"
            seqs.append(make_sequence(sid, ["a", "b", "c", "d", "e"], {1: lbl}))
            if j < correct_per_class[ci]:
                preds[(sid, 1)] = lbl
            else:
                preds[(sid, 1)] = labels[(ci + 1) % 4]
            k += 1
    return Corpus(VIDSITU, seqs), preds


def test_hand_computed_confusion():
    gold, preds = _gold_fixture()
    report = evaluate(preds, gold)
    assert report.n == 8
    assert report.per_class_accuracy == {
        "Causes": 1.0,
        "Enables": 0.5,
        "ReactionTo": 0.0,
        "NoRelation": 1.0,
    }
    assert report.macro_top1 == pytest.approx(0.625, abs=1e-12)
    assert report.top1 == pytest.approx(0.625, abs=1e-12)
    # row sums match the supports, diagonal matches correct counts
    assert [sum(row) for row in report.confusion] == [2, 2, 2, 2]
    assert [report.confusion[i][i] for i in range(4)] == [2, 1, 0, 2]


def test_all_correct_gives_ones():
    gold = random_corpus(num_sequences=5, seed=9)
    preds = {
        (s.id, r.target_index): r.label for s in gold.sequences for r in s.relations
    }
    report = evaluate(preds, gold)
    assert report.top1 == 1.0 and report.macro_top1 == 1.0


def test_permutation_invariance():
    gold = random_corpus(num_sequences=10, seed=3)
    preds = {
        (s.id, r.target_index): random.Random(0).choice(VIDSITU.labels)
        for s in gold.sequences
        for r in s.relations
    }
    shuffled = Corpus(gold.label_space, list(reversed(gold.sequences)))
    assert evaluate(preds, gold).to_dict() == evaluate(preds, shuffled).to_dict()


def test_equal_support_macro_equals_top1():
    gold, preds = _gold_fixture()
    report = evaluate(preds, gold)
    assert report.macro_top1 == pytest.approx(report.top1)


def test_absent_classes_excluded_and_flagged():
    gold = Corpus(
        VIDSITU,
        [make_sequence("s1", ["a"] * 5, {1: "Causes", 2: "Enables"})],
    )
    report = evaluate({("s1", 1): "Causes", ("s1", 2): "Causes"}, gold)
    assert set(report.absent_classes) == {"ReactionTo", "NoRelation"}
    assert report.macro_top1 == pytest.approx(0.5)  # mean of 1.0 and 0.0


def test_coverage_mismatch_rejected():
    gold = random_corpus(num_sequences=2, seed=0)
    with pytest.raises(ValueError):
        evaluate({}, gold)
    full = {(s.id, r.target_index): r.label for s in gold.sequences for r in s.relations}
    with pytest.raises(ValueError):
        evaluate(dict(full, extra_key=("x", 1)), gold)


def test_label_outside_space_rejected():
    gold = Corpus(VIDSITU, [make_sequence("s1", ["a"] * 5, {1: "Causes"})])
    with pytest.raises(ValueError):
        evaluate({("s1", 1): "Banana"}, gold)


def test_compare_sorts_and_breaks_ties_by_name():
    gold, preds = _gold_fixture()
    mid = evaluate(preds, gold)
    perfect = evaluate(
        {(s.id, r.target_index): r.label for s in gold.sequences for r in s.relations},
        gold,
    )
    rows = compare([("zeta", mid), ("beta", perfect), ("alpha", mid)])
    assert [r.name for r in rows] == ["beta", "alpha", "zeta"]
    # independent sort oracle
    oracle = sorted(
        [("zeta", mid), ("beta", perfect), ("alpha", mid)],
        key=lambda item: (-item[1].macro_top1, item[0]),
    )
    assert [r.name for r in rows] == [name for name, _ in oracle]


def test_compare_rejects_empty():
    with pytest.raises(ValueError):
        compare([])


def test_comparison_csv():
    gold, preds = _gold_fixture()
    rows = compare([("only", evaluate(preds, gold))])
    csv = comparison_csv(rows)
    assert csv.splitlines()[0] == "name,macro_top1,top1,n"
    assert csv.splitlines()[1].startswith("only,0.625000,0.625000,8")
