import random

import numpy as np
import pytest
import torch

from ssrkit.codec import MODE_FULL, MODE_PAIR, build_vocab
from ssrkit.errors import (
    CannotBalanceError,
    InsufficientDataError,
    LabelSpaceMismatchError,
    ZeroFrequencyError,
)
from ssrkit.events import Corpus, LabelSpace
from ssrkit.model import (
    Distribution,
    Model,
    ModelConfig,
    class_weights,
    load_bytes,
    load_model,
    predict,
    predict_corpus,
    save_bytes,
    save_model,
    train,
    undersample,
    uniform_weights,
)
from ssrkit.model.network import RelationClassifier, cross_entropy
from ssrkit.model.training import ClassWeights, _encode_classifier_data, _pad_mask
from ssrkit.analysis import relation_histogram

from conftest import VIDSITU, make_sequence, random_corpus


def _skewed_corpus(counts, seed=0, per_seq=None):
    """Corpus whose relation labels realize the given per-label counts."""
    rng = random.Random(seed)
    labels = []
    for lbl, n in counts.items():
        labels.extend([lbl] * n)
    rng.shuffle(labels)
    seqs = []
    k = 0
    while labels:
        take, labels = labels[:4], labels[4:]
        targets = dict(zip((1, 2, 4, 5), take))
        seqs.append(make_sequence(f"sk-{seed}-{k:03d}", ["a", "b", "c", "d", "e"], targets))
        k += 1
    return Corpus(VIDSITU, seqs)


class TestClassWeights:
    def test_inverse_proportions(self):
        corpus = _skewed_corpus(
            {"Causes": 8, "Enables": 4, "ReactionTo": 2, "NoRelation": 2}
        )
        w = class_weights(corpus).weights
        assert w == {"Causes": 2.0, "Enables": 4.0, "ReactionTo": 8.0, "NoRelation": 8.0}

    def test_two_label_space_counts_3_1(self):
        # counts [3, 1] over a 2-label space -> beta = [4/3, 4]
        space = LabelSpace("toy2", ("A", "B"))
        seqs = [
            make_sequence("s0", ["a"] * 5, {1: "A", 2: "A", 4: "A", 5: "B"}),
        ]
        corpus = Corpus(space, seqs)
        w = class_weights(corpus).weights
        assert w["A"] == pytest.approx(4 / 3)
        assert w["B"] == pytest.approx(4.0)

    def test_uniform_proportions_equal_weights(self):
        corpus = _skewed_corpus({lbl: 4 for lbl in VIDSITU.labels})
        w = class_weights(corpus).weights
        assert len(set(w.values())) == 1

    def test_absent_class_rejected(self):
        corpus = _skewed_corpus({"Causes": 8, "Enables": 4})
        with pytest.raises(ZeroFrequencyError):
            class_weights(corpus)


class TestWeightedLossIdentity:
    def test_uniform_beta_equals_plain_on_100_batches(self):
        g = torch.Generator().manual_seed(0)
        for _ in range(100):
            logits = torch.randn(16, 4, generator=g, dtype=torch.float64)
            targets = torch.randint(0, 4, (16,), generator=g)
            plain = cross_entropy(logits, targets)
            uniform = cross_entropy(logits, targets, torch.ones(4, dtype=torch.float64))
            assert abs(float(plain) - float(uniform)) < 1e-9

    def test_weighted_loss_scales_per_class(self):
        logits = torch.zeros(2, 4)
        targets = torch.tensor([0, 1])
        beta = torch.tensor([2.0, 4.0, 1.0, 1.0])
        expected = (2.0 + 4.0) / 2 * float(cross_entropy(logits[:1], targets[:1]))
        assert float(cross_entropy(logits, targets, beta)) == pytest.approx(expected)


class TestUndersample:
    def test_spec_example_enables_reduced(self):
        # {Enables: 10, Causes: 4, ReactionTo: 3, NoRelation: 3} packed so each
        # removed sequence carries 2 Enables -> Enables ends at <= 6
        seqs = []
        for k in range(5):
            seqs.append(
                make_sequence(
                    f"e{k}",
                    ["a"] * 5,
                    {1: "Enables", 2: "Enables",
                     4: ["Causes", "Causes", "Causes", "ReactionTo", "ReactionTo"][k],
                     5: ["Causes", "ReactionTo", "NoRelation", "NoRelation", "NoRelation"][k]},
                )
            )
        corpus = Corpus(VIDSITU, seqs)
        before = relation_histogram(corpus)
        assert before == {"Enables": 10, "Causes": 4, "ReactionTo": 3, "NoRelation": 3}
        out = undersample(corpus, seed=0)
        after = relation_histogram(out)
        assert after["Enables"] <= 6

    def test_contract_on_50_random_corpora(self):
        rng = random.Random(99)
        for trial in range(50):
            counts = {
                "Causes": rng.randint(1, 30),
                "Enables": rng.randint(1, 30),
                "ReactionTo": rng.randint(1, 30),
                "NoRelation": rng.randint(1, 30),
            }
            corpus = _skewed_corpus(counts, seed=trial)
            out = undersample(corpus, seed=trial)
            before = relation_histogram(corpus)
            after = relation_histogram(out)
            # never increases any class count
            assert all(after[lbl] <= before[lbl] for lbl in before)
            # dominant within one sequence (4 instances) of the runner-up
            ordered = sorted(after.values(), reverse=True)
            assert ordered[0] <= ordered[1] + 4
            # never splits sequences
            kept = {s.id: s for s in out.sequences}
            originals = {s.id: s for s in corpus.sequences}
            for sid, seq in kept.items():
                assert seq.relations == originals[sid].relations

    def test_balanced_corpus_unchanged(self):
        corpus = _skewed_corpus({lbl: 4 for lbl in VIDSITU.labels})
        out = undersample(corpus, seed=0)
        assert [s.id for s in out.sequences] == [s.id for s in corpus.sequences]

    def test_kept_fraction_in_meta(self):
        corpus = _skewed_corpus({"Causes": 16, "Enables": 2, "ReactionTo": 1, "NoRelation": 1})
        out = undersample(corpus, seed=0)
        info = out.meta["undersample"]
        assert info["kept_fraction"] == pytest.approx(
            len(out.sequences) / len(corpus.sequences)
        )

    def test_single_label_rejected(self):
        corpus = _skewed_corpus({"Causes": 8})
        with pytest.raises(CannotBalanceError):
            undersample(corpus, seed=0)

    def test_deterministic_given_seed(self):
        corpus = _skewed_corpus({"Causes": 20, "Enables": 5, "ReactionTo": 5, "NoRelation": 5})
        a = [s.id for s in undersample(corpus, seed=3).sequences]
        b = [s.id for s in undersample(corpus, seed=3).sequences]
        assert a == b


def _tiny_cfg(**kw):
    base = dict(embed_dim=8, num_layers=2, num_heads=2, max_len=48, epochs=2,
                batch_size=8, seed=0)
    base.update(kw)
    return ModelConfig(**base)


class TestGradientCheck:
    def test_analytic_matches_central_differences(self):
        """Relative error <= 1e-4 at step 1e-3, float64, 20 random batches."""
        corpus = random_corpus(num_sequences=4, seed=5)
        vocab = build_vocab(corpus)
        cfg = _tiny_cfg(vocab_size=vocab.size)
        x, y, _ = _encode_classifier_data(corpus, vocab, cfg, MODE_FULL, True)
        mask = _pad_mask(x, vocab)
        rng = np.random.default_rng(0)
        for trial in range(20):
            torch.manual_seed(trial)
            net = RelationClassifier(cfg, 4).double()
            idx = torch.tensor(rng.choice(x.shape[0], size=4, replace=True))
            xb, yb, mb = x[idx], y[idx], mask[idx]

            def loss_fn():
                return cross_entropy(net(xb, mb), yb)

            loss = loss_fn()
            net.zero_grad()
            loss.backward()
            # probe a handful of coordinates per trial across all parameters
            params = [p for p in net.parameters() if p.requires_grad]
            p = params[trial % len(params)]
            flat = p.detach().view(-1)
            grad = p.grad.view(-1)
            for coord in rng.choice(flat.shape[0], size=3, replace=False):
                h = 1e-3
                orig = float(flat[coord])
                with torch.no_grad():
                    flat[coord] = orig + h
                    up = float(loss_fn())
                    flat[coord] = orig - h
                    down = float(loss_fn())
                    flat[coord] = orig
                numeric = (up - down) / (2 * h)
                analytic = float(grad[coord])
                denom = max(abs(numeric), abs(analytic), 1e-8)
                assert abs(numeric - analytic) / denom <= 1e-4


@pytest.fixture(scope="module")
def trained():
    corpus = random_corpus(num_sequences=12, seed=8)
    val = random_corpus(num_sequences=4, seed=9)
    return corpus, val, train(_tiny_cfg(), corpus, val)


class TestTraining:
    def test_same_seed_identical_params(self, trained):
        corpus, val, model = trained
        again = train(_tiny_cfg(), corpus, val)
        assert set(model.params) == set(again.params)
        for name in model.params:
            assert np.array_equal(model.params[name], again.params[name])

    def test_history_logged(self, trained):
        _, _, model = trained
        history = model.manifest["history"]
        assert len(history) == 2
        assert all("train_loss" in h and "val_macro_top1" in h for h in history)

    def test_empty_train_rejected(self):
        with pytest.raises(InsufficientDataError):
            train(_tiny_cfg(), Corpus(VIDSITU, []), random_corpus(2, seed=1))

    def test_space_mismatch_rejected(self):
        from ssrkit.events import get_label_space

        kb_corpus = random_corpus(4, seed=1, space=get_label_space("kb-pretrain"))
        with pytest.raises(LabelSpaceMismatchError):
            train(_tiny_cfg(), kb_corpus, kb_corpus)

    def test_wrong_weight_space_rejected(self):
        corpus = random_corpus(4, seed=1)
        bad = ClassWeights("kb-pretrain", {"Before": 1.0, "Intent": 1.0, "After": 1.0})
        with pytest.raises(LabelSpaceMismatchError):
            train(_tiny_cfg(), corpus, corpus, weights=bad)

    def test_predict_returns_distribution(self, trained):
        corpus, _, model = trained
        seq = corpus.sequences[0]
        dist = predict(model, seq, 1)
        assert isinstance(dist, Distribution)
        assert dist.probs.sum() == pytest.approx(1.0, abs=1e-6)
        assert dist.argmax_label in VIDSITU.labels

    def test_predict_corpus_covers_all_instances(self, trained):
        corpus, _, model = trained
        preds = predict_corpus(model, corpus)
        assert len(preds) == corpus.num_relations()

    def test_zero_head_gives_uniform_distribution(self, trained):
        corpus, _, model = trained
        zeroed = Model(
            model.config,
            model.vocabulary,
            {
                name: (np.zeros_like(arr) if name.startswith("head.") else arr)
                for name, arr in model.params.items()
            },
            manifest=dict(model.manifest),
        )
        dist = predict(zeroed, corpus.sequences[0], 2)
        assert np.allclose(dist.probs, 0.25, atol=1e-6)

    def test_pair_mode_training(self):
        corpus = random_corpus(num_sequences=6, seed=2)
        model = train(_tiny_cfg(epochs=1), corpus, corpus, mode=MODE_PAIR)
        assert model.manifest["mode"] == MODE_PAIR
        dist = predict(model, corpus.sequences[0], 4)
        assert dist.probs.shape == (4,)


class TestContainer:
    def test_round_trip_byte_exact(self, tmp_path):
        corpus = random_corpus(num_sequences=6, seed=4)
        model = train(_tiny_cfg(epochs=1), corpus, corpus)
        blob = save_bytes(model)
        reloaded = load_bytes(blob)
        assert save_bytes(reloaded) == blob
        path = tmp_path / "m.ssrm"
        save_model(model, path)
        assert load_model(path).config == model.config
        assert path.read_bytes() == blob

    def test_reload_preserves_everything(self):
        corpus = random_corpus(num_sequences=6, seed=4)
        model = train(_tiny_cfg(epochs=1), corpus, corpus)
        reloaded = load_bytes(save_bytes(model))
        assert reloaded.vocabulary.token_to_id == model.vocabulary.token_to_id
        assert reloaded.manifest == model.manifest
        for name in model.params:
            assert np.array_equal(reloaded.params[name], model.params[name])

    def test_bad_magic_rejected(self):
        with pytest.raises(ValueError):
            load_bytes(b"NOPE" + b"\x00" * 16)

    def test_truncated_rejected(self):
        corpus = random_corpus(num_sequences=2, seed=4)
        model = train(_tiny_cfg(epochs=1), corpus, corpus)
        blob = save_bytes(model)
        with pytest.raises(ValueError):
            load_bytes(blob[:-5])

    def test_reloaded_model_predicts_identically(self):
        corpus = random_corpus(num_sequences=6, seed=4)
        model = train(_tiny_cfg(epochs=1), corpus, corpus)
        reloaded = load_bytes(save_bytes(model))
        seq = corpus.sequences[0]
        assert np.array_equal(predict(model, seq, 1).probs, predict(reloaded, seq, 1).probs)


class TestDistribution:
    def test_rejects_invalid(self):
        with pytest.raises(ValueError):
            Distribution(VIDSITU.labels, np.array([0.5, 0.5, 0.5, 0.5]))
        with pytest.raises(ValueError):
            Distribution(VIDSITU.labels, np.array([-0.1, 0.4, 0.4, 0.3]))

    def test_uniform_weights_helper(self):
        corpus = random_corpus(2, seed=0)
        w = uniform_weights(corpus)
        assert set(w.weights.values()) == {1.0}
