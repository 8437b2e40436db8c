"""Training, inference, and balancing for the relation models.

Training is single-threaded and bit-reproducible given the config seed; the
returned :class:`Model` holds the parameters with the best validation macro
accuracy.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, replace

import numpy as np
import torch

from ..analysis import relation_histogram, _dominant
from ..codec import MODE_FULL, MODE_PAIR, Vocabulary, build_vocab, encode, serialize_event, serialize_full, serialize_pair
from ..errors import (
    CannotBalanceError,
    InsufficientDataError,
    LabelSpaceMismatchError,
    TrainingDivergedError,
    ZeroFrequencyError,
)
from ..events import Corpus, EventSequence, RELATION_TARGETS, get_label_space
from ..metrics import evaluate
from .beam import beam_search
from .config import ARCH_CLASSIFIER, ARCH_SEQ2SEQ, ModelConfig
from .container import Model
from .network import RelationClassifier, RelationSeq2Seq, cross_entropy

log = logging.getLogger("ssrkit")


@dataclass(frozen=True)
class Distribution:
    labels: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self):
        if np.any(self.probs < 0) or abs(float(self.probs.sum()) - 1.0) > 1e-6:
            raise ValueError("probabilities must be nonnegative and sum to 1")

    @property
    def argmax_label(self) -> str:
        return self.labels[int(np.argmax(self.probs))]


@dataclass(frozen=True)
class ClassWeights:
    space_name: str
    weights: dict[str, float]

    def as_tensor(self, labels: tuple[str, ...]) -> torch.Tensor:
        return torch.tensor([self.weights[lbl] for lbl in labels], dtype=torch.float32)


def class_weights(corpus: Corpus) -> ClassWeights:
    """Inverse-proportion weights: beta_l = total / count_l."""
    hist = relation_histogram(corpus)
    total = sum(hist.values())
    missing = [lbl for lbl, n in hist.items() if n == 0]
    if missing:
        raise ZeroFrequencyError(f"labels never occur: {missing}")
    return ClassWeights(corpus.label_space.name, {lbl: total / n for lbl, n in hist.items()})


def uniform_weights(corpus: Corpus) -> ClassWeights:
    return ClassWeights(corpus.label_space.name, {lbl: 1.0 for lbl in corpus.label_space.labels})


def undersample(corpus: Corpus, seed: int = 0) -> Corpus:
    """Balance the relation classes by removing whole sequences.

    While the dominant class outnumbers every other class, the sequence
    carrying the most dominant-class instances is removed (ties broken by a
    seeded shuffle).  Sequences are never split.
    """
    hist = relation_histogram(corpus)
    if sum(1 for n in hist.values() if n > 0) < 2:
        raise CannotBalanceError("need at least two labels present to balance")
    rng = random.Random(seed)
    order = list(corpus.sequences)
    rng.shuffle(order)
    kept = list(order)
    counts = dict(hist)
    while True:
        dominant = _dominant(counts)
        second = max(n for lbl, n in counts.items() if lbl != dominant)
        if counts[dominant] <= second:
            break
        best_i = max(
            range(len(kept)),
            key=lambda i: sum(1 for r in kept[i].relations if r.label == dominant),
        )
        removed = kept.pop(best_i)
        for r in removed.relations:
            counts[r.label] -= 1
    # restore the original corpus order for the survivors
    kept_ids = {s.id for s in kept}
    sequences = [s for s in corpus.sequences if s.id in kept_ids]
    meta = dict(corpus.meta)
    meta["undersample"] = {
        "seed": seed,
        "kept_sequences": len(sequences),
        "total_sequences": len(corpus.sequences),
        "kept_fraction": len(sequences) / len(corpus.sequences) if corpus.sequences else 1.0,
    }
    return Corpus(corpus.label_space, sequences, meta)


def _serialize_instance(seq: EventSequence, target: int, mode: str, include_aux: bool):
    if mode == MODE_PAIR:
        return serialize_pair(seq, target, include_aux)
    if mode == MODE_FULL:
        return serialize_full(seq, target, include_aux)
    raise ValueError(f"unknown mode {mode!r}")


def _encode_classifier_data(corpus, vocab, cfg, mode, include_aux):
    ids, keys, targets = [], [], []
    space = get_label_space(cfg.label_space)
    for seq in corpus.sequences:
        for rel in seq.relations:
            ts = _serialize_instance(seq, rel.target_index, mode, include_aux)
            ids.append(encode(ts, vocab, cfg.max_len))
            keys.append((seq.id, rel.target_index))
            targets.append(space.index(rel.label))
    x = torch.tensor(ids, dtype=torch.long)
    y = torch.tensor(targets, dtype=torch.long)
    return x, y, keys


def _pad_mask(x: torch.Tensor, vocab: Vocabulary) -> torch.Tensor:
    return x == vocab.id_of("<PAD>")


def _state_to_numpy(net: torch.nn.Module) -> dict[str, np.ndarray]:
    return {
        name: tensor.detach().cpu().numpy().astype(np.float32, copy=True)
        for name, tensor in net.state_dict().items()
    }


def _load_numpy_state(net: torch.nn.Module, params: dict[str, np.ndarray]) -> None:
    net.load_state_dict({name: torch.from_numpy(arr.copy()) for name, arr in params.items()})


def _batches(n: int, batch_size: int, rng: random.Random):
    idx = list(range(n))
    rng.shuffle(idx)
    for start in range(0, n, batch_size):
        yield idx[start : start + batch_size]


def _classifier_predictions(net, x, mask, keys, labels, batch_size=256):
    net.eval()
    preds = {}
    with torch.no_grad():
        for start in range(0, x.shape[0], batch_size):
            logits = net(x[start : start + batch_size], mask[start : start + batch_size])
            for j, k in enumerate(range(start, min(start + batch_size, x.shape[0]))):
                preds[keys[k]] = labels[int(torch.argmax(logits[j]))]
    net.train()
    return preds


def _dominant_fraction(preds: dict, dominant: str) -> float:
    if not preds:
        return 0.0
    return sum(1 for p in preds.values() if p == dominant) / len(preds)


def _check_spaces(cfg: ModelConfig, *corpora: Corpus) -> None:
    for c in corpora:
        if c.label_space.name != cfg.label_space:
            raise LabelSpaceMismatchError(
                f"corpus uses {c.label_space.name!r}, config expects {cfg.label_space!r}"
            )


def train(
    cfg: ModelConfig,
    train_corpus: Corpus,
    val_corpus: Corpus,
    weights: ClassWeights | None = None,
    mode: str = MODE_FULL,
    include_aux: bool = True,
    vocab: Vocabulary | None = None,
    manifest: dict | None = None,
) -> Model:
    """Train the encoder classifier; returns the best-validation-macro parameters."""
    if not train_corpus.sequences or train_corpus.num_relations() == 0:
        raise InsufficientDataError("empty training corpus")
    _check_spaces(cfg, train_corpus, val_corpus)
    if weights is not None and weights.space_name != cfg.label_space:
        raise LabelSpaceMismatchError(
            f"weights are over {weights.space_name!r}, config expects {cfg.label_space!r}"
        )
    space = get_label_space(cfg.label_space)
    if vocab is None:
        vocab = build_vocab(train_corpus, include_aux=include_aux)
    cfg = replace(cfg, vocab_size=vocab.size, architecture=ARCH_CLASSIFIER)

    torch.set_num_threads(1)
    torch.manual_seed(cfg.seed)
    net = RelationClassifier(cfg, space.size)
    return _finetune(cfg, net, train_corpus, val_corpus, vocab, weights, mode, include_aux,
                     dict(manifest or {}))


def _build_net(model: Model) -> torch.nn.Module:
    cached = getattr(model, "_net_cache", None)
    if cached is not None:
        return cached
    space = get_label_space(model.config.label_space)
    torch.set_num_threads(1)
    if model.config.architecture == ARCH_CLASSIFIER:
        net = RelationClassifier(model.config, space.size)
    else:
        net = RelationSeq2Seq(model.config, space.size)
    _load_numpy_state(net, model.params)
    net.eval()
    model._net_cache = net
    return net


def predict(
    model: Model,
    seq: EventSequence,
    target_index: int,
    mode: str | None = None,
    include_aux: bool | None = None,
) -> Distribution:
    """Class distribution for one relation instance; pure in (params, input)."""
    if model.config.architecture != ARCH_CLASSIFIER:
        raise ValueError("predict requires a classifier model")
    mode = mode if mode is not None else model.manifest.get("mode", MODE_FULL)
    if include_aux is None:
        include_aux = model.manifest.get("include_aux", True)
    space = get_label_space(model.config.label_space)
    ts = _serialize_instance(seq, target_index, mode, include_aux)
    ids = torch.tensor([encode(ts, model.vocabulary, model.config.max_len)], dtype=torch.long)
    if int(ids.max()) >= model.config.vocab_size:
        raise LabelSpaceMismatchError("encoded ids exceed the model vocabulary")
    net = _build_net(model)
    with torch.no_grad():
        probs = torch.softmax(net(ids, _pad_mask(ids, model.vocabulary)), dim=-1)[0]
    p = probs.numpy().astype(np.float64)
    return Distribution(space.labels, p / p.sum())


def predict_corpus(model: Model, corpus: Corpus, mode=None, include_aux=None):
    """Argmax predictions for every relation instance in the corpus."""
    return {
        (seq.id, rel.target_index): predict(model, seq, rel.target_index, mode, include_aux).argmax_label
        for seq in corpus.sequences
        for rel in seq.relations
    }


def serialize_events_only(seq: EventSequence, include_aux: bool = True) -> list[str]:
    """Seq2seq input: the five events in order, no markers."""
    tokens: list[str] = []
    for i in range(1, 6):
        tokens.extend(serialize_event(seq.event(i), include_aux))
    return tokens


def _encode_seq2seq_data(corpus, vocab, cfg, include_aux):
    from ..codec import TokenSequence

    space = get_label_space(cfg.label_space)
    ids, golds, seqs = [], [], []
    skipped = 0
    for seq in corpus.sequences:
        rels = {r.target_index: r for r in seq.relations}
        if set(rels) != set(RELATION_TARGETS):
            skipped += 1
            continue
        ts = TokenSequence(tuple(serialize_events_only(seq, include_aux)), (), MODE_PAIR, 1)
        ids.append(encode(ts, vocab, cfg.max_len))
        golds.append([space.index(rels[t].label) for t in RELATION_TARGETS])
        seqs.append(seq)
    x = torch.tensor(ids, dtype=torch.long)
    y = torch.tensor(golds, dtype=torch.long)
    return x, y, seqs, skipped


def teacher_forcing_loss(net: RelationSeq2Seq, ids, pad_mask, gold) -> torch.Tensor:
    """Sum over the 4 steps of gold-prefix cross-entropies, mean over the batch."""
    logits = net(ids, pad_mask, gold[:, :-1])
    logp = torch.log_softmax(logits, dim=-1)
    nll = -logp.gather(-1, gold.unsqueeze(-1)).squeeze(-1)
    return nll.sum(dim=1).mean()


def train_seq2seq(
    cfg: ModelConfig,
    train_corpus: Corpus,
    val_corpus: Corpus,
    include_aux: bool = True,
    vocab: Vocabulary | None = None,
    manifest: dict | None = None,
) -> Model:
    """Teacher-forced decoder over the relation slots in target order (1, 2, 4, 5)."""
    if not train_corpus.sequences:
        raise InsufficientDataError("empty training corpus")
    _check_spaces(cfg, train_corpus, val_corpus)
    space = get_label_space(cfg.label_space)
    if vocab is None:
        vocab = build_vocab(train_corpus, include_aux=include_aux)
    cfg = replace(cfg, vocab_size=vocab.size, architecture=ARCH_SEQ2SEQ)

    torch.set_num_threads(1)
    torch.manual_seed(cfg.seed)
    net = RelationSeq2Seq(cfg, space.size)

    x, y, _, skipped = _encode_seq2seq_data(train_corpus, vocab, cfg, include_aux)
    if skipped:
        log.warning("skipped %d training sequences with incomplete relation annotations", skipped)
    if x.shape[0] == 0:
        raise InsufficientDataError("no fully annotated training sequences")
    mask = _pad_mask(x, vocab)
    vx, vy, vseqs, vskipped = _encode_seq2seq_data(val_corpus, vocab, cfg, include_aux)
    vmask = _pad_mask(vx, vocab) if vseqs else None

    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    shuffle_rng = random.Random(cfg.seed)
    history = []
    best_macro, best_state = -1.0, _state_to_numpy(net)
    for epoch in range(cfg.epochs):
        total, seen = 0.0, 0
        for batch in _batches(x.shape[0], cfg.batch_size, shuffle_rng):
            idx = torch.tensor(batch, dtype=torch.long)
            loss = teacher_forcing_loss(net, x[idx], mask[idx], y[idx])
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(batch)
            seen += len(batch)
        entry = {"epoch": epoch, "train_loss": total / max(seen, 1)}
        if vseqs:
            net.eval()
            with torch.no_grad():
                correct = total_steps = 0
                per_class_hit = {lbl: [0, 0] for lbl in space.labels}
                for i in range(vx.shape[0]):
                    decoded = _greedy_decode(net, vx[i : i + 1], vmask[i : i + 1])
                    for k in range(4):
                        gold_lbl = space.labels[int(vy[i, k])]
                        per_class_hit[gold_lbl][1] += 1
                        if decoded[k] == int(vy[i, k]):
                            per_class_hit[gold_lbl][0] += 1
                            correct += 1
                        total_steps += 1
            net.train()
            present = [h for h in per_class_hit.values() if h[1] > 0]
            macro = sum(h[0] / h[1] for h in present) / len(present) if present else 0.0
            entry["val_macro_top1"] = macro
            entry["val_top1"] = correct / total_steps if total_steps else 0.0
            if macro > best_macro:
                best_macro = macro
                best_state = _state_to_numpy(net)
        else:
            best_state = _state_to_numpy(net)
        history.append(entry)
        log.info("epoch %d: loss=%.6f val_macro=%s", epoch, entry["train_loss"],
                 entry.get("val_macro_top1"))
    full_manifest = dict(manifest or {})
    full_manifest.update(
        {
            "include_aux": include_aux,
            "skipped_incomplete": skipped,
            "skipped_incomplete_val": vskipped,
            "history": history,
        }
    )
    return Model(cfg, vocab, best_state, manifest=full_manifest)


def _step_logprobs(net, ids, pad_mask, prefix: tuple[int, ...]) -> np.ndarray:
    prefix_t = torch.tensor([list(prefix)], dtype=torch.long)
    with torch.no_grad():
        logits = net(ids, pad_mask, prefix_t)
    return torch.log_softmax(logits[0, -1], dim=-1).numpy()


def _greedy_decode(net, ids, pad_mask) -> list[int]:
    prefix: tuple[int, ...] = ()
    for _ in range(4):
        prefix += (int(np.argmax(_step_logprobs(net, ids, pad_mask, prefix))),)
    return list(prefix)


def decode_beam(model: Model, seq: EventSequence, beam_width: int) -> list[str]:
    """Beam-search the 4 relation labels in target order (1, 2, 4, 5)."""
    if model.config.architecture != ARCH_SEQ2SEQ:
        raise ValueError("decode_beam requires a seq2seq model")
    if beam_width < 1:
        raise ValueError("beam_width must be >= 1")
    from ..codec import TokenSequence

    include_aux = model.manifest.get("include_aux", True)
    space = get_label_space(model.config.label_space)
    ts = TokenSequence(tuple(serialize_events_only(seq, include_aux)), (), MODE_PAIR, 1)
    ids = torch.tensor([encode(ts, model.vocabulary, model.config.max_len)], dtype=torch.long)
    pad_mask = _pad_mask(ids, model.vocabulary)
    net = _build_net(model)
    best = beam_search(
        lambda prefix: _step_logprobs(net, ids, pad_mask, prefix), 4, space.size, beam_width
    )
    return [space.labels[i] for i in best]


@dataclass
class PretrainFinetuneResult:
    model: Model
    pretrained: Model | None
    handoff_encoder_params: dict[str, np.ndarray] | None


def _merged_vocab(kb_corpus: Corpus, main_corpus: Corpus, include_aux: bool) -> Vocabulary:
    merged = Corpus(main_corpus.label_space, kb_corpus.sequences + main_corpus.sequences)
    return build_vocab(merged, include_aux=include_aux)


def pretrain_finetune(
    cfg: ModelConfig,
    kb_corpus: Corpus,
    main_train: Corpus,
    main_val: Corpus | None = None,
    pretrain_epochs: int | None = None,
    mode: str = MODE_FULL,
    include_aux: bool = True,
    weights: ClassWeights | None = None,
    manifest: dict | None = None,
) -> PretrainFinetuneResult:
    """Pretrain encoder + 3-class head on the KB corpus, swap in a fresh head
    for the main label space, and fine-tune.  Encoder parameters carry over
    verbatim at the handoff."""
    if main_val is None:
        main_val = main_train
    if pretrain_epochs is None:
        pretrain_epochs = cfg.epochs
    vocab = _merged_vocab(kb_corpus, main_train, include_aux)
    if pretrain_epochs == 0:
        model = train(cfg, main_train, main_val, weights=weights, mode=mode,
                      include_aux=include_aux, vocab=vocab, manifest=manifest)
        return PretrainFinetuneResult(model, None, None)

    kb_cfg = replace(cfg, label_space=kb_corpus.label_space.name, epochs=pretrain_epochs)
    pretrained = train(kb_cfg, kb_corpus, kb_corpus, mode=mode, include_aux=include_aux,
                       vocab=vocab, manifest={"stage": "pretrain"})

    space = get_label_space(cfg.label_space)
    cfg = replace(cfg, vocab_size=vocab.size, architecture=ARCH_CLASSIFIER)
    torch.set_num_threads(1)
    torch.manual_seed(cfg.seed)
    net = RelationClassifier(cfg, space.size)
    encoder_params = {
        name: arr for name, arr in pretrained.params.items() if not name.startswith("head.")
    }
    state = net.state_dict()
    for name, arr in encoder_params.items():
        state[name] = torch.from_numpy(arr.copy())
    net.load_state_dict(state)
    handoff = _state_to_numpy(net)
    handoff_encoder = {k: v for k, v in handoff.items() if not k.startswith("head.")}

    model = _finetune(cfg, net, main_train, main_val, vocab, weights, mode, include_aux,
                      manifest=dict(manifest or {}, pretrain_epochs=pretrain_epochs))
    return PretrainFinetuneResult(model, pretrained, handoff_encoder)


def _finetune(cfg, net, train_corpus, val_corpus, vocab, weights, mode, include_aux, manifest):
    """Same loop as ``train`` but starting from an existing network."""
    space = get_label_space(cfg.label_space)
    _check_spaces(cfg, train_corpus, val_corpus)
    beta = weights.as_tensor(space.labels) if weights is not None else None
    x, y, _ = _encode_classifier_data(train_corpus, vocab, cfg, mode, include_aux)
    mask = _pad_mask(x, vocab)
    vx, _, vkeys = _encode_classifier_data(val_corpus, vocab, cfg, mode, include_aux)
    vmask = _pad_mask(vx, vocab)
    dominant = _dominant(relation_histogram(train_corpus))
    opt = torch.optim.Adam(net.parameters(), lr=cfg.learning_rate)
    shuffle_rng = random.Random(cfg.seed)
    history = []
    best_macro, best_state = -1.0, _state_to_numpy(net)
    for epoch in range(cfg.epochs):
        total, seen = 0.0, 0
        for batch in _batches(x.shape[0], cfg.batch_size, shuffle_rng):
            idx = torch.tensor(batch, dtype=torch.long)
            loss = cross_entropy(net(x[idx], mask[idx]), y[idx], beta)
            if not torch.isfinite(loss):
                raise TrainingDivergedError(f"non-finite loss at epoch {epoch}")
            opt.zero_grad()
            loss.backward()
            opt.step()
            total += float(loss.detach()) * len(batch)
            seen += len(batch)
        entry = {"epoch": epoch, "train_loss": total / max(seen, 1)}
        if vkeys:
            preds = _classifier_predictions(net, vx, vmask, vkeys, space.labels)
            report = evaluate(preds, val_corpus)
            entry["val_macro_top1"] = report.macro_top1
            entry["dominant_fraction"] = _dominant_fraction(preds, dominant)
            if report.macro_top1 > best_macro:
                best_macro = report.macro_top1
                best_state = _state_to_numpy(net)
        else:
            best_state = _state_to_numpy(net)
        history.append(entry)
        log.info("epoch %d: loss=%.6f val_macro=%s", epoch, entry["train_loss"],
                 entry.get("val_macro_top1"))
    manifest.update({"mode": mode, "include_aux": include_aux,
                     "weights": None if weights is None else weights.weights,
                     "history": history})
    return Model(cfg, vocab, best_state, manifest=manifest)
