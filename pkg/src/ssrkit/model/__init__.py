from .config import ModelConfig, ARCH_CLASSIFIER, ARCH_SEQ2SEQ, LOSS_PLAIN, LOSS_WEIGHTED
from .container import Model, load_bytes, load_model, save_bytes, save_model, FORMAT_VERSION
from .training import (
    ClassWeights,
    Distribution,
    PretrainFinetuneResult,
    class_weights,
    decode_beam,
    predict,
    predict_corpus,
    pretrain_finetune,
    train,
    train_seq2seq,
    undersample,
    uniform_weights,
)
from .beam import beam_search

__all__ = [
    "ARCH_CLASSIFIER",
    "ARCH_SEQ2SEQ",
    "ClassWeights",
    "Distribution",
    "FORMAT_VERSION",
    "LOSS_PLAIN",
    "LOSS_WEIGHTED",
    "Model",
    "ModelConfig",
    "PretrainFinetuneResult",
    "beam_search",
    "class_weights",
    "decode_beam",
    "load_bytes",
    "load_model",
    "predict",
    "predict_corpus",
    "pretrain_finetune",
    "save_bytes",
    "save_model",
    "train",
    "train_seq2seq",
    "undersample",
    "uniform_weights",
]
