"""Model hyperparameter container."""

from __future__ import annotations

from dataclasses import asdict, dataclass

ARCH_CLASSIFIER = "classifier"
ARCH_SEQ2SEQ = "seq2seq"
LOSS_PLAIN = "plain"
LOSS_WEIGHTED = "weighted"
POOL_MEAN = "mean"
POOL_FIRST = "first"


@dataclass
class ModelConfig:
    label_space: str = "vidsitu"
    vocab_size: int = 0  # filled in once the vocabulary is built
    embed_dim: int = 128
    num_layers: int = 2
    num_heads: int = 4
    max_len: int = 192
    learning_rate: float = 1e-3
    epochs: int = 10
    batch_size: int = 32
    seed: int = 0
    loss_mode: str = LOSS_PLAIN
    architecture: str = ARCH_CLASSIFIER
    pooling: str = POOL_MEAN
    decoder_layers: int = 1

    def __post_init__(self):
        if self.embed_dim % self.num_heads != 0:
            raise ValueError("embed_dim must be divisible by num_heads")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.loss_mode not in (LOSS_PLAIN, LOSS_WEIGHTED):
            raise ValueError(f"unknown loss_mode {self.loss_mode!r}")
        if self.architecture not in (ARCH_CLASSIFIER, ARCH_SEQ2SEQ):
            raise ValueError(f"unknown architecture {self.architecture!r}")
        if self.pooling not in (POOL_MEAN, POOL_FIRST):
            raise ValueError(f"unknown pooling {self.pooling!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        return cls(**obj)
