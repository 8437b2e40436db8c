"""Small from-scratch transformer networks for relation prediction.

No pretrained weights anywhere: a token embedding with sinusoidal positions,
a standard transformer encoder stack, and either a pooled classification head
or a shallow label decoder for the sequence-to-sequence variant.  Dropout is
zero throughout so training and inference are deterministic.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from .config import ModelConfig, POOL_FIRST

START_LABEL = 0  # decoder start token; real labels are offset by 1


def sinusoidal_positions(max_len: int, dim: int) -> torch.Tensor:
    pos = torch.arange(max_len, dtype=torch.float64).unsqueeze(1)
    div = torch.exp(torch.arange(0, dim, 2, dtype=torch.float64) * (-math.log(10000.0) / dim))
    enc = torch.zeros(max_len, dim, dtype=torch.float64)
    enc[:, 0::2] = torch.sin(pos * div)
    enc[:, 1::2] = torch.cos(pos * div)
    return enc.to(torch.float32)


class TokenEncoder(nn.Module):
    """Embedding + sinusoidal positions + transformer encoder stack."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.embed = nn.Embedding(cfg.vocab_size, cfg.embed_dim)
        # the sqrt(d) input scale below assumes embeddings start at std 1/sqrt(d);
        # torch's default N(0, 1) init would swamp the positional signal
        nn.init.normal_(self.embed.weight, mean=0.0, std=cfg.embed_dim**-0.5)
        self.register_buffer("pos", sinusoidal_positions(cfg.max_len, cfg.embed_dim))
        layer = nn.TransformerEncoderLayer(
            d_model=cfg.embed_dim,
            nhead=cfg.num_heads,
            dim_feedforward=4 * cfg.embed_dim,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,  # pre-norm trains stably without lr warmup
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=cfg.num_layers,
                                             enable_nested_tensor=False)
        self.scale = math.sqrt(cfg.embed_dim)

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        """ids: [B, L] int64; pad_mask: [B, L] bool, True at padding. Returns [B, L, D]."""
        x = self.embed(ids) * self.scale + self.pos[: ids.shape[1]].to(self.embed.weight.dtype)
        return self.encoder(x, src_key_padding_mask=pad_mask)


def pool(hidden: torch.Tensor, pad_mask: torch.Tensor, pooling: str) -> torch.Tensor:
    if pooling == POOL_FIRST:
        return hidden[:, 0]
    keep = (~pad_mask).unsqueeze(-1).to(hidden.dtype)
    return (hidden * keep).sum(dim=1) / keep.sum(dim=1).clamp(min=1.0)


class RelationClassifier(nn.Module):
    def __init__(self, cfg: ModelConfig, num_classes: int):
        super().__init__()
        self.encoder = TokenEncoder(cfg)
        self.head = nn.Linear(cfg.embed_dim, num_classes)
        self.pooling = cfg.pooling

    def forward(self, ids: torch.Tensor, pad_mask: torch.Tensor) -> torch.Tensor:
        hidden = self.encoder(ids, pad_mask)
        return self.head(pool(hidden, pad_mask, self.pooling))


class RelationSeq2Seq(nn.Module):
    """Encoder over the event tokens, causal decoder over the 4 relation slots."""

    NUM_STEPS = 4

    def __init__(self, cfg: ModelConfig, num_classes: int):
        super().__init__()
        self.encoder = TokenEncoder(cfg)
        self.num_classes = num_classes
        self.label_embed = nn.Embedding(num_classes + 1, cfg.embed_dim)  # +1 start token
        nn.init.normal_(self.label_embed.weight, mean=0.0, std=cfg.embed_dim**-0.5)
        self.register_buffer("step_pos", sinusoidal_positions(self.NUM_STEPS, cfg.embed_dim))
        layer = nn.TransformerDecoderLayer(
            d_model=cfg.embed_dim,
            nhead=cfg.num_heads,
            dim_feedforward=4 * cfg.embed_dim,
            dropout=0.0,
            activation="gelu",
            batch_first=True,
            norm_first=True,
        )
        self.decoder = nn.TransformerDecoder(layer, num_layers=cfg.decoder_layers)
        self.head = nn.Linear(cfg.embed_dim, num_classes)

    def forward(
        self, ids: torch.Tensor, pad_mask: torch.Tensor, prefix: torch.Tensor
    ) -> torch.Tensor:
        """prefix: [B, K] label indices fed with teacher forcing (K <= 3);
        returns logits [B, K+1, C] for steps 1..K+1."""
        memory = self.encoder(ids, pad_mask)
        batch = ids.shape[0]
        start = torch.full((batch, 1), START_LABEL, dtype=torch.long, device=ids.device)
        dec_in = torch.cat([start, prefix + 1], dim=1) if prefix.numel() else start
        steps = dec_in.shape[1]
        x = self.label_embed(dec_in) + self.step_pos[:steps].to(self.label_embed.weight.dtype)
        causal = torch.triu(
            torch.full((steps, steps), float("-inf"), device=ids.device), diagonal=1
        )
        hidden = self.decoder(x, memory, tgt_mask=causal, memory_key_padding_mask=pad_mask)
        return self.head(hidden)


def cross_entropy(
    logits: torch.Tensor, targets: torch.Tensor, beta: torch.Tensor | None = None
) -> torch.Tensor:
    """Mean (optionally per-class weighted) cross-entropy over a batch.

    With all weights equal to 1 this is exactly the plain mean cross-entropy,
    not a renormalized variant.
    """
    logp = torch.log_softmax(logits, dim=-1)
    nll = -logp.gather(-1, targets.unsqueeze(-1)).squeeze(-1)
    if beta is not None:
        nll = nll * beta[targets]
    return nll.mean()
