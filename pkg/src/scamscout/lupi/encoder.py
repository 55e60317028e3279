"""Tiny pre-norm transformer encoder built from the manual-backprop layers.

forward() returns every layer's attention map alongside the hidden states,
and backward() accepts gradients for both, because the distillation loss
matches attention maps layer-for-layer between student and teacher.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SchemaError
from .layers import (
    Dropout,
    Embedding,
    FeedForward,
    LayerNorm,
    Module,
    MultiHeadAttention,
)
from .tokenizer import PAD_ID


@dataclass(frozen=True)
class EncoderConfig:
    layers: int = 2
    dim: int = 64
    heads: int = 4
    ff_dim: int = 128
    dropout: float = 0.1

    def __post_init__(self):
        if self.dim % self.heads != 0:
            raise SchemaError("dim must be divisible by heads")
        if self.layers < 1:
            raise SchemaError("need at least one layer")


def sinusoidal_positions(max_len: int, dim: int) -> np.ndarray:
    pos = np.arange(max_len)[:, None].astype(np.float64)
    i = np.arange(dim)[None, :].astype(np.float64)
    angle = pos / np.power(10000.0, (2 * (i // 2)) / dim)
    enc = np.empty((max_len, dim))
    enc[:, 0::2] = np.sin(angle[:, 0::2])
    enc[:, 1::2] = np.cos(angle[:, 1::2])
    return enc


class EncoderBlock(Module):
    def __init__(self, cfg: EncoderConfig, rng: np.random.Generator):
        super().__init__()
        self.ln1 = LayerNorm(cfg.dim)
        self.attn = MultiHeadAttention(cfg.dim, cfg.heads, rng)
        self.drop1 = Dropout(cfg.dropout)
        self.ln2 = LayerNorm(cfg.dim)
        self.ffn = FeedForward(cfg.dim, cfg.ff_dim, rng)
        self.drop2 = Dropout(cfg.dropout)

    def zero_grads(self):
        for sub in (self.ln1, self.attn, self.ln2, self.ffn):
            sub.zero_grads()

    def named_parameters(self, prefix: str = ""):
        yield from self.ln1.named_parameters(f"{prefix}ln1.")
        yield from self.attn.named_parameters(f"{prefix}attn.")
        yield from self.ln2.named_parameters(f"{prefix}ln2.")
        yield from self.ffn.named_parameters(f"{prefix}ffn.")

    def forward(self, x, key_mask, train, rng, cache=True):
        a, attn_map = self.attn.forward(self.ln1.forward(x, cache), key_mask, cache)
        x = x + self.drop1.forward(a, train, rng, cache)
        f = self.ffn.forward(self.ln2.forward(x, cache), cache)
        x = x + self.drop2.forward(f, train, rng, cache)
        return x, attn_map

    def backward(self, d_out, d_attn=None):
        d_f = self.drop2.backward(d_out)
        d_x = d_out + self.ln2.backward(self.ffn.backward(d_f))
        d_a = self.drop1.backward(d_x)
        d_x = d_x + self.ln1.backward(self.attn.backward(d_a, d_attn))
        return d_x


class Encoder(Module):
    def __init__(self, vocab_size: int, max_len: int, cfg: EncoderConfig,
                 rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        self.embed = Embedding(vocab_size, cfg.dim, rng)
        self.positions = sinusoidal_positions(max_len, cfg.dim)
        self.drop_in = Dropout(cfg.dropout)
        self.blocks = [EncoderBlock(cfg, rng) for _ in range(cfg.layers)]
        self.ln_out = LayerNorm(cfg.dim)

    def zero_grads(self):
        self.embed.zero_grads()
        for block in self.blocks:
            block.zero_grads()
        self.ln_out.zero_grads()

    def named_parameters(self, prefix: str = ""):
        yield from self.embed.named_parameters(f"{prefix}embed.")
        for i, block in enumerate(self.blocks):
            yield from block.named_parameters(f"{prefix}blocks.{i}.")
        yield from self.ln_out.named_parameters(f"{prefix}ln_out.")

    def forward(self, ids: np.ndarray, train: bool = False,
                rng: np.random.Generator | None = None,
                cache: bool = True) -> tuple[np.ndarray, list[np.ndarray]]:
        """ids (B, T) -> hidden (B, T, D) and per-layer attention maps."""
        key_mask = ids != PAD_ID
        x = self.embed.forward(ids, cache) + self.positions[: ids.shape[1]]
        x = self.drop_in.forward(x, train, rng, cache)
        attn_maps = []
        for block in self.blocks:
            x, attn = block.forward(x, key_mask, train, rng, cache)
            attn_maps.append(attn)
        return self.ln_out.forward(x, cache), attn_maps

    def backward(self, d_hidden: np.ndarray,
                 d_attn_maps: list[np.ndarray] | None = None) -> None:
        d_x = self.ln_out.backward(d_hidden)
        for i in reversed(range(len(self.blocks))):
            d_attn = d_attn_maps[i] if d_attn_maps is not None else None
            d_x = self.blocks[i].backward(d_x, d_attn)
        d_x = self.drop_in.backward(d_x)
        self.embed.backward(d_x)
