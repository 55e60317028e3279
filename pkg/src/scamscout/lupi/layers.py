"""Neural net building blocks with explicit forward/backward passes.

Everything is float64 and seeded, so training is bit-reproducible and
gradients can be checked against finite differences.  Each module keeps its
parameters and gradient accumulators in name-keyed dicts; a module instance
serves one forward per training step, caching what its backward needs.
Backward passes return the gradient w.r.t. their input and accumulate into
``grads``.
"""

from __future__ import annotations

import numpy as np


class Module:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def zero_grads(self):
        for name, p in self.params.items():
            self.grads[name] = np.zeros_like(p)

    def named_parameters(self, prefix: str = ""):
        for name, p in self.params.items():
            yield (f"{prefix}{name}", p)

    def _add_grad(self, name: str, value: np.ndarray):
        self.grads[name] += value


class Linear(Module):
    def __init__(self, dim_in: int, dim_out: int, rng: np.random.Generator):
        super().__init__()
        self.params["w"] = rng.normal(0.0, 0.02, size=(dim_in, dim_out))
        self.params["b"] = np.zeros(dim_out)
        self.zero_grads()

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        if cache:
            self._x = x
        return x @ self.params["w"] + self.params["b"]

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        x2 = self._x.reshape(-1, self._x.shape[-1])
        d2 = d_out.reshape(-1, d_out.shape[-1])
        self._add_grad("w", x2.T @ d2)
        self._add_grad("b", d2.sum(axis=0))
        return d_out @ self.params["w"].T


class Embedding(Module):
    def __init__(self, vocab: int, dim: int, rng: np.random.Generator):
        super().__init__()
        self.params["w"] = rng.normal(0.0, 0.02, size=(vocab, dim))
        self.zero_grads()

    def forward(self, ids: np.ndarray, cache: bool = True) -> np.ndarray:
        if cache:
            self._ids = ids
        return self.params["w"][ids]

    def backward(self, d_out: np.ndarray) -> None:
        np.add.at(self.grads["w"], self._ids, d_out)


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.params["g"] = np.ones(dim)
        self.params["b"] = np.zeros(dim)
        self.eps = eps
        self.zero_grads()

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        mean = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        inv = 1.0 / np.sqrt(var + self.eps)
        norm = (x - mean) * inv
        if cache:
            self._norm, self._inv = norm, inv
        return norm * self.params["g"] + self.params["b"]

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        norm, inv = self._norm, self._inv
        g = self.params["g"]
        self._add_grad("g", (d_out * norm).reshape(-1, norm.shape[-1]).sum(axis=0))
        self._add_grad("b", d_out.reshape(-1, norm.shape[-1]).sum(axis=0))
        d_norm = d_out * g
        # d_x of (x - mean) * inv with mean/var both functions of x
        n = norm.shape[-1]
        d_x = inv * (
            d_norm
            - d_norm.mean(axis=-1, keepdims=True)
            - norm * (d_norm * norm).mean(axis=-1, keepdims=True)
        )
        return d_x


class Dropout(Module):
    """Inverted dropout; a no-op in eval mode or at p = 0."""

    def __init__(self, p: float):
        super().__init__()
        self.p = p

    def forward(self, x: np.ndarray, train: bool, rng: np.random.Generator | None,
                cache: bool = True) -> np.ndarray:
        self._mask = None
        if not train or self.p == 0.0:
            return x
        keep = 1.0 - self.p
        mask = (rng.random(x.shape) < keep) / keep
        if cache:
            self._mask = mask
        return x * mask

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return d_out
        return d_out * self._mask


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


class MultiHeadAttention(Module):
    """Self-attention with key-padding masking.

    Returns (output, attention probabilities); backward accepts gradients for
    both, since the attention maps feed the distillation loss directly.
    """

    def __init__(self, dim: int, heads: int, rng: np.random.Generator):
        super().__init__()
        assert dim % heads == 0
        self.dim, self.heads, self.head_dim = dim, heads, dim // heads
        self.wq = Linear(dim, dim, rng)
        self.wk = Linear(dim, dim, rng)
        self.wv = Linear(dim, dim, rng)
        self.wo = Linear(dim, dim, rng)

    # parameter plumbing delegates to the four projections
    def zero_grads(self):
        for sub in (self.wq, self.wk, self.wv, self.wo):
            sub.zero_grads()

    def named_parameters(self, prefix: str = ""):
        for name, sub in (("wq", self.wq), ("wk", self.wk),
                          ("wv", self.wv), ("wo", self.wo)):
            yield from sub.named_parameters(f"{prefix}{name}.")

    def _split(self, x: np.ndarray) -> np.ndarray:
        b, t, _ = x.shape
        return x.reshape(b, t, self.heads, self.head_dim).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        b, h, t, d = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * d)

    def forward(self, x: np.ndarray, key_mask: np.ndarray,
                cache: bool = True) -> tuple[np.ndarray, np.ndarray]:
        q = self._split(self.wq.forward(x, cache))
        k = self._split(self.wk.forward(x, cache))
        v = self._split(self.wv.forward(x, cache))
        scores = q @ k.transpose(0, 1, 3, 2) / np.sqrt(self.head_dim)
        # mask PAD keys; every query row still normalizes over real keys
        neg = np.finfo(np.float64).min / 4
        scores = np.where(key_mask[:, None, None, :], scores, neg)
        scores -= scores.max(axis=-1, keepdims=True)
        exp = np.exp(scores)
        attn = exp / exp.sum(axis=-1, keepdims=True)
        ctx = attn @ v
        out = self.wo.forward(self._merge(ctx), cache)
        if cache:
            self._q, self._k, self._v, self._attn = q, k, v, attn
        return out, attn

    def backward(self, d_out: np.ndarray,
                 d_attn_extra: np.ndarray | None = None) -> np.ndarray:
        q, k, v, attn = self._q, self._k, self._v, self._attn
        d_ctx = self._split(self.wo.backward(d_out))
        d_attn = d_ctx @ v.transpose(0, 1, 3, 2)
        if d_attn_extra is not None:
            d_attn = d_attn + d_attn_extra
        d_v = attn.transpose(0, 1, 3, 2) @ d_ctx
        # softmax backward; masked positions have attn = 0 so they get 0
        d_scores = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
        d_scores /= np.sqrt(self.head_dim)
        d_q = d_scores @ k
        d_k = d_scores.transpose(0, 1, 3, 2) @ q
        d_x = self.wq.backward(self._merge(d_q))
        d_x += self.wk.backward(self._merge(d_k))
        d_x += self.wv.backward(self._merge(d_v))
        return d_x


class FeedForward(Module):
    def __init__(self, dim: int, ff_dim: int, rng: np.random.Generator):
        super().__init__()
        self.lin1 = Linear(dim, ff_dim, rng)
        self.lin2 = Linear(ff_dim, dim, rng)

    def zero_grads(self):
        self.lin1.zero_grads()
        self.lin2.zero_grads()

    def named_parameters(self, prefix: str = ""):
        yield from self.lin1.named_parameters(f"{prefix}lin1.")
        yield from self.lin2.named_parameters(f"{prefix}lin2.")

    def forward(self, x: np.ndarray, cache: bool = True) -> np.ndarray:
        h = self.lin1.forward(x, cache)
        a = relu(h)
        if cache:
            self._h = h
        return self.lin2.forward(a, cache)

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        d_a = self.lin2.backward(d_out)
        d_h = d_a * (self._h > 0)
        return self.lin1.backward(d_h)
