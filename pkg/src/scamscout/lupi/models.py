"""Teacher and student toxicity regressors.

The teacher sees the query plus privileged SERP text: both are encoded, the
query's CLS embedding is concatenated with the mean-pooled CLS embeddings of
the SERP entries, and a fusion layer (linear + ReLU + dropout) feeds a
scalar regression head.  The student sees only the query; its prediction
head regresses the score and its distillation head projects the query CLS
embedding into a "hint" that is trained to mimic the teacher's fused
representation.  The two query encoders are architecturally identical so
the student can be initialized from the teacher backbone and attention maps
can be matched layer-for-layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import SchemaError, TrainingError
from .encoder import Encoder, EncoderConfig
from .layers import Dropout, Linear, relu
from .tokenizer import TokenizerConfig

ENGINE_AXIS = ("GOOGLE", "BING", "BAIDU", "ALL")
FIELD_AXIS = ("TITLE", "DESCRIPTION", "BOTH")
FILTER_AXIS = ("ALL", "SCAM_ONLY")
SELECTION_AXIS = ("RANKED", "RANDOM")


@dataclass(frozen=True)
class PrivilegedConfig:
    engine: str = "GOOGLE"
    field: str = "DESCRIPTION"
    filter: str = "SCAM_ONLY"
    selection: str = "RANKED"
    size: int = 20

    def __post_init__(self):
        if self.engine not in ENGINE_AXIS:
            raise SchemaError(f"engine must be one of {ENGINE_AXIS}")
        if self.field not in FIELD_AXIS:
            raise SchemaError(f"field must be one of {FIELD_AXIS}")
        if self.filter not in FILTER_AXIS:
            raise SchemaError(f"filter must be one of {FILTER_AXIS}")
        if self.selection not in SELECTION_AXIS:
            raise SchemaError(f"selection must be one of {SELECTION_AXIS}")
        if not 5 <= self.size <= 50:
            raise SchemaError("size must be in [5, 50]")

    def spec_string(self) -> str:
        return ":".join([
            self.engine.lower(), self.field.lower(), self.filter.lower(),
            self.selection.lower(), str(self.size),
        ])

    @classmethod
    def from_spec(cls, spec: str) -> "PrivilegedConfig":
        parts = spec.split(":")
        if len(parts) != 5:
            raise SchemaError(
                "privileged spec must be engine:field:filter:selection:size"
            )
        return cls(parts[0].upper(), parts[1].upper(), parts[2].upper(),
                   parts[3].upper(), int(parts[4]))


def _collect(named) -> dict[str, np.ndarray]:
    return dict(named)


class TeacherModel:
    def __init__(self, tok_cfg: TokenizerConfig, enc_cfg: EncoderConfig,
                 priv: PrivilegedConfig, seed: int = 0):
        self.tok_cfg = tok_cfg
        self.enc_cfg = enc_cfg
        self.priv = priv
        self.seed = seed
        rng = np.random.default_rng(seed)
        # query and SERP encoders are initialized independently
        self.query_encoder = Encoder(tok_cfg.vocab_size, tok_cfg.max_len_query,
                                     enc_cfg, rng)
        self.serp_encoder = Encoder(tok_cfg.vocab_size, tok_cfg.max_len_serp,
                                    enc_cfg, rng)
        self.fusion = Linear(2 * enc_cfg.dim, enc_cfg.dim, rng)
        self.fusion_drop = Dropout(enc_cfg.dropout)
        self.head = Linear(enc_cfg.dim, 1, rng)

    # --- parameter plumbing ---
    def named_parameters(self):
        yield from self.query_encoder.named_parameters("query_encoder.")
        yield from self.serp_encoder.named_parameters("serp_encoder.")
        yield from self.fusion.named_parameters("fusion.")
        yield from self.head.named_parameters("head.")

    def parameters(self) -> dict[str, np.ndarray]:
        return _collect(self.named_parameters())

    def zero_grads(self):
        for mod in (self.query_encoder, self.serp_encoder, self.fusion, self.head):
            mod.zero_grads()

    def gradients(self) -> dict[str, np.ndarray]:
        out: dict[str, np.ndarray] = {}
        for prefix, mod in (("query_encoder.", self.query_encoder),
                            ("serp_encoder.", self.serp_encoder),
                            ("fusion.", self.fusion), ("head.", self.head)):
            _fill_grads(mod, prefix, out)
        return out

    # --- forward/backward ---
    def forward(self, query_ids: np.ndarray, serp_ids: np.ndarray,
                serp_present: np.ndarray, train: bool = False,
                rng: Optional[np.random.Generator] = None, cache: bool = True):
        """query_ids (B,Tq); serp_ids (B,K,Ts); serp_present (B,K) bool.

        Returns (score (B,), fused (B,D), query attention maps).  Triples
        whose privileged set is empty get a zero pooled vector.
        """
        b, k, ts = serp_ids.shape
        q_hidden, q_attn = self.query_encoder.forward(query_ids, train, rng, cache)
        q_cls = q_hidden[:, 0, :]
        if k > 0:
            s_hidden, _ = self.serp_encoder.forward(
                serp_ids.reshape(b * k, ts), train, rng, cache)
            s_cls = s_hidden[:, 0, :].reshape(b, k, -1)
            present = serp_present.astype(np.float64)
            counts = present.sum(axis=1)
            safe = np.maximum(counts, 1.0)
            pooled = (s_cls * present[:, :, None]).sum(axis=1) / safe[:, None]
        else:
            s_cls = np.zeros((b, 0, self.enc_cfg.dim))
            counts = np.zeros(b)
            safe = np.ones(b)
            pooled = np.zeros((b, self.enc_cfg.dim))
        concat = np.concatenate([q_cls, pooled], axis=1)
        pre = self.fusion.forward(concat, cache)
        fused = self.fusion_drop.forward(relu(pre), train, rng, cache)
        score = self.head.forward(fused, cache)[:, 0]
        if cache:
            self._cache = (query_ids.shape, serp_ids.shape, present if k > 0 else None,
                           safe, pre)
        return score, fused, q_attn

    def backward(self, d_score: np.ndarray, d_fused: Optional[np.ndarray] = None):
        (qshape, sshape, present, safe, pre) = self._cache
        b, k, ts = sshape
        d_fused_total = self.head.backward(d_score[:, None])
        if d_fused is not None:
            d_fused_total = d_fused_total + d_fused
        d_pre = self.fusion_drop.backward(d_fused_total) * (pre > 0)
        d_concat = self.fusion.backward(d_pre)
        dim = self.enc_cfg.dim
        d_q_cls = d_concat[:, :dim]
        d_pooled = d_concat[:, dim:]
        d_q_hidden = np.zeros((qshape[0], qshape[1], dim))
        d_q_hidden[:, 0, :] = d_q_cls
        self.query_encoder.backward(d_q_hidden)
        if k > 0:
            d_s_cls = (d_pooled[:, None, :] / safe[:, None, None]) * present[:, :, None]
            d_s_hidden = np.zeros((b * k, ts, dim))
            d_s_hidden[:, 0, :] = d_s_cls.reshape(b * k, dim)
            self.serp_encoder.backward(d_s_hidden)


def _fill_grads(mod, prefix: str, out: dict) -> None:
    """Mirror named_parameters over the grads dicts."""
    from .encoder import EncoderBlock
    from .layers import FeedForward, MultiHeadAttention

    if isinstance(mod, Encoder):
        _fill_grads(mod.embed, f"{prefix}embed.", out)
        for i, block in enumerate(mod.blocks):
            _fill_grads(block, f"{prefix}blocks.{i}.", out)
        _fill_grads(mod.ln_out, f"{prefix}ln_out.", out)
    elif isinstance(mod, EncoderBlock):
        _fill_grads(mod.ln1, f"{prefix}ln1.", out)
        _fill_grads(mod.attn, f"{prefix}attn.", out)
        _fill_grads(mod.ln2, f"{prefix}ln2.", out)
        _fill_grads(mod.ffn, f"{prefix}ffn.", out)
    elif isinstance(mod, MultiHeadAttention):
        _fill_grads(mod.wq, f"{prefix}wq.", out)
        _fill_grads(mod.wk, f"{prefix}wk.", out)
        _fill_grads(mod.wv, f"{prefix}wv.", out)
        _fill_grads(mod.wo, f"{prefix}wo.", out)
    elif isinstance(mod, FeedForward):
        _fill_grads(mod.lin1, f"{prefix}lin1.", out)
        _fill_grads(mod.lin2, f"{prefix}lin2.", out)
    else:
        for name, grad in mod.grads.items():
            out[f"{prefix}{name}"] = grad


class StudentModel:
    def __init__(self, tok_cfg: TokenizerConfig, enc_cfg: EncoderConfig,
                 seed: int = 0):
        self.tok_cfg = tok_cfg
        self.enc_cfg = enc_cfg
        self.seed = seed
        rng = np.random.default_rng(seed)
        self.query_encoder = Encoder(tok_cfg.vocab_size, tok_cfg.max_len_query,
                                     enc_cfg, rng)
        self.pred_drop = Dropout(enc_cfg.dropout)
        self.pred_lin1 = Linear(enc_cfg.dim, enc_cfg.dim, rng)
        self.pred_lin2 = Linear(enc_cfg.dim, 1, rng)
        self.distill_head = Linear(enc_cfg.dim, enc_cfg.dim, rng)

    def init_from_teacher(self, teacher: TeacherModel) -> None:
        """Copy the teacher's query-encoder weights into the student backbone."""
        theirs = teacher.query_encoder.named_parameters("")
        ours = dict(self.query_encoder.named_parameters(""))
        copied = 0
        for name, src in theirs:
            if name not in ours or ours[name].shape != src.shape:
                raise TrainingError(f"backbone mismatch at {name}")
            ours[name][...] = src
            copied += 1
        if copied == 0:
            raise TrainingError("teacher has no backbone parameters")

    def named_parameters(self):
        yield from self.query_encoder.named_parameters("query_encoder.")
        yield from self.pred_lin1.named_parameters("pred_lin1.")
        yield from self.pred_lin2.named_parameters("pred_lin2.")
        yield from self.distill_head.named_parameters("distill_head.")

    def parameters(self) -> dict[str, np.ndarray]:
        return _collect(self.named_parameters())

    def zero_grads(self):
        for mod in (self.query_encoder, self.pred_lin1, self.pred_lin2,
                    self.distill_head):
            mod.zero_grads()

    def gradients(self) -> dict[str, np.ndarray]:
        out = {}
        for prefix, mod in (("query_encoder.", self.query_encoder),
                            ("pred_lin1.", self.pred_lin1),
                            ("pred_lin2.", self.pred_lin2),
                            ("distill_head.", self.distill_head)):
            _fill_grads(mod, prefix, out)
        return out

    def forward(self, query_ids: np.ndarray, train: bool = False,
                rng: Optional[np.random.Generator] = None, cache: bool = True):
        """Returns (score (B,), hint (B,D), query attention maps)."""
        hidden, attn = self.query_encoder.forward(query_ids, train, rng, cache)
        cls = hidden[:, 0, :]
        dropped = self.pred_drop.forward(cls, train, rng, cache)
        h1 = self.pred_lin1.forward(dropped, cache)
        score = self.pred_lin2.forward(relu(h1), cache)[:, 0]
        hint = self.distill_head.forward(cls, cache)
        if cache:
            self._cache = (query_ids.shape, h1)
        return score, hint, attn

    def backward(self, d_score: np.ndarray, d_hint: np.ndarray,
                 d_attn: Optional[list[np.ndarray]] = None):
        qshape, h1 = self._cache
        d_relu = self.pred_lin2.backward(d_score[:, None])
        d_dropped = self.pred_lin1.backward(d_relu * (h1 > 0))
        d_cls = self.pred_drop.backward(d_dropped)
        d_cls = d_cls + self.distill_head.backward(d_hint)
        d_hidden = np.zeros((qshape[0], qshape[1], self.enc_cfg.dim))
        d_hidden[:, 0, :] = d_cls
        self.query_encoder.backward(d_hidden, d_attn)
