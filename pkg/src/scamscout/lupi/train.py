"""Training loops for the teacher, the distilled student, and the baseline.

Everything is seeded and single-threaded: batch order, dropout masks and
parameter init all come from generators derived from the config seed, so a
rerun reproduces parameters bit-exactly.  The distillation loop and the
query-only baseline share one implementation; with weights (1,0,0,0) the
distiller performs the identical arithmetic, which is a tested contract.
"""

from __future__ import annotations

import copy
import itertools
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from ..corpus import SerpResultSet
from ..errors import TrainingError
from ..heuristics import derive_seed
from .encoder import EncoderConfig
from .losses import LossWeights, total_loss
from .models import (
    ENGINE_AXIS,
    FIELD_AXIS,
    FILTER_AXIS,
    SELECTION_AXIS,
    PrivilegedConfig,
    StudentModel,
    TeacherModel,
)
from .optim import AdamW, warmup_scale
from .tokenizer import TokenizerConfig, tokenize, tokenize_batch


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 2e-5
    epochs: int = 5
    batch_size: int = 32
    warmup_fraction: float = 0.1
    patience: int = 2
    seed: int = 0
    weight_decay: float = 0.01

    def __post_init__(self):
        if self.lr <= 0:
            raise TrainingError("lr must be > 0")
        if self.epochs < 1:
            raise TrainingError("epochs must be >= 1")
        if self.batch_size < 1:
            raise TrainingError("batch_size must be >= 1")


@dataclass
class LupiExample:
    query: str
    toxicity: float
    category: str = ""
    expansion: int = 0
    serps: list[SerpResultSet] = field(default_factory=list)


@dataclass
class LupiDataset:
    examples: list[LupiExample]
    scam_labels: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.examples:
            raise TrainingError("dataset must contain at least one example")

    def categories(self) -> list[str]:
        return sorted({ex.category for ex in self.examples})

    def subset(self, indices: Sequence[int]) -> "LupiDataset":
        return LupiDataset([self.examples[i] for i in indices], self.scam_labels)


# --- privileged-information assembly -----------------------------------------


def privileged_texts(
    example: LupiExample,
    priv: PrivilegedConfig,
    scam_labels: Mapping[str, str],
    seed: int = 0,
) -> list[str]:
    """The SERP-side texts the teacher is allowed to see for one query."""
    entries = []
    for rs in example.serps:
        entries.extend(rs.entries)
    if priv.engine != "ALL":
        entries = [e for e in entries if e.engine == priv.engine]
    if priv.filter == "SCAM_ONLY":
        entries = [e for e in entries if scam_labels.get(e.root_domain) == "SCAM"]
    entries.sort(key=lambda e: (e.engine, e.rank, e.root_domain))
    if priv.selection == "RANDOM" and len(entries) > priv.size:
        rng = np.random.default_rng(derive_seed(seed, "priv", example.query))
        picks = rng.choice(len(entries), size=priv.size, replace=False)
        entries = [entries[i] for i in sorted(picks)]
    else:
        entries = entries[: priv.size]
    if priv.field == "TITLE":
        return [e.title for e in entries]
    if priv.field == "DESCRIPTION":
        return [e.description for e in entries]
    return [f"{e.title} {e.description}".strip() for e in entries]


@dataclass
class _Tensors:
    query_ids: np.ndarray        # (N, Tq)
    serp_ids: np.ndarray         # (N, K, Ts)
    serp_present: np.ndarray     # (N, K) bool
    labels: np.ndarray           # (N,)
    empty_priv: int = 0


def _assemble(
    dataset: LupiDataset,
    tok_cfg: TokenizerConfig,
    priv: Optional[PrivilegedConfig],
    seed: int = 0,
) -> _Tensors:
    n = len(dataset.examples)
    query_ids = tokenize_batch([ex.query for ex in dataset.examples], tok_cfg)
    labels = np.array([ex.toxicity for ex in dataset.examples], dtype=np.float64)
    if priv is None:
        return _Tensors(query_ids, np.zeros((n, 0, 0), dtype=np.int64),
                        np.zeros((n, 0), dtype=bool), labels)
    k, ts = priv.size, tok_cfg.max_len_serp
    serp_ids = np.zeros((n, k, ts), dtype=np.int64)
    present = np.zeros((n, k), dtype=bool)
    empty = 0
    for i, ex in enumerate(dataset.examples):
        texts = privileged_texts(ex, priv, dataset.scam_labels, seed)
        if not texts:
            empty += 1
            continue
        for j, text in enumerate(texts[:k]):
            serp_ids[i, j] = tokenize(text, tok_cfg, ts)
            present[i, j] = True
    return _Tensors(query_ids, serp_ids, present, labels, empty)


def _val_split(n: int, fraction: float, rng: np.random.Generator):
    n_val = max(1, int(round(n * fraction))) if n > 1 else 0
    perm = rng.permutation(n)
    return np.sort(perm[n_val:]), np.sort(perm[:n_val])


def _slice(t: _Tensors, idx: np.ndarray) -> _Tensors:
    return _Tensors(t.query_ids[idx], t.serp_ids[idx], t.serp_present[idx],
                    t.labels[idx], t.empty_priv)


@dataclass
class TrainReport:
    train_losses: list[float]      # mean loss per epoch
    val_losses: list[float]        # one per epoch
    best_epoch: int
    step_losses: list[float]       # one per optimizer step
    empty_priv: int = 0
    config: Optional[TrainConfig] = None


# --- teacher ------------------------------------------------------------------


def train_teacher(
    dataset: LupiDataset,
    priv: Optional[PrivilegedConfig] = None,
    cfg: Optional[TrainConfig] = None,
    tok_cfg: Optional[TokenizerConfig] = None,
    enc_cfg: Optional[EncoderConfig] = None,
    val_dataset: Optional[LupiDataset] = None,
    val_fraction: float = 0.1,
) -> tuple[TeacherModel, TrainReport]:
    """MAE regression of toxicity from query + privileged SERP text.

    Validation defaults to a held-out fraction of the *training* data;
    passing ``val_dataset`` explicitly reproduces the paper's literal
    test-side split instead.
    """
    priv = priv or PrivilegedConfig()
    cfg = cfg or TrainConfig()
    tok_cfg = tok_cfg or TokenizerConfig()
    enc_cfg = enc_cfg or EncoderConfig()

    tensors = _assemble(dataset, tok_cfg, priv, cfg.seed)
    if val_dataset is not None:
        train_t = tensors
        val_t = _assemble(val_dataset, tok_cfg, priv, cfg.seed)
    else:
        split_rng = np.random.default_rng([cfg.seed, 104729])
        train_idx, val_idx = _val_split(len(dataset.examples), val_fraction, split_rng)
        if val_idx.size == 0:
            raise TrainingError("training set too small to hold out validation")
        train_t = _slice(tensors, train_idx)
        val_t = _slice(tensors, val_idx)

    model = TeacherModel(tok_cfg, enc_cfg, priv, seed=cfg.seed)
    opt = AdamW(model.parameters(), cfg.lr, weight_decay=cfg.weight_decay)
    loop_rng = np.random.default_rng([cfg.seed, 7919])

    n = train_t.labels.shape[0]
    steps_per_epoch = int(np.ceil(n / cfg.batch_size))
    total_steps = steps_per_epoch * cfg.epochs

    def val_loss() -> float:
        score, _, _ = model.forward(val_t.query_ids, val_t.serp_ids,
                                    val_t.serp_present, train=False, cache=False)
        return float(np.mean(np.abs(score - val_t.labels)))

    best = (np.inf, -1, None)
    report = TrainReport([], [], -1, [], tensors.empty_priv, cfg)
    step = 0
    bad_epochs = 0
    for epoch in range(cfg.epochs):
        perm = loop_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            model.zero_grads()
            score, _, _ = model.forward(
                train_t.query_ids[idx], train_t.serp_ids[idx],
                train_t.serp_present[idx], train=True, rng=loop_rng)
            diff = score - train_t.labels[idx]
            loss = float(np.mean(np.abs(diff)))
            model.backward(np.sign(diff) / diff.shape[0])
            opt.step(model.gradients(),
                     warmup_scale(step, total_steps, cfg.warmup_fraction))
            step += 1
            epoch_losses.append(loss)
            report.step_losses.append(loss)
        report.train_losses.append(float(np.mean(epoch_losses)))
        vl = val_loss()
        report.val_losses.append(vl)
        if vl < best[0]:
            best = (vl, epoch, copy.deepcopy(model.parameters()))
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    if best[2] is not None:
        params = model.parameters()
        for name, value in best[2].items():
            params[name][...] = value
    report.best_epoch = best[1]
    return model, report


# --- student / baseline ---------------------------------------------------


def _train_student_loop(
    dataset: LupiDataset,
    teacher: Optional[TeacherModel],
    weights: LossWeights,
    cfg: TrainConfig,
    tok_cfg: TokenizerConfig,
    enc_cfg: EncoderConfig,
    init_from: Optional[TeacherModel],
    val_dataset: Optional[LupiDataset],
    val_fraction: float,
) -> tuple[StudentModel, TrainReport]:
    needs_teacher = weights.pm != 0.0 or weights.hm != 0.0 or weights.am != 0.0
    if needs_teacher and teacher is None:
        raise TrainingError("non-zero pm/hm/am weights require a teacher")
    priv = teacher.priv if (teacher is not None and needs_teacher) else None

    tensors = _assemble(dataset, tok_cfg, priv, cfg.seed)
    if val_dataset is not None:
        train_t, val_t = tensors, _assemble(val_dataset, tok_cfg, priv, cfg.seed)
    else:
        split_rng = np.random.default_rng([cfg.seed, 104729])
        train_idx, val_idx = _val_split(len(dataset.examples), val_fraction, split_rng)
        if val_idx.size == 0:
            raise TrainingError("training set too small to hold out validation")
        train_t, val_t = _slice(tensors, train_idx), _slice(tensors, val_idx)

    frozen_before = None
    if teacher is not None and needs_teacher:
        frozen_before = {k: v.copy() for k, v in teacher.parameters().items()}

    student = StudentModel(tok_cfg, enc_cfg, seed=cfg.seed)
    if init_from is not None:
        student.init_from_teacher(init_from)
    opt = AdamW(student.parameters(), cfg.lr, weight_decay=cfg.weight_decay)
    loop_rng = np.random.default_rng([cfg.seed, 7919])

    def teacher_out(t: _Tensors, idx=None):
        if not needs_teacher:
            return None, None, None
        sl = t if idx is None else _slice(t, idx)
        score, fused, attn = teacher.forward(
            sl.query_ids, sl.serp_ids, sl.serp_present, train=False, cache=False)
        return score, fused, attn

    def val_loss() -> float:
        t_score, t_fused, t_attn = teacher_out(val_t)
        s_score, s_hint, s_attn = student.forward(val_t.query_ids,
                                                  train=False, cache=False)
        value, _, _ = total_loss(val_t.labels, s_score, s_hint, s_attn,
                                 t_score, t_fused, t_attn, weights)
        return value

    n = train_t.labels.shape[0]
    steps_per_epoch = int(np.ceil(n / cfg.batch_size))
    total_steps = steps_per_epoch * cfg.epochs

    best = (np.inf, -1, None)
    report = TrainReport([], [], -1, [], tensors.empty_priv, cfg)
    step = 0
    bad_epochs = 0
    for epoch in range(cfg.epochs):
        perm = loop_rng.permutation(n)
        epoch_losses = []
        for start in range(0, n, cfg.batch_size):
            idx = perm[start:start + cfg.batch_size]
            t_score, t_fused, t_attn = teacher_out(train_t, idx)
            student.zero_grads()
            s_score, s_hint, s_attn = student.forward(
                train_t.query_ids[idx], train=True, rng=loop_rng)
            value, _, (d_score, d_hint, d_attn) = total_loss(
                train_t.labels[idx], s_score, s_hint, s_attn,
                t_score, t_fused, t_attn, weights)
            student.backward(d_score, d_hint, d_attn)
            opt.step(student.gradients(),
                     warmup_scale(step, total_steps, cfg.warmup_fraction))
            step += 1
            epoch_losses.append(value)
            report.step_losses.append(value)
        report.train_losses.append(float(np.mean(epoch_losses)))
        vl = val_loss()
        report.val_losses.append(vl)
        if vl < best[0]:
            best = (vl, epoch, copy.deepcopy(student.parameters()))
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs >= cfg.patience:
                break
    if best[2] is not None:
        params = student.parameters()
        for name, value in best[2].items():
            params[name][...] = value
    report.best_epoch = best[1]

    if frozen_before is not None:
        after = teacher.parameters()
        for name, value in frozen_before.items():
            if not np.array_equal(after[name], value):
                raise TrainingError(f"teacher parameter {name} changed during distillation")
    return student, report


def distill_student(
    dataset: LupiDataset,
    teacher: TeacherModel,
    weights: Optional[LossWeights] = None,
    cfg: Optional[TrainConfig] = None,
    val_dataset: Optional[LupiDataset] = None,
    val_fraction: float = 0.1,
) -> tuple[StudentModel, TrainReport]:
    """Train a query-only student against the frozen teacher."""
    weights = weights or LossWeights()
    cfg = cfg or TrainConfig()
    return _train_student_loop(
        dataset, teacher, weights, cfg, teacher.tok_cfg, teacher.enc_cfg,
        init_from=teacher, val_dataset=val_dataset, val_fraction=val_fraction)


def train_query_baseline(
    dataset: LupiDataset,
    cfg: Optional[TrainConfig] = None,
    tok_cfg: Optional[TokenizerConfig] = None,
    enc_cfg: Optional[EncoderConfig] = None,
    init_from: Optional[TeacherModel] = None,
    val_dataset: Optional[LupiDataset] = None,
    val_fraction: float = 0.1,
) -> tuple[StudentModel, TrainReport]:
    """Same architecture, labels only: weights (1,0,0,0), no teacher."""
    cfg = cfg or TrainConfig()
    if init_from is not None:
        tok_cfg = tok_cfg or init_from.tok_cfg
        enc_cfg = enc_cfg or init_from.enc_cfg
    return _train_student_loop(
        dataset, None, LossWeights(1.0, 0.0, 0.0, 0.0), cfg,
        tok_cfg or TokenizerConfig(), enc_cfg or EncoderConfig(),
        init_from=init_from, val_dataset=val_dataset, val_fraction=val_fraction)


# --- grid search ---------------------------------------------------------------


def grid_search_privileged(
    dataset: LupiDataset,
    cfg: Optional[TrainConfig] = None,
    engines: Sequence[str] = ENGINE_AXIS,
    fields: Sequence[str] = FIELD_AXIS,
    filters: Sequence[str] = FILTER_AXIS,
    selections: Sequence[str] = SELECTION_AXIS,
    sizes: Sequence[int] = (5, 10, 20, 50),
    tok_cfg: Optional[TokenizerConfig] = None,
    enc_cfg: Optional[EncoderConfig] = None,
) -> tuple[PrivilegedConfig, list[dict]]:
    """Train one teacher per privileged-axis combination, rank by val MAE."""
    if not (engines and fields and filters and selections and sizes):
        raise TrainingError("all grid axes must be non-empty")
    cfg = cfg or TrainConfig()
    table = []
    for combo in itertools.product(engines, fields, filters, selections, sizes):
        priv = PrivilegedConfig(*combo)
        _, report = train_teacher(dataset, priv, cfg, tok_cfg, enc_cfg)
        table.append({
            "priv": priv.spec_string(),
            "val_mae": min(report.val_losses),
            "epochs_run": len(report.val_losses),
            "empty_priv": report.empty_priv,
        })
    table.sort(key=lambda row: (row["val_mae"], row["priv"]))
    best = PrivilegedConfig.from_spec(table[0]["priv"])
    return best, table


# --- leave-one-category-out CV -------------------------------------------------


@dataclass
class FoldReport:
    category: str
    n_test: int
    toxicity: dict[str, float]     # strategy -> mean top-k true toxicity
    expansion: dict[str, float]    # strategy -> mean top-k true expansion
    empty_priv_test: int = 0


def _top_k_truth(examples: Sequence[LupiExample], scores: np.ndarray,
                 k: int) -> tuple[float, float]:
    order = sorted(range(len(examples)),
                   key=lambda i: (-scores[i], examples[i].query))
    top = order[:k]
    tox = float(np.mean([examples[i].toxicity for i in top]))
    exp = float(np.mean([examples[i].expansion for i in top]))
    return tox, exp


def loco_cv(
    dataset: LupiDataset,
    priv: Optional[PrivilegedConfig] = None,
    cfg: Optional[TrainConfig] = None,
    weights: Optional[LossWeights] = None,
    k: int = 20,
    min_queries: int = 25,
    tok_cfg: Optional[TokenizerConfig] = None,
    enc_cfg: Optional[EncoderConfig] = None,
    paper_split: bool = False,
) -> list[FoldReport]:
    """Hold out one category per fold; report mean top-k true toxicity.

    ``paper_split=True`` reproduces the published protocol of validating on
    10% of the held-out fold (which leaks test-category data into model
    selection); the default validates on 10% of the training data.
    """
    priv = priv or PrivilegedConfig()
    cfg = cfg or TrainConfig()
    weights = weights or LossWeights()
    tok_cfg = tok_cfg or TokenizerConfig()
    enc_cfg = enc_cfg or EncoderConfig()

    by_cat: dict[str, list[int]] = {}
    for i, ex in enumerate(dataset.examples):
        by_cat.setdefault(ex.category, []).append(i)
    categories = sorted(by_cat)
    if len(categories) < 2:
        raise TrainingError("leave-one-category-out needs at least 2 categories")

    reports = []
    for cat in categories:
        test_idx = by_cat[cat]
        if len(test_idx) < min_queries:
            warnings.warn(
                f"category {cat!r} has only {len(test_idx)} queries; fold skipped")
            continue
        train_idx = [i for c in categories if c != cat for i in by_cat[c]]
        train_set = dataset.subset(train_idx)
        test_set = dataset.subset(test_idx)

        val_set = None
        teach_train = train_set
        if paper_split:
            rng = np.random.default_rng([cfg.seed, 15485863])
            n_val = max(1, int(round(len(test_idx) * 0.1)))
            picks = rng.permutation(len(test_idx))[:n_val]
            val_set = test_set.subset(sorted(picks))

        teacher, _ = train_teacher(teach_train, priv, cfg, tok_cfg, enc_cfg,
                                   val_dataset=val_set)
        student, _ = distill_student(train_set, teacher, weights, cfg,
                                     val_dataset=val_set)
        baseline, _ = train_query_baseline(train_set, cfg, tok_cfg, enc_cfg,
                                           val_dataset=val_set)

        test_tensors = _assemble(test_set, tok_cfg, priv, cfg.seed)
        t_score, _, _ = teacher.forward(
            test_tensors.query_ids, test_tensors.serp_ids,
            test_tensors.serp_present, train=False, cache=False)
        s_score, _, _ = student.forward(test_tensors.query_ids,
                                        train=False, cache=False)
        b_score, _, _ = baseline.forward(test_tensors.query_ids,
                                         train=False, cache=False)
        true_tox = np.array([ex.toxicity for ex in test_set.examples])
        true_exp = np.array([float(ex.expansion) for ex in test_set.examples])

        tox_scores = {}
        exp_scores = {}
        tox_scores["max"], _ = _top_k_truth(test_set.examples, true_tox, k)
        _, exp_scores["max"] = _top_k_truth(test_set.examples, true_exp, k)
        for name, pred in (("teacher", t_score), ("student", s_score),
                           ("baseline", b_score)):
            clamped = np.clip(pred, 0.0, 1.0)
            tox, exp = _top_k_truth(test_set.examples, clamped, k)
            tox_scores[name] = tox
            exp_scores[name] = exp
        reports.append(FoldReport(
            category=cat,
            n_test=len(test_idx),
            toxicity=tox_scores,
            expansion=exp_scores,
            empty_priv_test=test_tensors.empty_priv,
        ))
    if not reports:
        raise TrainingError("all folds were skipped; nothing to report")
    return reports
