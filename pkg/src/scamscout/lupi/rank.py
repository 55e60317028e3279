"""Rank candidate keywords by predicted toxicity with a trained student."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..corpus import KeywordSuggestion
from ..errors import TrainingError
from .models import StudentModel
from .tokenizer import tokenize_batch


@dataclass(frozen=True)
class RankedKeyword:
    text: str
    category: str
    score: float       # clamped to [0, 1]
    rank: int          # 1-based within its category

    def as_dict(self) -> dict:
        return {"text": self.text, "category": self.category,
                "score": self.score, "rank": self.rank}


def rank_keywords(
    student: StudentModel,
    keywords: Sequence[KeywordSuggestion],
    k: Optional[int] = 20,
    batch_size: int = 256,
) -> list[RankedKeyword]:
    """Score every keyword, keep the top-k per category.

    Scores are clamped to [0, 1]; ties break lexicographically on the
    keyword text so output order is deterministic.  ``k=None`` keeps all.
    """
    if not keywords:
        raise TrainingError("no keywords to rank")
    texts = [kw.text for kw in keywords]
    scores = np.empty(len(texts), dtype=np.float64)
    for start in range(0, len(texts), batch_size):
        ids = tokenize_batch(texts[start:start + batch_size], student.tok_cfg)
        out, _, _ = student.forward(ids, train=False, cache=False)
        scores[start:start + len(out)] = out
    scores = np.clip(scores, 0.0, 1.0)

    by_cat: dict[str, list[int]] = {}
    for i, kw in enumerate(keywords):
        by_cat.setdefault(kw.category, []).append(i)
    ranked = []
    for cat in sorted(by_cat):
        order = sorted(by_cat[cat], key=lambda i: (-scores[i], keywords[i].text))
        if k is not None:
            order = order[:k]
        for pos, i in enumerate(order, start=1):
            ranked.append(RankedKeyword(keywords[i].text, cat,
                                        float(scores[i]), pos))
    return ranked


def ranked_to_csv(ranked: Sequence[RankedKeyword]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category", "rank", "keyword", "score"])
    for row in ranked:
        writer.writerow([row.category, row.rank, row.text, f"{row.score:.6f}"])
    return buf.getvalue()


def ranked_from_csv(text: str) -> list[RankedKeyword]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header != ["category", "rank", "keyword", "score"]:
        raise TrainingError(f"unexpected ranking header: {header!r}")
    return [RankedKeyword(text=row[2], category=row[0],
                          score=float(row[3]), rank=int(row[1]))
            for row in reader if row]
