"""Split concatenated domain labels into dictionary words.

"cheapnikeshoes" -> ["cheap", "nike", "shoes"].  A unigram dynamic program
picks the split with minimal total cost, where a known word costs
log((rank + 1) * log(V)) (Zipf: cost grows with frequency rank) and a run of
unknown characters costs a large flat penalty plus a per-character charge, so
unknown text is absorbed into as few residue chunks as possible while known
words are still carved out of it.
"""

from __future__ import annotations

import math
import re
from functools import lru_cache
from importlib import resources

_UNKNOWN_BASE = 100.0
_UNKNOWN_PER_CHAR = 20.0

_LABEL_RE = re.compile(r"[^a-z0-9]+")


def load_word_costs(path=None) -> dict[str, float]:
    """Read a "word count" frequency table and convert it to word costs.

    Ranks come from sorting by count descending (alphabetical on ties), so the
    costs are independent of the file's line order.
    """
    if path is None:
        text = resources.files("scamscout.data").joinpath("wordfreq.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    counts: dict[str, int] = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        word, _, count = line.partition(" ")
        counts[word] = int(count) if count.strip() else 1
    return costs_from_counts(counts)


def costs_from_counts(counts: dict[str, int]) -> dict[str, float]:
    vocab = len(counts)
    if vocab == 0:
        return {}
    log_v = math.log(max(vocab, 2))
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {word: math.log((rank + 1) * log_v) for rank, (word, _) in enumerate(ordered)}


@lru_cache(maxsize=1)
def default_word_costs() -> dict[str, float]:
    return load_word_costs()


def normalize_label(label: str) -> str:
    """Lowercase and strip everything outside a-z0-9 (hyphens, dots, ...)."""
    return _LABEL_RE.sub("", label.lower())


def _chunk_cost(chunk: str, costs: dict[str, float]) -> float:
    known = costs.get(chunk)
    if known is not None:
        return known
    return _UNKNOWN_BASE + _UNKNOWN_PER_CHAR * len(chunk)


def segment_label(label: str, costs: dict[str, float] | None = None) -> list[str]:
    """Return the minimal-cost split of a normalized label.

    Ties break toward fewer tokens, then the lexicographically smallest token
    tuple, so the result is fully deterministic.
    """
    if costs is None:
        costs = default_word_costs()
    label = normalize_label(label)
    n = len(label)
    if n == 0:
        return []
    # best[i] = (cost, num_tokens, tokens) for label[:i]
    best: list[tuple[float, int, tuple[str, ...]] | None] = [None] * (n + 1)
    best[0] = (0.0, 0, ())
    for i in range(1, n + 1):
        for j in range(i):
            prev = best[j]
            if prev is None:
                continue
            chunk = label[j:i]
            cand = (prev[0] + _chunk_cost(chunk, costs), prev[1] + 1, prev[2] + (chunk,))
            if best[i] is None or cand < best[i]:
                best[i] = cand
    assert best[n] is not None
    return list(best[n][2])


def count_subwords(label: str, costs: dict[str, float] | None = None) -> int:
    return len(segment_label(label, costs))
