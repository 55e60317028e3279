"""Branded-keyword filter.

Queries naming a specific brand ("nike air max") measure brand demand, not
scam-prone generic demand ("trail running shoes"), so they are dropped
before scoring.  Matching is whole-token and case-insensitive; brand names
that double as generic English words ("coach", "vans") only fire when a
product-context word sits directly next to them, which keeps "life coach"
un-branded but catches "coach handbags outlet".
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Optional, Sequence

from .errors import SchemaError


class Verdict(Enum):
    BRANDED = "BRANDED"
    UNBRANDED = "UNBRANDED"


@dataclass(frozen=True)
class BrandVerdict:
    verdict: Verdict
    matched_brand: Optional[str] = None

    def __post_init__(self):
        if (self.verdict is Verdict.BRANDED) != (self.matched_brand is not None):
            raise SchemaError("matched_brand present iff verdict is BRANDED")


@dataclass(frozen=True)
class BrandLexicon:
    brands: frozenset[str]
    ambiguous: frozenset[str]
    context: frozenset[str]

    def __post_init__(self):
        for entry in self.brands | self.ambiguous | self.context:
            if entry != entry.lower().strip() or not entry:
                raise SchemaError(f"lexicon entries must be normalized: {entry!r}")
        if not self.ambiguous <= self.brands:
            raise SchemaError("ambiguous entries must be a subset of brands")


def _read_list(name: str, path=None) -> frozenset[str]:
    if path is None:
        text = resources.files("scamscout.data").joinpath(name).read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


@lru_cache(maxsize=1)
def default_lexicon() -> BrandLexicon:
    return BrandLexicon(
        brands=_read_list("brands.txt"),
        ambiguous=_read_list("ambiguous_brands.txt"),
        context=_read_list("brand_context.txt"),
    )


BrandAdapter = Callable[[str], BrandVerdict]


def classify_branded(
    keyword: str,
    lexicon: Optional[BrandLexicon] = None,
    adapter: Optional[BrandAdapter] = None,
) -> BrandVerdict:
    """BRANDED iff a lexicon phrase occurs as whole tokens in the keyword.

    An external classifier can be wired in through ``adapter``; the rule
    lexicon is the default.
    """
    if not keyword or not keyword.strip():
        raise SchemaError("keyword must be non-empty")
    if adapter is not None:
        return adapter(keyword)
    if lexicon is None:
        lexicon = default_lexicon()
    tokens = keyword.lower().split()
    matches: list[str] = []
    for brand in lexicon.brands:
        span = _phrase_span(tokens, brand.split())
        if span is None:
            continue
        if brand in lexicon.ambiguous and not _has_adjacent_context(
            tokens, span, lexicon.context
        ):
            continue
        matches.append(brand)
    if matches:
        return BrandVerdict(Verdict.BRANDED, sorted(matches)[0])
    return BrandVerdict(Verdict.UNBRANDED)


def _phrase_span(tokens: list[str], phrase: list[str]) -> Optional[tuple[int, int]]:
    n, m = len(tokens), len(phrase)
    for start in range(n - m + 1):
        if tokens[start:start + m] == phrase:
            return start, start + m
    return None


def _has_adjacent_context(
    tokens: list[str], span: tuple[int, int], context: frozenset[str]
) -> bool:
    start, end = span
    before = tokens[start - 1] if start > 0 else None
    after = tokens[end] if end < len(tokens) else None
    return (before in context) or (after in context)


def evaluate_filter(
    labeled: Sequence[tuple[str, str]],
    lexicon: Optional[BrandLexicon] = None,
) -> dict[str, float]:
    """Precision/recall/F1 of the BRANDED class on labeled keywords."""
    seen_labels = {label for _, label in labeled}
    if seen_labels != {"BRANDED", "UNBRANDED"}:
        raise SchemaError(
            f"need both BRANDED and UNBRANDED examples, got {sorted(seen_labels)}"
        )
    tp = fp = fn = 0
    for keyword, label in labeled:
        got = classify_branded(keyword, lexicon).verdict is Verdict.BRANDED
        want = label == "BRANDED"
        if got and want:
            tp += 1
        elif got and not want:
            fp += 1
        elif want:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {"precision": precision, "recall": recall, "f1": f1}


def filter_unbranded(
    keywords: Iterable[str],
    lexicon: Optional[BrandLexicon] = None,
) -> list[str]:
    return [
        kw for kw in keywords
        if classify_branded(kw, lexicon).verdict is Verdict.UNBRANDED
    ]
