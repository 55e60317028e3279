"""Regression trees over the encoded feature matrix.

Trees are grown with exact greedy search: every numeric threshold midpoint
and every ordered-target-statistics prefix of categories is scored.  Split
gain uses the gradient/hessian form G^2/H so the same grower serves both the
squared and logistic boosting objectives.  Rows with MISSING values follow
the split's ``missing_goes`` direction, which is itself chosen by gain.
Gain ties break lexicographically (lower feature index, then lower
threshold / shorter category prefix, then LEFT) so training is deterministic
regardless of dict or argsort quirks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

LEFT = "LEFT"
RIGHT = "RIGHT"

_EPS_HESS = 1e-12
# gains within this of the best are treated as ties and broken lexicographically
_GAIN_TIE = 1e-12


@dataclass
class TreeNode:
    feature_index: int = -1
    threshold: Optional[float] = None
    category_set: Optional[frozenset[int]] = None
    missing_goes: str = LEFT
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: float = 0.0

    @property
    def is_leaf(self) -> bool:
        return self.feature_index < 0

    def to_dict(self) -> dict:
        if self.is_leaf:
            return {"value": self.value}
        out = {
            "feature_index": self.feature_index,
            "missing_goes": self.missing_goes,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }
        if self.category_set is not None:
            out["category_set"] = sorted(self.category_set)
        else:
            out["threshold"] = self.threshold
        return out

    @classmethod
    def from_dict(cls, payload: dict) -> "TreeNode":
        if "feature_index" not in payload:
            return cls(value=payload["value"])
        cats = payload.get("category_set")
        return cls(
            feature_index=payload["feature_index"],
            threshold=payload.get("threshold"),
            category_set=frozenset(cats) if cats is not None else None,
            missing_goes=payload["missing_goes"],
            left=cls.from_dict(payload["left"]),
            right=cls.from_dict(payload["right"]),
        )


@dataclass
class _Split:
    gain: float
    feature_index: int
    threshold: Optional[float]
    category_set: Optional[frozenset[int]]
    missing_goes: str
    left_rows: np.ndarray
    right_rows: np.ndarray

    def sort_key(self):
        # lexicographic tie-break key; lower is preferred
        if self.category_set is not None:
            second = (1, len(self.category_set), tuple(sorted(self.category_set)))
        else:
            second = (0, self.threshold)
        return (self.feature_index, second, 0 if self.missing_goes == LEFT else 1)


def _score(g: float, h: float) -> float:
    return g * g / (h + _EPS_HESS)


def _numeric_candidates(col, rows, grad, hess, min_leaf, feature_index):
    present = ~np.isnan(col)
    miss_rows = rows[~present]
    vals = col[present]
    sub_rows = rows[present]
    if vals.size < 2:
        return
    order = np.argsort(vals, kind="stable")
    vals = vals[order]
    sub_rows = sub_rows[order]
    g = grad[sub_rows]
    h = hess[sub_rows]
    g_cum = np.cumsum(g)
    h_cum = np.cumsum(h)
    g_all = g_cum[-1] + grad[miss_rows].sum()
    h_all = h_cum[-1] + hess[miss_rows].sum()
    g_miss = grad[miss_rows].sum()
    h_miss = hess[miss_rows].sum()
    n_miss = miss_rows.size
    parent = _score(g_all, h_all)
    boundaries = np.nonzero(vals[1:] != vals[:-1])[0]  # split after index b
    for b in boundaries:
        n_left = b + 1
        n_right = vals.size - n_left
        g_left, h_left = g_cum[b], h_cum[b]
        g_right, h_right = g_cum[-1] - g_left, h_cum[-1] - h_left
        threshold = (vals[b] + vals[b + 1]) / 2.0
        for missing_goes in (LEFT, RIGHT):
            if missing_goes == LEFT:
                gl, hl, nl = g_left + g_miss, h_left + h_miss, n_left + n_miss
                gr, hr, nr = g_right, h_right, n_right
            else:
                gl, hl, nl = g_left, h_left, n_left
                gr, hr, nr = g_right + g_miss, h_right + h_miss, n_right + n_miss
            if nl < min_leaf or nr < min_leaf:
                continue
            gain = _score(gl, hl) + _score(gr, hr) - parent
            if gain <= 0:
                continue
            if missing_goes == LEFT:
                left_rows = np.concatenate([sub_rows[: b + 1], miss_rows])
                right_rows = sub_rows[b + 1:]
            else:
                left_rows = sub_rows[: b + 1]
                right_rows = np.concatenate([sub_rows[b + 1:], miss_rows])
            yield _Split(gain, feature_index, float(threshold), None,
                         missing_goes, left_rows, right_rows)


def _categorical_candidates(col, rows, grad, hess, min_leaf, feature_index):
    codes = col.astype(np.int64)
    known = codes > 0  # code 0 = MISSING / unseen
    miss_rows = rows[~known]
    sub_rows = rows[known]
    sub_codes = codes[known]
    if sub_rows.size == 0:
        return
    uniq = np.unique(sub_codes)
    if uniq.size < 2:
        return
    stats = []
    for code in uniq:
        members = sub_rows[sub_codes == code]
        g = grad[members].sum()
        h = hess[members].sum()
        # ordered target statistics: ratio of gradient to hessian mass
        stats.append((g / (h + _EPS_HESS), int(code), members))
    stats.sort(key=lambda t: (t[0], t[1]))
    g_miss = grad[miss_rows].sum()
    h_miss = hess[miss_rows].sum()
    n_miss = miss_rows.size
    g_all = grad[rows].sum()
    h_all = hess[rows].sum()
    parent = _score(g_all, h_all)
    g_left = h_left = 0.0
    n_left = 0
    prefix_members = []
    for _, code, members in stats[:-1]:
        g_left += grad[members].sum()
        h_left += hess[members].sum()
        n_left += members.size
        prefix_members.append(members)
        cat_set = frozenset(int(c) for _, c, _ in
                            stats[: len(prefix_members)])
        g_right = g_all - g_miss - g_left
        h_right = h_all - h_miss - h_left
        n_right = sub_rows.size - n_left
        for missing_goes in (LEFT, RIGHT):
            if missing_goes == LEFT:
                gl, hl, nl = g_left + g_miss, h_left + h_miss, n_left + n_miss
                gr, hr, nr = g_right, h_right, n_right
            else:
                gl, hl, nl = g_left, h_left, n_left
                gr, hr, nr = g_right + g_miss, h_right + h_miss, n_right + n_miss
            if nl < min_leaf or nr < min_leaf:
                continue
            gain = _score(gl, hl) + _score(gr, hr) - parent
            if gain <= 0:
                continue
            left_known = np.concatenate(prefix_members)
            right_known = sub_rows[~np.isin(sub_codes, list(cat_set))]
            if missing_goes == LEFT:
                left_rows = np.concatenate([left_known, miss_rows])
                right_rows = right_known
            else:
                left_rows = left_known
                right_rows = np.concatenate([right_known, miss_rows])
            yield _Split(gain, feature_index, None, cat_set,
                         missing_goes, left_rows, right_rows)


def _best_split(values, cat_cols, rows, grad, hess, min_leaf):
    best: Optional[_Split] = None
    for feature_index in range(values.shape[1]):
        col = values[rows, feature_index]
        if feature_index in cat_cols:
            candidates = _categorical_candidates(
                col, rows, grad, hess, min_leaf, feature_index)
        else:
            candidates = _numeric_candidates(
                col, rows, grad, hess, min_leaf, feature_index)
        for cand in candidates:
            if best is None or cand.gain > best.gain + _GAIN_TIE:
                best = cand
            elif abs(cand.gain - best.gain) <= _GAIN_TIE:
                if cand.sort_key() < best.sort_key():
                    best = cand
    return best


def grow_tree(
    values: np.ndarray,
    cat_cols: frozenset[int],
    grad: np.ndarray,
    hess: np.ndarray,
    max_depth: int,
    min_leaf: int,
    leaf_value,
) -> TreeNode:
    """Grow one tree; ``leaf_value(rows)`` computes each leaf's output."""

    def build(rows: np.ndarray, depth: int) -> TreeNode:
        if depth >= max_depth or rows.size < 2 * min_leaf:
            return TreeNode(value=float(leaf_value(rows)))
        split = _best_split(values, cat_cols, rows, grad, hess, min_leaf)
        if split is None:
            return TreeNode(value=float(leaf_value(rows)))
        return TreeNode(
            feature_index=split.feature_index,
            threshold=split.threshold,
            category_set=split.category_set,
            missing_goes=split.missing_goes,
            left=build(split.left_rows, depth + 1),
            right=build(split.right_rows, depth + 1),
        )

    return build(np.arange(values.shape[0]), 0)


def tree_route(node: TreeNode, row: np.ndarray) -> float:
    """Score one encoded row by walking the tree."""
    while not node.is_leaf:
        x = row[node.feature_index]
        if node.category_set is not None:
            if x <= 0:  # MISSING / unseen code
                go_left = node.missing_goes == LEFT
            else:
                go_left = int(x) in node.category_set
        elif np.isnan(x):
            go_left = node.missing_goes == LEFT
        else:
            go_left = x <= node.threshold
        node = node.left if go_left else node.right
    return node.value


def predict_tree(node: TreeNode, values: np.ndarray) -> np.ndarray:
    """Vectorized scores for a whole matrix."""
    out = np.empty(values.shape[0], dtype=np.float64)

    def descend(n: TreeNode, rows: np.ndarray):
        if n.is_leaf:
            out[rows] = n.value
            return
        col = values[rows, n.feature_index]
        if n.category_set is not None:
            known = col > 0
            in_set = np.isin(col.astype(np.int64), list(n.category_set))
            go_left = np.where(known, in_set, n.missing_goes == LEFT)
        else:
            present = ~np.isnan(col)
            go_left = np.where(present, col <= n.threshold, n.missing_goes == LEFT)
        descend(n.left, rows[go_left])
        descend(n.right, rows[~go_left])

    descend(node, np.arange(values.shape[0]))
    return out
