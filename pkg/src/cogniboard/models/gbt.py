"""Small deterministic gradient-boosted trees for binary outcomes.

Exact greedy splits on dense features, Newton leaf values for the logistic
loss, no row/column subsampling, so a fixed configuration always produces
the same ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .logistic import sigmoid


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    value: float = 0.0
    gain: float = 0.0

    def is_leaf(self) -> bool:
        return self.left is None

    def to_dict(self) -> dict:
        if self.is_leaf():
            return {"value": self.value}
        return {
            "feature": self.feature,
            "threshold": self.threshold,
            "gain": self.gain,
            "left": self.left.to_dict(),
            "right": self.right.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TreeNode":
        if "value" in d:
            return cls(value=float(d["value"]))
        return cls(
            feature=int(d["feature"]),
            threshold=float(d["threshold"]),
            gain=float(d["gain"]),
            left=cls.from_dict(d["left"]),
            right=cls.from_dict(d["right"]),
        )


def _best_split(x: np.ndarray, g: np.ndarray, h: np.ndarray, idx: np.ndarray, min_leaf: int):
    """Pick (feature, threshold, gain) maximizing the standard second-order
    gain; returns None when no split improves."""
    best = None
    g_tot = g[idx].sum()
    h_tot = h[idx].sum()
    parent = g_tot * g_tot / (h_tot + 1e-12)
    for j in range(x.shape[1]):
        col = x[idx, j]
        order = np.argsort(col, kind="mergesort")
        col_sorted = col[order]
        g_sorted = g[idx][order]
        h_sorted = h[idx][order]
        g_cum = np.cumsum(g_sorted)
        h_cum = np.cumsum(h_sorted)
        for k in range(min_leaf - 1, len(idx) - min_leaf):
            if col_sorted[k] == col_sorted[k + 1]:
                continue
            gl, hl = g_cum[k], h_cum[k]
            gr, hr = g_tot - gl, h_tot - hl
            gain = gl * gl / (hl + 1e-12) + gr * gr / (hr + 1e-12) - parent
            if best is None or gain > best[2] + 1e-15:
                thr = (col_sorted[k] + col_sorted[k + 1]) / 2.0
                best = (j, thr, gain)
    return best


def _grow(x, g, h, idx, depth, max_depth, min_leaf) -> TreeNode:
    node = TreeNode()
    if depth >= max_depth or len(idx) < 2 * min_leaf:
        node.value = -g[idx].sum() / (h[idx].sum() + 1e-12)
        return node
    split = _best_split(x, g, h, idx, min_leaf)
    if split is None or split[2] <= 1e-12:
        node.value = -g[idx].sum() / (h[idx].sum() + 1e-12)
        return node
    j, thr, gain = split
    node.feature, node.threshold, node.gain = j, thr, gain
    left_mask = x[idx, j] <= thr
    node.left = _grow(x, g, h, idx[left_mask], depth + 1, max_depth, min_leaf)
    node.right = _grow(x, g, h, idx[~left_mask], depth + 1, max_depth, min_leaf)
    return node


def _predict_tree(node: TreeNode, x: np.ndarray) -> np.ndarray:
    out = np.empty(x.shape[0])
    stack = [(node, np.arange(x.shape[0]))]
    while stack:
        nd, idx = stack.pop()
        if nd.is_leaf():
            out[idx] = nd.value
            continue
        mask = x[idx, nd.feature] <= nd.threshold
        stack.append((nd.left, idx[mask]))
        stack.append((nd.right, idx[~mask]))
    return out


@dataclass
class GbtEnsemble:
    trees: list[TreeNode] = field(default_factory=list)
    base_score: float = 0.0
    learning_rate: float = 0.1
    max_depth: int = 3
    n_trees: int = 50

    def raw_predict(self, x: np.ndarray) -> np.ndarray:
        out = np.full(x.shape[0], self.base_score)
        for t in self.trees:
            out += self.learning_rate * _predict_tree(t, x)
        return out

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return sigmoid(self.raw_predict(x))

    def split_gains(self, n_features: int) -> np.ndarray:
        gains = np.zeros(n_features)

        def walk(node: TreeNode):
            if node.is_leaf():
                return
            gains[node.feature] += node.gain
            walk(node.left)
            walk(node.right)

        for t in self.trees:
            walk(t)
        return gains

    def to_dict(self) -> dict:
        return {
            "base_score": self.base_score,
            "learning_rate": self.learning_rate,
            "max_depth": self.max_depth,
            "n_trees": self.n_trees,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GbtEnsemble":
        ens = cls(
            base_score=float(d["base_score"]),
            learning_rate=float(d["learning_rate"]),
            max_depth=int(d["max_depth"]),
            n_trees=int(d["n_trees"]),
        )
        ens.trees = [TreeNode.from_dict(t) for t in d["trees"]]
        return ens


def fit_gbt(
    x: np.ndarray,
    y: np.ndarray,
    n_trees: int = 50,
    max_depth: int = 3,
    learning_rate: float = 0.1,
    min_leaf: int = 3,
) -> tuple[GbtEnsemble, list[float]]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    p0 = min(max(y.mean(), 1e-6), 1 - 1e-6)
    ens = GbtEnsemble(
        base_score=float(np.log(p0 / (1 - p0))),
        learning_rate=learning_rate,
        max_depth=max_depth,
        n_trees=n_trees,
    )
    f = np.full(len(y), ens.base_score)
    curve: list[float] = []
    idx_all = np.arange(len(y))
    for _ in range(n_trees):
        p = sigmoid(f)
        g = p - y
        h = np.maximum(p * (1 - p), 1e-9)
        tree = _grow(x, g, h, idx_all, 0, max_depth, min_leaf)
        ens.trees.append(tree)
        f += learning_rate * _predict_tree(tree, x)
        p = np.clip(sigmoid(f), 1e-12, 1 - 1e-12)
        curve.append(float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p))))
    return ens, curve
