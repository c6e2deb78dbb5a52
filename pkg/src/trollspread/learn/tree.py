"""Depth-bounded binary regression trees grown by exact greedy variance reduction.

The same kernel serves both ensembles. For gradient boosting the split
target is the residual and leaves take a Newton step ``sum(w r) / sum(w h)``.
For the random forest the target is the 0/1 label with unit hessian, so the
variance-reduction gain is proportional to the Gini decrease and leaves hold
the positive-class fraction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

_MAX_DEPTH_CAP = 40


@njit(inline="always")
def _splitmix64(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return state, z ^ (z >> np.uint64(31))


@njit(nogil=True, cache=True)
def _grow(XT, order, target, hess, weight, max_depth, min_leaf, max_features, seed, cap):
    d = XT.shape[0]
    n = XT.shape[1]
    m = order.shape[1]
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    decrease = np.zeros(cap)
    node_weight = np.zeros(cap)

    work = order.copy()
    lbuf = np.empty(m, dtype=np.int64)
    rbuf = np.empty(m, dtype=np.int64)
    goes_left = np.zeros(n, dtype=np.bool_)
    feats = np.arange(d)
    cand = np.empty(d, dtype=np.int64)
    rng = np.uint64(seed)
    unit = True
    for i in range(n):
        if weight[i] != 1.0:
            unit = False
            break

    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    sp = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    st_node[0] = 0
    sp = 1
    n_nodes = 1

    while sp > 0:
        sp -= 1
        start = st_start[sp]
        end = st_end[sp]
        depth = st_depth[sp]
        node = st_node[sp]

        s = 0.0
        w_tot = 0.0
        h_tot = 0.0
        ss = 0.0
        for i in range(start, end):
            r = work[0, i]
            w = weight[r]
            t = target[r]
            s += w * t
            ss += w * t * t
            w_tot += w
            h_tot += w * hess[r]
        value[node] = s / h_tot if h_tot > 1e-150 else 0.0
        node_weight[node] = w_tot

        if depth >= max_depth or w_tot < 2.0 * min_leaf or n_nodes + 2 > cap:
            continue
        parent = s * s / w_tot
        sse = ss - parent
        if sse <= 1e-12 * ss or sse <= 0.0:
            continue

        n_cand = d
        if max_features < d:
            for j in range(d):
                feats[j] = j
            for j in range(max_features):
                rng, z = _splitmix64(rng)
                k = j + np.int64(z % np.uint64(d - j))
                tmp = feats[j]
                feats[j] = feats[k]
                feats[k] = tmp
            n_cand = max_features
            for j in range(n_cand):
                cand[j] = feats[j]
            cand[:n_cand].sort()
        else:
            for j in range(d):
                cand[j] = j

        best = 1e-12 * sse
        best_f = -1
        best_thr = 0.0
        for c in range(n_cand):
            f = cand[c]
            xf = XT[f]
            sl = 0.0
            wl = 0.0
            r = work[f, start]
            xa = xf[r]
            for i in range(start, end - 1):
                r_next = work[f, i + 1]
                xb = xf[r_next]
                if unit:
                    sl += target[r]
                    wl += 1.0
                else:
                    w = weight[r]
                    sl += w * target[r]
                    wl += w
                if xb > xa and wl >= min_leaf:
                    wr = w_tot - wl
                    if wr < min_leaf:
                        break
                    sr = s - sl
                    gain = (sl * sl * wr + sr * sr * wl) / (wl * wr) - parent
                    if gain > best:
                        best = gain
                        best_f = f
                        thr = xa + (xb - xa) * 0.5
                        if thr >= xb:
                            thr = xa
                        best_thr = thr
                xa = xb
                r = r_next

        if best_f < 0:
            continue

        xf = XT[best_f]
        n_left = 0
        for i in range(start, end):
            r = work[0, i]
            gl = xf[r] <= best_thr
            goes_left[r] = gl
            if gl:
                n_left += 1
        # children at the depth limit become leaves and only read work[0]
        n_part = 1 if depth + 1 >= max_depth else d
        for g in range(n_part):
            # branchless stable partition: both buffers are written, only one index advances
            a = 0
            b = 0
            for i in range(start, end):
                r = work[g, i]
                gl = np.int64(goes_left[r])
                lbuf[a] = r
                rbuf[b] = r
                a += gl
                b += 1 - gl
            for i in range(a):
                work[g, start + i] = lbuf[i]
            for i in range(b):
                work[g, start + a + i] = rbuf[i]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        decrease[node] = best

        st_start[sp] = start + n_left
        st_end[sp] = end
        st_depth[sp] = depth + 1
        st_node[sp] = rc
        sp += 1
        st_start[sp] = start
        st_end[sp] = start + n_left
        st_depth[sp] = depth + 1
        st_node[sp] = lc
        sp += 1

    return (feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes],
            value[:n_nodes], decrease[:n_nodes], node_weight[:n_nodes])


@njit(nogil=True, cache=True)
def _predict(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for i in range(n):
        k = 0
        while feature[k] >= 0:
            if X[i, feature[k]] <= threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[i] = value[k]
    return out


@njit(nogil=True, cache=True)
def _predict_sum(X, feature, threshold, left, right, value):
    """Sum of tree outputs; the arrays are stacked (n_trees, max_nodes)."""
    n = X.shape[0]
    n_trees = feature.shape[0]
    out = np.zeros(n)
    for i in range(n):
        acc = 0.0
        for t in range(n_trees):
            k = 0
            while feature[t, k] >= 0:
                if X[i, feature[t, k]] <= threshold[t, k]:
                    k = left[t, k]
                else:
                    k = right[t, k]
            acc += value[t, k]
        out[i] = acc
    return out


@dataclass
class RegressionTree:
    """Array-encoded binary tree; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity_decrease: np.ndarray
    node_weight: np.ndarray
    max_depth: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _predict(X, self.feature, self.threshold, self.left, self.right, self.value)

    def depth(self) -> int:
        deepest = 0
        stack = [(0, 0)]
        while stack:
            k, dep = stack.pop()
            deepest = max(deepest, dep)
            if self.feature[k] >= 0:
                stack.append((self.left[k], dep + 1))
                stack.append((self.right[k], dep + 1))
        return deepest

    def importance(self, n_features: int) -> np.ndarray:
        """Unnormalized per-feature sum of split impurity decreases."""
        out = np.zeros(n_features)
        split = self.feature >= 0
        np.add.at(out, self.feature[split], self.impurity_decrease[split])
        return out


def presort(X: np.ndarray) -> np.ndarray:
    """Per-feature row orders, shape (n_features, n_rows); ties keep row order."""
    return np.ascontiguousarray(np.argsort(X, axis=0, kind="stable").T.astype(np.int64))


def grow_tree(X, target, hess=None, weight=None, max_depth: Optional[int] = 3, min_leaf: float = 1,
              max_features: Optional[int] = None, seed: int = 0, order=None, XT=None) -> RegressionTree:
    """Grow one tree on ``X`` (no missing values) against ``target``.

    Rows with zero ``weight`` are ignored. ``order``/``XT`` may be supplied
    by callers that grow many trees on the same design matrix.
    """
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    target = np.ascontiguousarray(target, dtype=np.float64)
    hess = np.ones(n) if hess is None else np.ascontiguousarray(hess, dtype=np.float64)
    weight = np.ones(n) if weight is None else np.ascontiguousarray(weight, dtype=np.float64)
    if XT is None:
        XT = np.ascontiguousarray(X.T)
    if order is None:
        order = presort(X)
    if not np.all(weight > 0):
        keep = weight[order] > 0
        order = np.ascontiguousarray(order[keep].reshape(d, -1))
    depth = _MAX_DEPTH_CAP if max_depth is None else int(max_depth)
    if depth < 0:
        raise ValueError("max_depth must be non-negative")
    m = order.shape[1]
    cap = max(1, min(2 ** (min(depth, _MAX_DEPTH_CAP) + 1) - 1, 2 * m - 1))
    mf = d if max_features is None else int(max_features)
    if not 1 <= mf <= d:
        raise ValueError("max_features out of range")
    arrays = _grow(XT, order, target, hess, weight, depth, float(min_leaf), mf,
                   np.uint64(seed % (1 << 64)), cap)
    return RegressionTree(*(a.copy() for a in arrays), max_depth=depth)


def stack_trees(trees) -> tuple:
    """Pad tree arrays into (n_trees, max_nodes) blocks for :func:`_predict_sum`."""
    width = max(t.n_nodes for t in trees)
    k = len(trees)
    feature = np.full((k, width), -1, dtype=np.int64)
    threshold = np.zeros((k, width))
    left = np.full((k, width), -1, dtype=np.int64)
    right = np.full((k, width), -1, dtype=np.int64)
    value = np.zeros((k, width))
    for i, t in enumerate(trees):
        m = t.n_nodes
        feature[i, :m] = t.feature
        threshold[i, :m] = t.threshold
        left[i, :m] = t.left
        right[i, :m] = t.right
        value[i, :m] = t.value
    return feature, threshold, left, right, value


def predict_sum(trees, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if not trees:
        return np.zeros(X.shape[0])
    return _predict_sum(X, *stack_trees(trees))
