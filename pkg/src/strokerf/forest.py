"""CART random forest for binary outcomes, with both importance measures.

Trees are built by compiled kernels over flat node arrays (feature, threshold,
children, class counts per node) and only materialized as nested node objects
for inspection or serialization.  Every tree owns an rng stream derived from
(config.seed, tree index), so training is reproducible for any worker count
and training order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from strokerf.evaluate import auc_trapezoid, roc_curve
from strokerf.preprocess import stratified_kfold

__all__ = [
    "ForestConfig", "TreeNode", "Forest", "Split", "TuningResult",
    "gini_impurity", "best_split", "train_tree", "train_forest",
    "predict_proba", "gini_importance", "permutation_importance",
    "tune_num_trees", "default_mtry",
    "forest_to_json", "forest_from_json", "save_forest", "load_forest",
]

_U64_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_U64_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_U64_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = np.uint64(0xFFFFFFFFFFFFFFFF)
_TUNE_SALT = 0x7E57

FOREST_SCHEMA_VERSION = 1


# ======================================================================
# Compiled kernels
# ======================================================================

@njit(cache=True, nogil=True)
def _rand_below(state, bound):
    """Unbiased draw in [0, bound) from a splitmix64 stream held in state[0]."""
    b = np.uint64(bound)
    limit = (_U64_MAX // b) * b
    while True:
        state[0] = state[0] + _U64_GOLDEN
        z = state[0]
        z = (z ^ (z >> np.uint64(30))) * _U64_MIX1
        z = (z ^ (z >> np.uint64(27))) * _U64_MIX2
        z = z ^ (z >> np.uint64(31))
        if z < limit:
            return np.int64(z % b)


@njit(cache=True, nogil=True)
def _split_gain(g_parent, n, pos, nl, lp):
    """Weighted impurity decrease for a left block of nl rows, lp positive.

    Single home of the split arithmetic; every search path must call this so
    the scores cannot drift apart between code paths.
    """
    nr = n - nl
    ln = nl - lp
    rp = pos - lp
    rn = nr - rp
    a = lp / nl
    b = ln / nl
    g_l = 1.0 - a * a - b * b
    a = rp / nr
    b = rn / nr
    g_r = 1.0 - a * a - b * b
    return g_parent - (nl / n) * g_l - (nr / n) * g_r


@njit(cache=True, nogil=True)
def _best_split_kernel(X, y, idx, start, end, feats, n_feats, min_leaf, vals):
    """Best (feature, threshold, weighted decrease) for rows idx[start:end].

    feats[:n_feats] must be sorted ascending; combined with strict-improvement
    acceptance this resolves ties toward (lower feature, lower threshold).
    Returns feature -1 when no split strictly decreases impurity.
    """
    n = end - start
    best_f = np.int64(-1)
    best_thr = 0.0
    best_dec = 0.0
    pos = 0
    for i in range(start, end):
        pos += y[idx[i]]
    neg = n - pos
    if pos == 0 or neg == 0 or n < 2 * min_leaf:
        return best_f, best_thr, best_dec
    pp = pos / n
    pn = neg / n
    g_parent = 1.0 - pp * pp - pn * pn
    for k in range(n_feats):
        f = feats[k]
        for i in range(n):
            vals[i] = X[idx[start + i], f]
        order = np.argsort(vals[:n])
        left_pos = 0
        for i in range(n - 1):
            left_pos += y[idx[start + order[i]]]
            v_lo = vals[order[i]]
            v_hi = vals[order[i + 1]]
            if v_lo == v_hi:
                continue
            nl = i + 1
            if nl < min_leaf or n - nl < min_leaf:
                continue
            dec = _split_gain(g_parent, n, pos, nl, left_pos)
            if dec > best_dec:
                thr = v_lo + 0.5 * (v_hi - v_lo)
                if thr == v_hi:  # adjacent floats: midpoint rounded up
                    thr = v_lo
                best_f = f
                best_thr = thr
                best_dec = dec
    return best_f, best_thr, best_dec


@njit(cache=True, nogil=True)
def _best_split_sorted(X, y, lists, lo, hi, feats, n_feats, min_leaf, pos):
    """Same search as _best_split_kernel over presorted per-feature row lists.

    lists[f, lo:hi] holds the node's rows ascending in X[:, f], so no sort
    happens here.  Candidate set, arithmetic, and tie resolution are
    identical to the gather-and-argsort kernel by construction: counts at a
    distinct-value boundary do not depend on the order within ties.  Also
    returns the accepted candidate's left-block size and positives so the
    caller can partition without recounting.
    """
    n = hi - lo
    best_f = np.int64(-1)
    best_thr = 0.0
    best_dec = 0.0
    best_nl = np.int64(0)
    best_lp = np.int64(0)
    neg = n - pos
    if pos == 0 or neg == 0 or n < 2 * min_leaf:
        return best_f, best_thr, best_dec, best_nl, best_lp
    pp = pos / n
    pn = neg / n
    g_parent = 1.0 - pp * pp - pn * pn
    for k in range(n_feats):
        f = feats[k]
        left_pos = 0
        for i in range(lo, hi - 1):
            left_pos += y[lists[f, i]]
            v_lo = X[lists[f, i], f]
            v_hi = X[lists[f, i + 1], f]
            if v_lo == v_hi:
                continue
            nl = i + 1 - lo
            if nl < min_leaf or n - nl < min_leaf:
                continue
            dec = _split_gain(g_parent, n, pos, nl, left_pos)
            if dec > best_dec:
                thr = v_lo + 0.5 * (v_hi - v_lo)
                if thr == v_hi:  # adjacent floats: midpoint rounded up
                    thr = v_lo
                best_f = f
                best_thr = thr
                best_dec = dec
                best_nl = nl
                best_lp = left_pos
    return best_f, best_thr, best_dec, best_nl, best_lp


@njit(cache=True, nogil=True)
def _build_tree(X, y, seed, m, mtry, min_leaf, max_depth,
                node_feature, node_threshold, node_left, node_right,
                node_n, node_pos, node_decrease, in_bag,
                sort_order, lists, tmp, bag_count):
    """Grow one tree from a bootstrap of size m; returns the node count.

    sort_order[f] is the whole-matrix argsort of feature f, shared by all
    trees; the bootstrap expands it once into lists (one value-sorted row
    list per feature, duplicates kept), and every split partitions all p
    lists stably so children stay sorted without ever sorting again.
    """
    n, p = X.shape
    state = np.empty(1, np.uint64)
    state[0] = seed
    for i in range(n):
        bag_count[i] = 0
    for i in range(m):
        r = _rand_below(state, n)
        bag_count[r] += 1
        in_bag[r] = True
    for f in range(p):
        k = 0
        for t in range(n):
            rid = sort_order[f, t]
            for _ in range(bag_count[rid]):
                lists[f, k] = rid
                k += 1
    feats = np.empty(p, np.int64)
    sel = np.empty(mtry, np.int64)
    cap = node_feature.shape[0]
    stack_node = np.empty(cap, np.int64)
    stack_lo = np.empty(cap, np.int64)
    stack_hi = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    stack_pos = np.empty(cap, np.int64)
    root_pos = 0
    for i in range(m):
        root_pos += y[lists[0, i]]
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = m
    stack_depth[0] = 0
    stack_pos[0] = root_pos
    top = 1
    n_nodes = 1
    while top > 0:
        top -= 1
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        depth = stack_depth[top]
        pos = stack_pos[top]
        nn = hi - lo
        node_n[node] = nn
        node_pos[node] = pos
        node_feature[node] = -1
        node_threshold[node] = 0.0
        node_left[node] = -1
        node_right[node] = -1
        node_decrease[node] = 0.0
        if pos == 0 or pos == nn or nn < 2 * min_leaf:
            continue
        if max_depth >= 0 and depth >= max_depth:
            continue
        for j in range(p):
            feats[j] = j
        for j in range(mtry):
            r = _rand_below(state, p - j)
            t = feats[j + r]
            feats[j + r] = feats[j]
            feats[j] = t
        for j in range(mtry):
            sel[j] = feats[j]
        sel.sort()
        bf, bthr, bdec, nl, lp = _best_split_sorted(X, y, lists, lo, hi, sel,
                                                    mtry, min_leaf, pos)
        if bf < 0:
            continue
        for f in range(p):
            a = 0
            b = nl
            for i in range(lo, hi):
                rid = lists[f, i]
                if X[rid, bf] <= bthr:
                    tmp[a] = rid
                    a += 1
                else:
                    tmp[b] = rid
                    b += 1
            for i in range(nn):
                lists[f, lo + i] = tmp[i]
        left_id = n_nodes
        right_id = n_nodes + 1
        n_nodes += 2
        node_feature[node] = bf
        node_threshold[node] = bthr
        node_decrease[node] = bdec
        node_left[node] = left_id
        node_right[node] = right_id
        stack_node[top] = right_id
        stack_lo[top] = lo + nl
        stack_hi[top] = hi
        stack_depth[top] = depth + 1
        stack_pos[top] = pos - lp
        top += 1
        stack_node[top] = left_id
        stack_lo[top] = lo
        stack_hi[top] = lo + nl
        stack_depth[top] = depth + 1
        stack_pos[top] = lp
        top += 1
    return n_nodes


@njit(cache=True, nogil=True)
def _predict_votes(X, feat, thr, left, right, nn, npos, offsets, out):
    n_rows = X.shape[0]
    n_trees = offsets.shape[0] - 1
    for r in range(n_rows):
        total = 0.0
        for t in range(n_trees):
            node = offsets[t]
            while feat[node] >= 0:
                if X[r, feat[node]] <= thr[node]:
                    node = left[node]
                else:
                    node = right[node]
            pos2 = 2 * npos[node]
            if pos2 > nn[node]:
                total += 1.0
            elif pos2 == nn[node]:
                total += 0.5
        out[r] = total / n_trees


@njit(cache=True, nogil=True)
def _credit(X, r, feat, thr, left, right, nn, npos, root, override_f, override_v, ylab):
    """1 for a correct tree vote, 0.5 for a tied leaf, 0 otherwise."""
    node = root
    while feat[node] >= 0:
        f = feat[node]
        xv = override_v if f == override_f else X[r, f]
        if xv <= thr[node]:
            node = left[node]
        else:
            node = right[node]
    pos2 = 2 * npos[node]
    if pos2 == nn[node]:
        return 0.5
    vote = 1 if pos2 > nn[node] else 0
    return 1.0 if vote == ylab else 0.0


@njit(cache=True, nogil=True)
def _oob_importance(X, y, feat, thr, left, right, nn, npos, offsets,
                    oob_flat, oob_off, perm_seeds, out):
    n_trees = offsets.shape[0] - 1
    p = X.shape[1]
    state = np.empty(1, np.uint64)
    for t in range(n_trees):
        a = oob_off[t]
        b = oob_off[t + 1]
        cnt = b - a
        if cnt == 0:
            for f in range(p):
                out[t, f] = np.nan
            continue
        root = offsets[t]
        base = 0.0
        for i in range(a, b):
            r = oob_flat[i]
            base += _credit(X, r, feat, thr, left, right, nn, npos, root,
                            np.int64(-1), 0.0, y[r])
        base /= cnt
        vals = np.empty(cnt, np.float64)
        for f in range(p):
            for i in range(cnt):
                vals[i] = X[oob_flat[a + i], f]
            state[0] = perm_seeds[t, f]
            for i in range(cnt - 1, 0, -1):
                j = _rand_below(state, i + 1)
                tv = vals[i]
                vals[i] = vals[j]
                vals[j] = tv
            acc = 0.0
            for i in range(cnt):
                r = oob_flat[a + i]
                acc += _credit(X, r, feat, thr, left, right, nn, npos, root,
                               np.int64(f), vals[i], y[r])
            out[t, f] = base - acc / cnt


# ======================================================================
# Configuration and tree/forest types
# ======================================================================

@dataclass(frozen=True)
class ForestConfig:
    n_trees: int
    mtry: int
    min_leaf: int = 1
    max_depth: int | None = None
    bootstrap_fraction: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mtry < 1:
            raise ValueError(f"mtry must be >= 1, got {self.mtry}")
        if self.min_leaf < 1:
            raise ValueError(f"min_leaf must be >= 1, got {self.min_leaf}")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError(f"max_depth must be >= 0 or None, got {self.max_depth}")
        if not 0.0 < self.bootstrap_fraction <= 1.0:
            raise ValueError(
                f"bootstrap_fraction must lie in (0, 1], got {self.bootstrap_fraction}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def to_json(self) -> dict:
        return {"n_trees": self.n_trees, "mtry": self.mtry, "min_leaf": self.min_leaf,
                "max_depth": self.max_depth, "bootstrap_fraction": self.bootstrap_fraction,
                "seed": self.seed}

    @classmethod
    def from_json(cls, doc: dict) -> "ForestConfig":
        return cls(n_trees=int(doc["n_trees"]), mtry=int(doc["mtry"]),
                   min_leaf=int(doc["min_leaf"]),
                   max_depth=None if doc["max_depth"] is None else int(doc["max_depth"]),
                   bootstrap_fraction=float(doc["bootstrap_fraction"]),
                   seed=int(doc["seed"]))


def default_mtry(n_features: int) -> int:
    """Classification convention: floor of the square root of the feature count."""
    return max(1, int(math.isqrt(n_features)))


@dataclass
class TreeNode:
    """Split node (feature set) or leaf (feature None) with its class counts."""

    n_node: int
    class_counts: tuple[int, int]  # (negative, positive)
    feature: str | None = None
    threshold: float | None = None
    impurity_decrease: float | None = None
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    decrease: float


@dataclass(frozen=True)
class TuningResult:
    best_n_trees: int
    table: tuple[tuple[int, float], ...]

    def to_json(self) -> dict:
        return {"best_n_trees": self.best_n_trees,
                "table": [[n, auc] for n, auc in self.table]}


class Forest:
    """Immutable trained ensemble; safe for concurrent prediction."""

    def __init__(self, config: ForestConfig, feature_names: tuple[str, ...],
                 n_training_rows: int, node_feature, node_threshold, node_left,
                 node_right, node_n, node_pos, node_decrease, offsets,
                 oob: tuple[np.ndarray, ...]):
        self.config = config
        self.feature_names = tuple(feature_names)
        self.n_training_rows = n_training_rows
        self._feat = node_feature
        self._thr = node_threshold
        self._left = node_left
        self._right = node_right
        self._n = node_n
        self._pos = node_pos
        self._dec = node_decrease
        self._offsets = offsets
        self._oob = tuple(oob)

    @property
    def n_trees(self) -> int:
        return len(self._offsets) - 1

    @property
    def oob_mask(self) -> tuple[np.ndarray, ...]:
        """Per-tree record indices left out of that tree's bootstrap."""
        return self._oob

    def oob_indices(self, t: int) -> np.ndarray:
        return self._oob[t]

    def tree(self, t: int) -> TreeNode:
        """Materialize tree t as nested nodes."""
        lo, hi = self._offsets[t], self._offsets[t + 1]
        nodes = [TreeNode(n_node=int(self._n[i]),
                          class_counts=(int(self._n[i] - self._pos[i]), int(self._pos[i])))
                 for i in range(lo, hi)]
        for i in range(lo, hi):
            if self._feat[i] >= 0:
                node = nodes[i - lo]
                node.feature = self.feature_names[self._feat[i]]
                node.threshold = float(self._thr[i])
                node.impurity_decrease = float(self._dec[i])
                node.left = nodes[self._left[i] - lo]
                node.right = nodes[self._right[i] - lo]
        return nodes[0]

    @property
    def trees(self) -> list[TreeNode]:
        return [self.tree(t) for t in range(self.n_trees)]


# ======================================================================
# Core operations
# ======================================================================

def gini_impurity(counts) -> float:
    """Two-class Gini impurity 1 - sum of squared class proportions."""
    if len(counts) != 2:
        raise ValueError(f"expected a pair of class counts, got {len(counts)} values")
    a, b = counts
    if a < 0 or b < 0:
        raise ValueError(f"class counts must be non-negative, got {(a, b)}")
    n = a + b
    if n == 0:
        raise ValueError("empty node has no impurity")
    pa = a / n
    pb = b / n
    return 1.0 - pa * pa - pb * pb


def _check_matrix_labels(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"feature matrix must be 2-dimensional, got shape {X.shape}")
    y = np.ascontiguousarray(y)
    if y.ndim != 1 or y.size != X.shape[0]:
        raise ValueError(f"labels must be a vector of length {X.shape[0]}")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be 0/1")
    if np.isnan(X).any():
        raise ValueError("feature matrix must not contain NaN; impute first")
    return X, y.astype(np.int64)


def best_split(X, y, candidate_features=None, min_leaf: int = 1):
    """Exhaustive best split over the candidate features, or None.

    Thresholds sit at lower + half the gap between consecutive distinct
    values; the maximizer of the weighted impurity decrease wins, with ties
    resolved toward the lower feature index, then the lower threshold.
    """
    X, y = _check_matrix_labels(X, y)
    n, p = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 rows, got {n}")
    if min_leaf < 1:
        raise ValueError(f"min_leaf must be >= 1, got {min_leaf}")
    if candidate_features is None:
        feats = np.arange(p, dtype=np.int64)
    else:
        feats = np.unique(np.asarray(candidate_features, dtype=np.int64))
        if feats.size == 0:
            raise ValueError("candidate feature set must be non-empty")
        if feats.min() < 0 or feats.max() >= p:
            raise ValueError(f"candidate features must lie in [0, {p})")
    idx = np.arange(n, dtype=np.int64)
    vals = np.empty(n, dtype=np.float64)
    f, thr, dec = _best_split_kernel(X, y, idx, 0, n, feats, feats.size,
                                     min_leaf, vals)
    if f < 0:
        return None
    return Split(feature=int(f), threshold=float(thr), decrease=float(dec))


def _tree_seed(config_seed: int, tree_index: int) -> np.uint64:
    return np.random.SeedSequence((config_seed, tree_index)).generate_state(1, np.uint64)[0]


def _presort(X) -> np.ndarray:
    """(p, n) argsort of every feature column, computed once per forest.

    Only the value order matters downstream; order within ties never reaches
    a split decision, so the sort kind is free to change.
    """
    return np.ascontiguousarray(np.argsort(X, axis=0).T)


def _build_arrays(X, y, config: ForestConfig, seed: np.uint64, sort_order):
    n, p = X.shape
    m = math.ceil(config.bootstrap_fraction * n)
    cap = max(2 * m, 2)
    feat = np.empty(cap, np.int64)
    thr = np.empty(cap, np.float64)
    left = np.empty(cap, np.int64)
    right = np.empty(cap, np.int64)
    nn = np.empty(cap, np.int64)
    npos = np.empty(cap, np.int64)
    dec = np.empty(cap, np.float64)
    in_bag = np.zeros(n, np.bool_)
    lists = np.empty((p, m), np.int64)
    tmp = np.empty(m, np.int64)
    bag_count = np.empty(n, np.int64)
    maxd = -1 if config.max_depth is None else config.max_depth
    n_nodes = _build_tree(X, y, seed, m, config.mtry, config.min_leaf, maxd,
                          feat, thr, left, right, nn, npos, dec, in_bag,
                          sort_order, lists, tmp, bag_count)
    oob = np.flatnonzero(~in_bag)
    return (feat[:n_nodes].copy(), thr[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), nn[:n_nodes].copy(), npos[:n_nodes].copy(),
            dec[:n_nodes].copy(), oob)


def _validate_training_inputs(X, y, config: ForestConfig):
    X, y = _check_matrix_labels(X, y)
    n, p = X.shape
    if n < 2:
        raise ValueError(f"need at least 2 training rows, got {n}")
    if p < 1:
        raise ValueError("need at least 1 feature")
    if config.mtry > p:
        raise ValueError(f"mtry={config.mtry} exceeds the feature count {p}")
    return X, y


def train_tree(X, y, config: ForestConfig, stream_seed=None) -> tuple[TreeNode, np.ndarray]:
    """One tree from one bootstrap; returns (root node, out-of-bag indices)."""
    X, y = _validate_training_inputs(X, y, config)
    seed = _tree_seed(config.seed, 0) if stream_seed is None else np.uint64(stream_seed)
    feat, thr, left, right, nn, npos, dec, oob = _build_arrays(X, y, config, seed,
                                                              _presort(X))
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    nodes = [TreeNode(n_node=int(nn[i]), class_counts=(int(nn[i] - npos[i]), int(npos[i])))
             for i in range(len(feat))]
    for i in range(len(feat)):
        if feat[i] >= 0:
            nodes[i].feature = names[feat[i]]
            nodes[i].threshold = float(thr[i])
            nodes[i].impurity_decrease = float(dec[i])
            nodes[i].left = nodes[left[i]]
            nodes[i].right = nodes[right[i]]
    return nodes[0], oob


def train_forest(X, y, feature_names, config: ForestConfig, workers: int = 1) -> Forest:
    """Train config.n_trees trees from per-tree derived seeds.

    The result is byte-identical for any worker count because every tree's
    randomness comes only from (config.seed, tree index) and trees are
    assembled in index order.
    """
    X, y = _validate_training_inputs(X, y, config)
    feature_names = tuple(feature_names)
    if len(feature_names) != X.shape[1]:
        raise ValueError(
            f"got {len(feature_names)} feature names for {X.shape[1]} matrix columns")
    seeds = [_tree_seed(config.seed, t) for t in range(config.n_trees)]
    sort_order = _presort(X)

    def build(t: int):
        return _build_arrays(X, y, config, seeds[t], sort_order)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(build, range(config.n_trees)))
    else:
        parts = [build(t) for t in range(config.n_trees)]

    sizes = [p[0].size for p in parts]
    offsets = np.zeros(config.n_trees + 1, np.int64)
    np.cumsum(sizes, out=offsets[1:])
    feat = np.concatenate([p[0] for p in parts])
    thr = np.concatenate([p[1] for p in parts])
    left = np.concatenate([p[2] for p in parts])
    right = np.concatenate([p[3] for p in parts])
    nn = np.concatenate([p[4] for p in parts])
    npos = np.concatenate([p[5] for p in parts])
    dec = np.concatenate([p[6] for p in parts])
    for t in range(config.n_trees):
        lo, hi = offsets[t], offsets[t + 1]
        seg = slice(lo, hi)
        internal = feat[seg] >= 0
        left[seg][internal] += lo
        right[seg][internal] += lo
    oob = tuple(p[7] for p in parts)
    return Forest(config, feature_names, X.shape[0], feat, thr, left, right,
                  nn, npos, dec, offsets, oob)


def _record_to_row(forest: Forest, record: dict) -> np.ndarray:
    unknown = set(record) - set(forest.feature_names)
    if unknown:
        raise ValueError(f"unknown feature name(s): {sorted(unknown)}")
    missing = set(forest.feature_names) - set(record)
    if missing:
        raise ValueError(f"record is missing trained feature(s): {sorted(missing)}")
    return np.array([[float(record[name]) for name in forest.feature_names]])


def predict_proba(forest: Forest, records):
    """Fraction of trees voting positive; tied leaves contribute 0.5.

    Accepts a dict keyed by feature name (returns a float), a single feature
    vector, or a matrix (returns a vector of vote fractions).
    """
    if isinstance(records, dict):
        votes = np.empty(1)
        _predict_votes(_record_to_row(forest, records), forest._feat, forest._thr,
                       forest._left, forest._right, forest._n, forest._pos,
                       forest._offsets, votes)
        return float(votes[0])
    X = np.ascontiguousarray(records, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != len(forest.feature_names):
        raise ValueError(
            f"expected {len(forest.feature_names)} feature columns, got shape {X.shape}")
    if np.isnan(X).any():
        raise ValueError("prediction input must not contain NaN; impute first")
    votes = np.empty(X.shape[0])
    _predict_votes(X, forest._feat, forest._thr, forest._left, forest._right,
                   forest._n, forest._pos, forest._offsets, votes)
    return float(votes[0]) if single else votes


def gini_importance(forest: Forest) -> dict[str, float]:
    """Bootstrap-weighted impurity decrease per feature, averaged over trees.

    Each split contributes (n_node / n_root) times its weighted decrease.
    """
    p = len(forest.feature_names)
    imp = np.zeros(p)
    for t in range(forest.n_trees):
        lo, hi = forest._offsets[t], forest._offsets[t + 1]
        seg = slice(lo, hi)
        internal = forest._feat[seg] >= 0
        root_n = forest._n[lo]
        contrib = (forest._n[seg][internal] / root_n) * forest._dec[seg][internal]
        np.add.at(imp, forest._feat[seg][internal], contrib)
    imp /= forest.n_trees
    return dict(zip(forest.feature_names, imp.tolist()))


def permutation_importance(forest: Forest, X, y, seed: int) -> dict[str, float]:
    """Mean out-of-bag accuracy drop per feature when its values are shuffled.

    X and y must be the training data the forest was grown on (the stored
    out-of-bag index sets refer to its rows).  Trees with an empty
    out-of-bag set are skipped.
    """
    X, y = _check_matrix_labels(X, y)
    if X.shape[0] != forest.n_training_rows or X.shape[1] != len(forest.feature_names):
        raise ValueError(
            f"expected the training matrix of shape "
            f"({forest.n_training_rows}, {len(forest.feature_names)}), got {X.shape}")
    if all(o.size == 0 for o in forest._oob):
        raise ValueError("every tree has an empty out-of-bag set")
    p = len(forest.feature_names)
    oob_off = np.zeros(forest.n_trees + 1, np.int64)
    np.cumsum([o.size for o in forest._oob], out=oob_off[1:])
    oob_flat = np.concatenate([o for o in forest._oob]) if oob_off[-1] else np.empty(0, np.int64)
    perm_seeds = np.empty((forest.n_trees, p), np.uint64)
    for t in range(forest.n_trees):
        for f in range(p):
            perm_seeds[t, f] = np.random.SeedSequence((seed, t, f)).generate_state(
                1, np.uint64)[0]
    out = np.empty((forest.n_trees, p))
    _oob_importance(X, y, forest._feat, forest._thr, forest._left, forest._right,
                    forest._n, forest._pos, forest._offsets, oob_flat, oob_off,
                    perm_seeds, out)
    means = np.nanmean(out, axis=0)
    return dict(zip(forest.feature_names, means.tolist()))


def tune_num_trees(X, y, feature_names, config: ForestConfig, *,
                   low: int = 500, high: int = 1000, step: int = 100,
                   inner_folds: int = 5) -> TuningResult:
    """Pick the tree count with the best inner-CV AUC; ties go to the smallest.

    The grid is {low, low+step, ..., high}; all other settings come from
    ``config``, whose seed also derives the fold split and per-candidate
    forest seeds.
    """
    candidates = list(range(low, high + 1, step))
    if not candidates:
        raise ValueError(f"empty tuning grid for low={low}, high={high}, step={step}")
    X, y = _validate_training_inputs(X, y, config)
    folds = stratified_kfold(y, inner_folds, np.random.SeedSequence(
        (config.seed, _TUNE_SALT, 0)))
    table = []
    best_n = candidates[0]
    best_mean = -math.inf
    for ci, cand in enumerate(candidates):
        aucs = []
        for f in range(folds.k):
            tr = folds.train_indices(f)
            te = folds.test_indices(f)
            fold_seed = int(np.random.SeedSequence(
                (config.seed, _TUNE_SALT, 1 + ci, f)).generate_state(1, np.uint64)[0])
            cfg = replace(config, n_trees=cand, seed=fold_seed)
            fo = train_forest(X[tr], y[tr], feature_names, cfg)
            votes = predict_proba(fo, X[te])
            aucs.append(auc_trapezoid(roc_curve(votes, y[te])))
        mean = float(np.mean(aucs))
        table.append((cand, mean))
        if mean > best_mean:
            best_n, best_mean = cand, mean
    return TuningResult(best_n_trees=best_n, table=tuple(table))


# ======================================================================
# Serialization
# ======================================================================

def _node_to_json(forest: Forest, t: int) -> dict:
    lo, hi = forest._offsets[t], forest._offsets[t + 1]
    docs: list[dict] = [None] * (hi - lo)
    for i in range(hi - 1, lo - 1, -1):
        nn = int(forest._n[i])
        pos = int(forest._pos[i])
        doc = {"n_node": nn, "class_counts": [nn - pos, pos]}
        if forest._feat[i] >= 0:
            doc["feature"] = forest.feature_names[forest._feat[i]]
            doc["threshold"] = float(forest._thr[i])
            doc["impurity_decrease"] = float(forest._dec[i])
            doc["left"] = docs[forest._left[i] - lo]
            doc["right"] = docs[forest._right[i] - lo]
        docs[i - lo] = doc
    return docs[0]


def forest_to_json(forest: Forest) -> dict:
    return {
        "schema_version": FOREST_SCHEMA_VERSION,
        "kind": "random_forest",
        "config": forest.config.to_json(),
        "feature_names": list(forest.feature_names),
        "n_training_rows": forest.n_training_rows,
        "trees": [
            {"oob_indices": forest._oob[t].tolist(), "root": _node_to_json(forest, t)}
            for t in range(forest.n_trees)
        ],
    }


def forest_from_json(doc: dict) -> Forest:
    if doc.get("kind") != "random_forest":
        raise ValueError("not a forest document")
    if doc.get("schema_version") != FOREST_SCHEMA_VERSION:
        raise ValueError(
            f"unsupported forest schema_version {doc.get('schema_version')!r}, "
            f"expected {FOREST_SCHEMA_VERSION}")
    config = ForestConfig.from_json(doc["config"])
    names = tuple(doc["feature_names"])
    name_index = {n: j for j, n in enumerate(names)}

    def count_nodes(node: dict) -> int:
        total = 0
        stack = [node]
        while stack:
            cur = stack.pop()
            total += 1
            if "feature" in cur:
                stack.append(cur["right"])
                stack.append(cur["left"])
        return total

    sizes = [count_nodes(t["root"]) for t in doc["trees"]]
    total = sum(sizes)
    feat = np.empty(total, np.int64)
    thr = np.zeros(total, np.float64)
    left = np.full(total, -1, np.int64)
    right = np.full(total, -1, np.int64)
    nn = np.empty(total, np.int64)
    npos = np.empty(total, np.int64)
    dec = np.zeros(total, np.float64)
    offsets = np.zeros(len(sizes) + 1, np.int64)
    np.cumsum(sizes, out=offsets[1:])
    oob = []
    for t, tree_doc in enumerate(doc["trees"]):
        oob.append(np.asarray(tree_doc["oob_indices"], dtype=np.int64))
        base = int(offsets[t])
        # ids assigned exactly like the builder: children allocated in pairs
        # at parent-processing time, left subtree processed first
        next_id = 1
        stack = [(tree_doc["root"], 0)]
        while stack:
            node, local = stack.pop()
            i = base + local
            neg, pos = node["class_counts"]
            if int(node["n_node"]) != int(neg) + int(pos):
                raise ValueError("node class counts do not sum to n_node")
            nn[i] = int(node["n_node"])
            npos[i] = int(pos)
            if "feature" in node:
                if node["feature"] not in name_index:
                    raise ValueError(f"split on unknown feature {node['feature']!r}")
                feat[i] = name_index[node["feature"]]
                thr[i] = float(node["threshold"])
                dec[i] = float(node["impurity_decrease"])
                l, r = next_id, next_id + 1
                next_id += 2
                left[i] = base + l
                right[i] = base + r
                stack.append((node["right"], r))
                stack.append((node["left"], l))
            else:
                feat[i] = -1
        if next_id != sizes[t]:
            raise ValueError("tree node count mismatch")
    return Forest(config, names, int(doc["n_training_rows"]),
                  feat, thr, left, right, nn, npos, dec, offsets, tuple(oob))


def save_forest(forest: Forest, path) -> None:
    from strokerf.serialize import write_canonical_json
    write_canonical_json(forest_to_json(forest), path)


def load_forest(path) -> Forest:
    from strokerf.serialize import read_json
    return forest_from_json(read_json(path))
