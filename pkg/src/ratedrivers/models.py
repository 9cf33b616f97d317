"""Rating classifiers trained on aspect-sentiment features, evaluated with Cohen's kappa.

Three families: multinomial logistic regression (Newton steps with Armijo
backtracking), bagged Gini decision trees with majority vote, and second-order
gradient boosting with exact or histogram split search.  Trees record per-node
cover (training rows) and per-split gain so downstream attribution can re-walk
them.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .features import DesignMatrix

LOGISTIC = "logistic"
RANDOM_FOREST = "random_forest"
GRADIENT_BOOSTING = "gradient_boosting"

KINDS = (LOGISTIC, RANDOM_FOREST, GRADIENT_BOOSTING)

MODEL_FORMAT_VERSION = 1

_MIN_GAIN = 1e-12

_DEFAULTS = {
    LOGISTIC: {"l2": 1.0, "tol": 1e-6, "max_iter": 500},
    RANDOM_FOREST: {"n_trees": 300, "max_depth": 12, "min_samples_leaf": 5},
    GRADIENT_BOOSTING: {
        "n_rounds": 200,
        "max_depth": 6,
        "learning_rate": 0.1,
        "reg_lambda": 1.0,
        "gamma_split": 0.0,
        "min_samples_leaf": 1,
        "split_mode": "exact",
        "n_bins": 256,
    },
}


class ModelsError(ValueError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str
    seed: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ModelsError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ModelsError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        p = self.resolved()
        if self.kind == LOGISTIC:
            if p["l2"] < 0:
                raise ModelsError("l2 must be >= 0")
            if p["tol"] <= 0 or p["max_iter"] < 1:
                raise ModelsError("tol must be > 0 and max_iter >= 1")
        elif self.kind == RANDOM_FOREST:
            if p["n_trees"] < 1 or p["max_depth"] < 1 or p["min_samples_leaf"] < 1:
                raise ModelsError("n_trees, max_depth and min_samples_leaf must be >= 1")
        else:
            if p["n_rounds"] < 0 or p["max_depth"] < 1 or p["min_samples_leaf"] < 1:
                raise ModelsError("n_rounds must be >= 0; max_depth, min_samples_leaf >= 1")
            if p["learning_rate"] <= 0:
                raise ModelsError("learning_rate must be > 0")
            if p["reg_lambda"] < 0 or p["gamma_split"] < 0:
                raise ModelsError("reg_lambda and gamma_split must be >= 0")
            if p["split_mode"] not in ("exact", "hist"):
                raise ModelsError(f"split_mode must be 'exact' or 'hist', got {p['split_mode']!r}")
            if p["n_bins"] < 2:
                raise ModelsError("n_bins must be >= 2")

    def resolved(self) -> dict:
        out = dict(_DEFAULTS[self.kind])
        out.update(self.params)
        return out


@dataclass
class Tree:
    """Flat binary tree; rows with x[feature] <= threshold go left."""

    feature: np.ndarray  # int32, -1 marks a leaf
    threshold: np.ndarray  # float64
    left: np.ndarray  # int32
    right: np.ndarray  # int32
    value: np.ndarray  # (n_nodes, n_outputs) leaf payloads
    cover: np.ndarray  # float64, training rows routed through the node
    gain: np.ndarray  # float64, split gain; 0 at leaves

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index for every row."""
        idx = np.zeros(X.shape[0], dtype=np.int32)
        active = self.feature[idx] >= 0
        while np.any(active):
            rows = np.nonzero(active)[0]
            nodes = idx[rows]
            go_left = X[rows, self.feature[nodes]] <= self.threshold[nodes]
            idx[rows] = np.where(go_left, self.left[nodes], self.right[nodes])
            active = self.feature[idx] >= 0
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self) -> dict:
        return {
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "value": self.value.tolist(),
            "cover": self.cover.tolist(),
            "gain": self.gain.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Tree":
        return cls(
            feature=np.asarray(data["feature"], dtype=np.int32),
            threshold=np.asarray(data["threshold"], dtype=np.float64),
            left=np.asarray(data["left"], dtype=np.int32),
            right=np.asarray(data["right"], dtype=np.int32),
            value=np.asarray(data["value"], dtype=np.float64),
            cover=np.asarray(data["cover"], dtype=np.float64),
            gain=np.asarray(data["gain"], dtype=np.float64),
        )


class _TreeBuilder:
    def __init__(self, n_outputs: int):
        self.feature: list[int] = []
        self.threshold: list[float] = []
        self.left: list[int] = []
        self.right: list[int] = []
        self.value: list[np.ndarray] = []
        self.cover: list[float] = []
        self.gain: list[float] = []
        self.n_outputs = n_outputs

    def add_node(self, value, cover) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(np.atleast_1d(np.asarray(value, dtype=np.float64)))
        self.cover.append(float(cover))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def set_split(self, idx, feature, threshold, gain, left, right) -> None:
        self.feature[idx] = int(feature)
        self.threshold[idx] = float(threshold)
        self.gain[idx] = float(gain)
        self.left[idx] = int(left)
        self.right[idx] = int(right)

    def build(self) -> Tree:
        return Tree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold, dtype=np.float64),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            value=np.vstack(self.value),
            cover=np.asarray(self.cover, dtype=np.float64),
            gain=np.asarray(self.gain, dtype=np.float64),
        )


def _midpoint(lo: float, hi: float) -> float:
    """Split threshold between two adjacent distinct values; never routes the
    upper value left even when the float midpoint rounds up to it."""
    mid = (lo + hi) / 2.0
    return float(lo) if mid >= hi else float(mid)


def _best_split_gini(x, y_idx, n_classes, min_leaf):
    """Best (gain, threshold) for one feature under weighted Gini decrease."""
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y_idx[order]
    n = xs.size
    boundaries = np.nonzero(xs[:-1] != xs[1:])[0]
    if boundaries.size == 0:
        return 0.0, 0.0
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    cum = np.cumsum(onehot, axis=0)
    total = cum[-1]
    n_left = boundaries + 1.0
    n_right = n - n_left
    valid = (n_left >= min_leaf) & (n_right >= min_leaf)
    if not np.any(valid):
        return 0.0, 0.0
    left = cum[boundaries]
    right = total - left
    gain = (
        (left**2).sum(axis=1) / n_left
        + (right**2).sum(axis=1) / n_right
        - float((total**2).sum()) / n
    )
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))  # first max = lowest threshold
    b = boundaries[best]
    return float(gain[best]), _midpoint(xs[b], xs[b + 1])


def _grow_gini_tree(X, y_idx, n_classes, max_depth, min_leaf, n_sub, rng):
    builder = _TreeBuilder(n_classes)
    n_features = X.shape[1]

    def node_value(rows):
        counts = np.bincount(y_idx[rows], minlength=n_classes)
        vote = np.zeros(n_classes)
        vote[int(np.argmax(counts))] = 1.0
        return vote, counts

    def build(rows, depth) -> int:
        vote, counts = node_value(rows)
        idx = builder.add_node(vote, rows.size)
        if depth >= max_depth or rows.size < 2 * min_leaf or counts.max() == rows.size:
            return idx
        if n_sub < n_features:
            feats = np.sort(rng.choice(n_features, size=n_sub, replace=False))
        else:
            feats = np.arange(n_features)
        best_gain, best_f, best_t = _MIN_GAIN, -1, 0.0
        for f in feats:
            gain, thr = _best_split_gini(X[rows, f], y_idx[rows], n_classes, min_leaf)
            if gain > best_gain:
                best_gain, best_f, best_t = gain, int(f), thr
        if best_f < 0:
            return idx
        mask = X[rows, best_f] <= best_t
        left = build(rows[mask], depth + 1)
        right = build(rows[~mask], depth + 1)
        builder.set_split(idx, best_f, best_t, best_gain, left, right)
        return idx

    build(np.arange(X.shape[0]), 0)
    return builder.build()


def _bin_features(X, n_bins):
    """Quantile cut points per feature plus the binned matrix (bin = count of cuts < x)."""
    cuts = []
    binned = np.empty(X.shape, dtype=np.int32)
    qs = np.linspace(0.0, 1.0, n_bins + 1)[1:-1]
    for f in range(X.shape[1]):
        c = np.unique(np.quantile(X[:, f], qs))
        cuts.append(c)
        binned[:, f] = np.searchsorted(c, X[:, f], side="left")
    return cuts, binned


def _second_order_gain(gl, hl, g, h, lam):
    gr = g - gl
    hr = h - hl
    return 0.5 * (gl**2 / (hl + lam) + gr**2 / (hr + lam) - g**2 / (h + lam))


def _best_split_boost_exact(x, g, h, lam, gamma_split, min_leaf):
    order = np.argsort(x, kind="stable")
    xs = x[order]
    n = xs.size
    boundaries = np.nonzero(xs[:-1] != xs[1:])[0]
    if boundaries.size == 0:
        return -np.inf, 0.0
    gl = np.cumsum(g[order])[boundaries]
    hl = np.cumsum(h[order])[boundaries]
    n_left = boundaries + 1
    valid = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not np.any(valid):
        return -np.inf, 0.0
    gain = _second_order_gain(gl, hl, g.sum(), h.sum(), lam) - gamma_split
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    b = boundaries[best]
    return float(gain[best]), _midpoint(xs[b], xs[b + 1])


def _best_split_boost_hist(xb, cuts, g, h, lam, gamma_split, min_leaf):
    if cuts.size == 0:
        return -np.inf, 0.0
    n_bins = cuts.size + 1
    counts = np.bincount(xb, minlength=n_bins)
    g_bin = np.bincount(xb, weights=g, minlength=n_bins)
    h_bin = np.bincount(xb, weights=h, minlength=n_bins)
    n_left = np.cumsum(counts)[:-1]
    gl = np.cumsum(g_bin)[:-1]
    hl = np.cumsum(h_bin)[:-1]
    n = xb.size
    valid = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not np.any(valid):
        return -np.inf, 0.0
    gain = _second_order_gain(gl, hl, g.sum(), h.sum(), lam) - gamma_split
    gain = np.where(valid, gain, -np.inf)
    best = int(np.argmax(gain))
    return float(gain[best]), float(cuts[best])


def _grow_boost_tree(X, g, h, params, binned=None, cuts=None):
    builder = _TreeBuilder(1)
    lam = params["reg_lambda"]
    gamma_split = params["gamma_split"]
    min_leaf = params["min_samples_leaf"]
    max_depth = params["max_depth"]
    n_features = X.shape[1]

    def build(rows, depth) -> int:
        g_sum = g[rows].sum()
        h_sum = h[rows].sum()
        idx = builder.add_node([-g_sum / (h_sum + lam)], rows.size)
        if depth >= max_depth or rows.size < 2 * min_leaf:
            return idx
        best_gain, best_f, best_t = _MIN_GAIN, -1, 0.0
        for f in range(n_features):
            if binned is None:
                gain, thr = _best_split_boost_exact(
                    X[rows, f], g[rows], h[rows], lam, gamma_split, min_leaf
                )
            else:
                gain, thr = _best_split_boost_hist(
                    binned[rows, f], cuts[f], g[rows], h[rows], lam, gamma_split, min_leaf
                )
            if gain > best_gain:
                best_gain, best_f, best_t = gain, f, thr
        if best_f < 0:
            return idx
        mask = X[rows, best_f] <= best_t
        left = build(rows[mask], depth + 1)
        right = build(rows[~mask], depth + 1)
        builder.set_split(idx, best_f, best_t, best_gain, left, right)
        return idx

    build(np.arange(X.shape[0]), 0)
    return builder.build()


@dataclass
class TrainedModel:
    kind: str
    classes: list[str]
    feature_names: list[str]
    spec: ClassifierSpec
    weights: np.ndarray | None = None  # logistic: (C, F)
    intercepts: np.ndarray | None = None  # logistic: (C,)
    trees: list[Tree] = field(default_factory=list)
    tree_class: list[int] = field(default_factory=list)  # boosting: class per tree
    base_scores: np.ndarray | None = None  # boosting: (C,)
    learning_rate: float = 1.0

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def is_tree_model(self) -> bool:
        return self.kind in (RANDOM_FOREST, GRADIENT_BOOSTING)


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _fit_logistic(X, y_idx, n_classes, params):
    n, n_f = X.shape
    Xa = np.hstack([X, np.ones((n, 1))])
    Y = np.zeros((n, n_classes))
    Y[np.arange(n), y_idx] = 1.0
    W = np.zeros((n_classes, n_f + 1))
    pen = np.ones_like(W)
    pen[:, -1] = 0.0  # intercept unpenalized
    l2, tol, max_iter = params["l2"], params["tol"], params["max_iter"]

    def objective(Wc):
        Z = Xa @ Wc.T
        Z = Z - Z.max(axis=1, keepdims=True)
        log_p = Z - np.log(np.exp(Z).sum(axis=1, keepdims=True))
        return float(-(Y * log_p).sum() / n + (l2 / (2 * n)) * ((Wc * pen) ** 2).sum())

    for _ in range(max_iter):
        P = _softmax(Xa @ W.T)
        G = (P - Y).T @ Xa / n + (l2 / n) * W * pen
        if np.abs(G).max() <= tol:
            break
        # Newton direction from the full softmax Hessian (small C*F problems)
        A = np.einsum("ic,if,ig->cfg", P, Xa, Xa)
        B = np.einsum("ic,if,id,ig->cfdg", P, Xa, P, Xa)
        d = n_classes * (n_f + 1)
        H = np.zeros((n_classes, n_f + 1, n_classes, n_f + 1))
        for c in range(n_classes):
            H[c, :, c, :] = A[c]
        H -= B
        H = H.reshape(d, d) / n
        H += (l2 / n) * np.diag((pen).reshape(-1))
        H += 1e-10 * np.eye(d)
        step = np.linalg.solve(H, G.reshape(-1)).reshape(W.shape)
        j0 = objective(W)
        slope = float((G * step).sum())
        t = 1.0
        while t > 1e-10:
            W_new = W - t * step
            if objective(W_new) <= j0 - 1e-4 * t * slope:
                break
            t /= 2
        W = W - t * step
    return W[:, :-1].copy(), W[:, -1].copy()


def train(matrix: DesignMatrix, spec: ClassifierSpec) -> TrainedModel:
    """Fit one classifier on a design matrix."""
    return train_arrays(
        matrix.X,
        matrix.labels,
        matrix.class_names,
        matrix.feature_names,
        spec,
    )


def train_arrays(X, labels, classes, feature_names, spec: ClassifierSpec) -> TrainedModel:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ModelsError("X must be a 2-D array")
    if not np.all(np.isfinite(X)):
        raise ModelsError("features contain non-finite values")
    if X.shape[0] < 10:
        raise ModelsError(f"need at least 10 rows to train, got {X.shape[0]}")
    class_index = {c: i for i, c in enumerate(classes)}
    y_idx = np.asarray([class_index[lbl] for lbl in labels], dtype=np.int64)
    present = np.unique(y_idx)
    if present.size < 2:
        raise ModelsError("training labels contain a single class")
    n_classes = len(classes)
    params = spec.resolved()

    if spec.kind == LOGISTIC:
        W, b = _fit_logistic(X, y_idx, n_classes, params)
        return TrainedModel(
            kind=spec.kind,
            classes=list(classes),
            feature_names=list(feature_names),
            spec=spec,
            weights=W,
            intercepts=b,
        )

    if spec.kind == RANDOM_FOREST:
        rng = np.random.default_rng(spec.seed)
        tree_seeds = rng.integers(0, 2**63 - 1, size=params["n_trees"])
        n_sub = max(1, int(round(math.sqrt(X.shape[1]))))
        trees = []
        for ts in tree_seeds:
            t_rng = np.random.default_rng(int(ts))
            rows = t_rng.integers(0, X.shape[0], size=X.shape[0])
            trees.append(
                _grow_gini_tree(
                    X[rows],
                    y_idx[rows],
                    n_classes,
                    params["max_depth"],
                    params["min_samples_leaf"],
                    n_sub,
                    t_rng,
                )
            )
        return TrainedModel(
            kind=spec.kind,
            classes=list(classes),
            feature_names=list(feature_names),
            spec=spec,
            trees=trees,
        )

    # gradient boosting
    priors = np.bincount(y_idx, minlength=n_classes) / y_idx.size
    base = np.log(np.clip(priors, 1e-12, None))
    margins = np.tile(base, (X.shape[0], 1))
    Y = np.zeros((X.shape[0], n_classes))
    Y[np.arange(X.shape[0]), y_idx] = 1.0
    binned, cuts = None, None
    if params["split_mode"] == "hist":
        cuts, binned = _bin_features(X, params["n_bins"])
    trees: list[Tree] = []
    tree_class: list[int] = []
    lr = params["learning_rate"]
    for _ in range(params["n_rounds"]):
        P = _softmax(margins)
        round_trees = []
        for c in range(n_classes):
            g = P[:, c] - Y[:, c]
            h = np.maximum(P[:, c] * (1.0 - P[:, c]), 1e-16)
            tree = _grow_boost_tree(X, g, h, params, binned=binned, cuts=cuts)
            round_trees.append(tree)
        for c, tree in enumerate(round_trees):
            margins[:, c] += lr * tree.predict(X)[:, 0]
            trees.append(tree)
            tree_class.append(c)
    return TrainedModel(
        kind=spec.kind,
        classes=list(classes),
        feature_names=list(feature_names),
        spec=spec,
        trees=trees,
        tree_class=tree_class,
        base_scores=base,
        learning_rate=lr,
    )


def margins(model: TrainedModel, X) -> np.ndarray:
    """Raw per-class scores: linear scores, vote fractions, or boosting margins."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ModelsError(
            f"feature count mismatch: model expects {model.n_features}, got {X.shape[1] if X.ndim == 2 else 'non-2D'}"
        )
    if model.kind == LOGISTIC:
        return X @ model.weights.T + model.intercepts
    if model.kind == RANDOM_FOREST:
        votes = np.zeros((X.shape[0], model.n_classes))
        for tree in model.trees:
            votes += tree.predict(X)
        return votes / len(model.trees)
    out = np.tile(model.base_scores, (X.shape[0], 1))
    for tree, c in zip(model.trees, model.tree_class):
        out[:, c] += model.learning_rate * tree.predict(X)[:, 0]
    return out


def predict(model: TrainedModel, X) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Class labels, per-class probabilities, and per-class raw margins."""
    raw = margins(model, X)
    if model.kind == RANDOM_FOREST:
        probs = raw  # vote fractions already sum to one
    else:
        probs = _softmax(raw)
    labels = [model.classes[i] for i in np.argmax(probs, axis=1)]
    return labels, probs, raw


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (C, C); rows true, cols predicted
    classes: list[str]

    @classmethod
    def from_labels(cls, y_true, y_pred, classes) -> "ConfusionMatrix":
        index = {c: i for i, c in enumerate(classes)}
        counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
        for t, p in zip(y_true, y_pred):
            counts[index[t], index[p]] += 1
        return cls(counts=counts, classes=list(classes))


def cohen_kappa(cm) -> float:
    """Chance-corrected agreement from a confusion matrix (rows true, cols predicted)."""
    counts = cm.counts if isinstance(cm, ConfusionMatrix) else np.asarray(cm, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ModelsError("confusion matrix is empty")
    p_o = np.trace(counts) / total
    p_e = float((counts.sum(axis=1) * counts.sum(axis=0)).sum()) / total**2
    if p_e >= 1.0:
        return 1.0 if p_o >= 1.0 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


@dataclass
class CvResult:
    fold_kappas: list[float]
    seed: int

    @property
    def mean_kappa(self) -> float:
        return float(np.mean(self.fold_kappas))


def stratified_folds(labels, folds: int, seed: int) -> np.ndarray:
    """Fold id per row; class proportions preserved to within one member."""
    labels = list(labels)
    if folds < 2:
        raise ModelsError(f"folds must be >= 2, got {folds}")
    rng = np.random.default_rng(seed)
    fold_of = np.full(len(labels), -1, dtype=np.int64)
    by_class: dict[str, list[int]] = {}
    for i, lbl in enumerate(labels):
        by_class.setdefault(lbl, []).append(i)
    for lbl in sorted(by_class):
        idx = np.asarray(by_class[lbl])
        if idx.size < folds:
            raise ModelsError(
                f"class {lbl!r} has {idx.size} members, fewer than {folds} folds"
            )
        rng.shuffle(idx)
        for pos, row in enumerate(idx):
            fold_of[row] = pos % folds
    return fold_of


def cross_validate(
    matrix: DesignMatrix, spec: ClassifierSpec, folds: int = 3, seed: int = 0
) -> CvResult:
    """Stratified k-fold Cohen's kappa for one classifier on one design matrix."""
    fold_of = stratified_folds(matrix.labels, folds, seed)
    labels = np.asarray(matrix.labels, dtype=object)
    kappas = []
    for f in range(folds):
        test = fold_of == f
        train_rows = ~test
        model = train_arrays(
            matrix.X[train_rows],
            list(labels[train_rows]),
            matrix.class_names,
            matrix.feature_names,
            spec,
        )
        preds, _, _ = predict(model, matrix.X[test])
        cm = ConfusionMatrix.from_labels(list(labels[test]), preds, matrix.class_names)
        kappas.append(cohen_kappa(cm))
    return CvResult(fold_kappas=kappas, seed=seed)


def cv_report_to_csv(rows: list[tuple[str, str, CvResult]], path) -> None:
    """Rows of (model name, scheme, result) to the cross-validation report CSV."""
    if not rows:
        raise ModelsError("no cross-validation results to write")
    n_folds = len(rows[0][2].fold_kappas)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["model", "scheme"] + [f"fold_{i + 1}" for i in range(n_folds)] + ["mean_kappa"]
        )
        for name, scheme, result in rows:
            writer.writerow(
                [name, scheme]
                + [f"{k:.4f}" for k in result.fold_kappas]
                + [f"{result.mean_kappa:.4f}"]
            )


def model_to_dict(model: TrainedModel) -> dict:
    out = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "classes": model.classes,
        "feature_names": model.feature_names,
        "spec": {"kind": model.spec.kind, "seed": model.spec.seed, "params": model.spec.params},
        "learning_rate": model.learning_rate,
    }
    if model.kind == LOGISTIC:
        out["weights"] = model.weights.tolist()
        out["intercepts"] = model.intercepts.tolist()
    else:
        out["trees"] = [t.to_dict() for t in model.trees]
        out["tree_class"] = list(model.tree_class)
        out["base_scores"] = None if model.base_scores is None else model.base_scores.tolist()
    return out


def model_from_dict(data: dict) -> TrainedModel:
    if data.get("format_version") != MODEL_FORMAT_VERSION:
        raise ModelsError(f"unsupported model format {data.get('format_version')!r}")
    spec = ClassifierSpec(
        kind=data["spec"]["kind"], seed=data["spec"]["seed"], params=data["spec"]["params"]
    )
    model = TrainedModel(
        kind=data["kind"],
        classes=data["classes"],
        feature_names=data["feature_names"],
        spec=spec,
        learning_rate=data.get("learning_rate", 1.0),
    )
    if model.kind == LOGISTIC:
        model.weights = np.asarray(data["weights"], dtype=np.float64)
        model.intercepts = np.asarray(data["intercepts"], dtype=np.float64)
    else:
        model.trees = [Tree.from_dict(t) for t in data["trees"]]
        model.tree_class = list(data["tree_class"])
        if data.get("base_scores") is not None:
            model.base_scores = np.asarray(data["base_scores"], dtype=np.float64)
    return model


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
