"""Global gain importances and exact per-class Shapley attributions for tree models.

The Shapley computation is the path-dependent polynomial-time algorithm: it
tracks, along each root-to-leaf path, the proportion of feature subsets that
flow hot (following the input) and cold (following training cover weights),
so the attributions match a brute-force enumeration over feature subsets with
cover-weighted conditional expectations.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .models import (
    GRADIENT_BOOSTING,
    TrainedModel,
    Tree,
    margins,
)


class ExplainError(ValueError):
    pass


@dataclass
class GainImportance:
    gains: dict[str, float]
    feature_names: list[str]

    def ranked(self) -> list[tuple[str, float]]:
        """Features by descending total gain; ties by feature index."""
        order = sorted(
            range(len(self.feature_names)),
            key=lambda i: (-self.gains[self.feature_names[i]], i),
        )
        return [(self.feature_names[i], self.gains[self.feature_names[i]]) for i in order]

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["feature", "gain"])
            for name, gain in self.ranked():
                writer.writerow([name, f"{gain:.6f}"])


def gain_importance(model: TrainedModel) -> GainImportance:
    """Total split gain per feature over every tree in the ensemble."""
    if not model.is_tree_model():
        raise ExplainError(f"gain importance needs a tree model, got kind {model.kind!r}")
    totals = np.zeros(model.n_features)
    for tree in model.trees:
        internal = tree.feature >= 0
        np.add.at(totals, tree.feature[internal], tree.gain[internal])
    gains = {name: float(totals[i]) for i, name in enumerate(model.feature_names)}
    return GainImportance(gains=gains, feature_names=list(model.feature_names))


def _validate_cover(tree: Tree) -> None:
    if tree.cover.size == 0 or tree.cover[0] <= 0:
        raise ExplainError("tree is missing cover statistics")
    internal = np.nonzero(tree.feature >= 0)[0]
    for idx in internal:
        if tree.cover[tree.left[idx]] <= 0 or tree.cover[tree.right[idx]] <= 0:
            raise ExplainError("tree has a zero-cover child; cover statistics are unusable")


def tree_expected_value(tree: Tree) -> np.ndarray:
    """Cover-weighted mean output of a single tree."""
    leaves = tree.feature < 0
    weights = tree.cover[leaves] / tree.cover[0]
    return weights @ tree.value[leaves]


def _extend(m, pz, po, pi):
    length = len(m)
    m = [e.copy() for e in m]
    m.append([pi, pz, po, 1.0 if length == 0 else 0.0])
    for i in range(length - 1, -1, -1):
        m[i + 1][3] += po * m[i][3] * (i + 1) / (length + 1)
        m[i][3] = pz * m[i][3] * (length - i) / (length + 1)
    return m


def _unwind(m, i):
    length = len(m)
    one = m[i][2]
    zero = m[i][1]
    tail = m[length - 1][3]
    out = [e.copy() for e in m[: length - 1]]
    if one != 0.0:
        for j in range(length - 2, -1, -1):
            kept = out[j][3]
            out[j][3] = tail * length / ((j + 1) * one)
            tail = kept - out[j][3] * zero * (length - 1 - j) / length
    else:
        for j in range(length - 2, -1, -1):
            out[j][3] = out[j][3] * length / (zero * (length - 1 - j))
    for j in range(i, length - 1):
        out[j][0], out[j][1], out[j][2] = m[j + 1][0], m[j + 1][1], m[j + 1][2]
    return out


def _unwound_sum(m, i):
    return sum(e[3] for e in _unwind(m, i))


def shap_single_tree(tree: Tree, x: np.ndarray, n_features: int) -> np.ndarray:
    """Shapley values of one tree's output for one row; shape (n_features, n_outputs)."""
    _validate_cover(tree)
    phi = np.zeros((n_features, tree.value.shape[1]))

    def recurse(node, m, pz, po, pi):
        m = _extend(m, pz, po, pi)
        if tree.feature[node] < 0:
            for i in range(1, len(m)):
                w = _unwound_sum(m, i)
                phi[m[i][0]] += w * (m[i][2] - m[i][1]) * tree.value[node]
            return
        f = int(tree.feature[node])
        if x[f] <= tree.threshold[node]:
            hot, cold = int(tree.left[node]), int(tree.right[node])
        else:
            hot, cold = int(tree.right[node]), int(tree.left[node])
        iz, io = 1.0, 1.0
        k = next((j for j in range(len(m)) if m[j][0] == f), None)
        if k is not None:
            iz, io = m[k][1], m[k][2]
            m = _unwind(m, k)
        r = tree.cover[node]
        recurse(hot, m, iz * tree.cover[hot] / r, io, f)
        recurse(cold, m, iz * tree.cover[cold] / r, 0.0, f)

    recurse(0, [], 1.0, 1.0, -1)
    return phi


def tree_shap(model: TrainedModel, row) -> tuple[np.ndarray, np.ndarray]:
    """Per-class Shapley values for one row on the raw margin scale.

    Returns (phi, base) with phi of shape (n_classes, n_features); for every
    class, phi.sum() + base equals that class's raw margin.
    """
    if not model.is_tree_model():
        raise ExplainError(f"tree SHAP needs a tree model, got kind {model.kind!r}")
    x = np.asarray(row, dtype=np.float64).reshape(-1)
    if x.size != model.n_features:
        raise ExplainError(
            f"feature count mismatch: model expects {model.n_features}, got {x.size}"
        )
    n_c, n_f = model.n_classes, model.n_features
    phi = np.zeros((n_c, n_f))
    if model.kind == GRADIENT_BOOSTING:
        base = model.base_scores.astype(np.float64).copy()
        for tree, c in zip(model.trees, model.tree_class):
            phi[c] += model.learning_rate * shap_single_tree(tree, x, n_f)[:, 0]
            base[c] += model.learning_rate * float(tree_expected_value(tree)[0])
        return phi, base
    # random forest: every tree votes a class distribution; average them
    base = np.zeros(n_c)
    for tree in model.trees:
        phi += shap_single_tree(tree, x, n_f).T
        base += tree_expected_value(tree)
    return phi / len(model.trees), base / len(model.trees)


@dataclass
class ShapMatrix:
    values: np.ndarray  # (n_classes, n_rows, n_features)
    base: np.ndarray  # (n_classes,)
    classes: list[str]
    feature_names: list[str]

    def for_class(self, label: str) -> np.ndarray:
        if label not in self.classes:
            raise ExplainError(f"unknown class {label!r}")
        return self.values[self.classes.index(label)]


def shap_matrix(model: TrainedModel, X) -> ShapMatrix:
    """Row-by-row Shapley attributions for a whole matrix."""
    X = np.asarray(X, dtype=np.float64)
    values = np.zeros((model.n_classes, X.shape[0], model.n_features))
    base = None
    for i in range(X.shape[0]):
        phi, base = tree_shap(model, X[i])
        values[:, i, :] = phi
    if base is None:  # no rows; still expose base values
        zero = np.zeros(model.n_features)
        _, base = tree_shap(model, zero)
    return ShapMatrix(
        values=values,
        base=np.asarray(base),
        classes=list(model.classes),
        feature_names=list(model.feature_names),
    )


def local_accuracy_error(model: TrainedModel, X, shap: ShapMatrix) -> float:
    """Largest |sum(phi) + base - margin| over rows and classes."""
    raw = margins(model, X)
    recon = shap.values.sum(axis=2) + shap.base[:, None]
    return float(np.abs(recon.T - raw).max()) if raw.size else 0.0


@dataclass
class FeatureSummary:
    feature_index: int
    name: str
    rank: int
    mean_abs: float
    points: list[tuple[float, float]]  # (shap value, feature value quantile rank)


def shap_summary(shap: ShapMatrix, label: str, feature_values) -> list[FeatureSummary]:
    """Per-feature ranking and beeswarm points for one class.

    Features are ordered by descending mean |phi| (ties by feature index);
    each point pairs a row's Shapley value with the quantile rank of its
    feature value, which drives the beeswarm color scale.
    """
    phi = shap.for_class(label)
    X = np.asarray(feature_values, dtype=np.float64)
    if X.shape != phi.shape:
        raise ExplainError(f"feature values shape {X.shape} != shap shape {phi.shape}")
    mean_abs = np.abs(phi).mean(axis=0) if phi.size else np.zeros(phi.shape[1])
    order = sorted(range(len(shap.feature_names)), key=lambda i: (-mean_abs[i], i))
    out = []
    for rank, i in enumerate(order):
        col = X[:, i]
        if col.size > 1:
            quantiles = (rankdata(col, method="average") - 1.0) / (col.size - 1.0)
        else:
            quantiles = np.full(col.size, 0.5)
        points = [(float(phi[r, i]), float(quantiles[r])) for r in range(col.size)]
        out.append(
            FeatureSummary(
                feature_index=i,
                name=shap.feature_names[i],
                rank=rank,
                mean_abs=float(mean_abs[i]),
                points=points,
            )
        )
    return out


def shap_summary_to_csv(summaries_by_class: dict[str, list[FeatureSummary]], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "feature", "rank", "mean_abs_shap"])
        for label, summaries in summaries_by_class.items():
            for s in summaries:
                writer.writerow([label, s.name, s.rank, f"{s.mean_abs:.6f}"])


def shap_rows_to_csv(shap: ShapMatrix, row_ids, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row_id", "class"] + list(shap.feature_names) + ["base"])
        for c, label in enumerate(shap.classes):
            for r, rid in enumerate(row_ids):
                writer.writerow(
                    [rid, label]
                    + [f"{v:.6f}" for v in shap.values[c, r]]
                    + [f"{shap.base[c]:.6f}"]
                )
