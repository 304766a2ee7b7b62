"""Standardization, linear SVM / KNN classifiers, stratified CV and F1 scoring."""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DataError
from .generators import make_rng

logger = logging.getLogger(__name__)

# columns of FeatureVector holding raw counts (log1p-transformed by default)
COUNT_COLUMNS = ("num_nodes", "num_edges", "max_degree", "num_triangles")
SIZE_COLUMNS = ("num_nodes", "num_edges")


@dataclass
class LabeledDataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: list
    feature_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise DataError("features must be a 2-D array with one row per label")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DataError("label index outside class_names")
        if not np.all(np.isfinite(self.features)):
            raise DataError("features contain non-finite values")


def prepare_features(matrix, names, log_counts=True, drop_size=False):
    """Optionally log1p the count columns and drop node/edge counts.

    Returns ``(matrix, names)`` with the selected columns.
    """
    X = np.array(matrix, dtype=np.float64)
    names = list(names)
    if log_counts:
        for c in COUNT_COLUMNS:
            if c in names:
                j = names.index(c)
                X[:, j] = np.log1p(X[:, j])
    if drop_size:
        keep = [j for j, c in enumerate(names) if c not in SIZE_COLUMNS]
        X = X[:, keep]
        names = [names[j] for j in keep]
    return X, names


# ---------------------------------------------------------- standardization


@dataclass(frozen=True)
class StandardizationParams:
    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray


def standardize_fit(train_rows):
    X = np.asarray(train_rows, dtype=np.float64)
    if X.ndim != 2 or len(X) == 0:
        raise DataError("cannot fit standardization on an empty training set")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return StandardizationParams(mean=mean, std=std, constant=constant)


def standardize_apply(params, rows):
    """Z-score each column; constant columns pass through unchanged."""
    X = np.asarray(rows, dtype=np.float64)
    out = X.copy()
    live = ~params.constant
    out[:, live] = (X[:, live] - params.mean[live]) / params.std[live]
    return out


# -------------------------------------------------------------- splitting


def stratified_kfold(labels, k=10, seed=0):
    """Fold index per row.

    Each class is shuffled with a seeded generator and dealt round-robin
    to the folds; the dealing position carries over between classes so
    overall fold sizes stay balanced too. ``k`` is reduced to the smallest
    class size (with a warning) when some class is too small.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise DataError("need at least 2 folds")
    classes, counts = np.unique(labels, return_counts=True)
    if counts.min() < k:
        logger.warning("smallest class has %d members; reducing folds from %d", counts.min(), k)
        k = int(counts.min())
        if k < 2:
            raise DataError("a class has fewer than 2 members; cannot stratify")
    rng = make_rng(seed)
    folds = np.empty(len(labels), dtype=np.int64)
    offset = 0
    for c in classes:
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(len(members))]
        folds[members] = (offset + np.arange(len(members))) % k
        offset = (offset + len(members)) % k
    return folds


# ------------------------------------------------------------ classifiers


@dataclass(frozen=True)
class ClassifierSpec:
    kind: str = "svm"
    C: float = 1.0
    epochs: int = 200
    k_neighbors: int = 5

    def __post_init__(self):
        if self.kind not in ("svm", "knn"):
            raise DataError(f"unknown classifier {self.kind!r}")

    def to_dict(self):
        return {"kind": self.kind, "C": self.C, "epochs": self.epochs, "k_neighbors": self.k_neighbors}

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: d[k] for k in ("kind", "C", "epochs", "k_neighbors") if k in d})


@dataclass
class LinearSVM:
    """One-vs-rest linear SVM; ``W`` has one row per class, last column is the bias."""

    W: np.ndarray
    n_classes: int

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        return X @ self.W[:, :-1].T + self.W[:, -1]

    def predict(self, X):
        # argmax returns the first maximum: ties go to the lowest class index
        return np.argmax(self.decision_function(X), axis=1)


def svm_objective(w, Xa, y_pm, lam):
    """Regularized mean hinge loss of one binary problem (bias folded into ``Xa``)."""
    margins = y_pm * (Xa @ w)
    return 0.5 * lam * float(w @ w) + float(np.mean(np.maximum(0.0, 1.0 - margins)))


def _pegasos(Xa, y_pm, lam, epochs, rng):
    order = np.concatenate([rng.permutation(len(Xa)) for _ in range(epochs)]).astype(np.int64)
    return kernels.pegasos_epochs(np.ascontiguousarray(Xa), np.ascontiguousarray(y_pm), lam, order)


def train_linear_svm(X, y, C=1.0, epochs=200, seed=0, n_classes=None):
    """One-vs-rest hinge-loss SVM trained by stochastic subgradient descent.

    Step size is ``1 / (lam * t)`` with ``lam = 1 / (C * r)``. The bias is
    an extra constant feature and is regularized with the weights. For each
    class the lowest-objective candidate among the last iterate, the
    running average and the zero vector is kept.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise DataError("SVM training needs at least two classes")
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    r = len(X)
    lam = 1.0 / (C * r)
    Xa = np.hstack([X, np.ones((r, 1))])
    rng = make_rng(seed)
    W = np.zeros((n_classes, Xa.shape[1]))
    for c in range(n_classes):
        y_pm = np.where(y == c, 1.0, -1.0)
        if not np.any(y == c):
            W[c, -1] = -1.0
            continue
        last, avg = _pegasos(Xa, y_pm, lam, epochs, rng)
        candidates = [last, avg, np.zeros_like(last)]
        W[c] = min(candidates, key=lambda w: svm_objective(w, Xa, y_pm, lam))
    return LinearSVM(W=W, n_classes=n_classes)


@dataclass
class KNN:
    X: np.ndarray
    y: np.ndarray
    k_neighbors: int
    n_classes: int

    def predict(self, rows):
        rows = np.asarray(rows, dtype=np.float64)
        d2 = ((rows[:, None, :] - self.X[None, :, :]) ** 2).sum(axis=2)
        out = np.empty(len(rows), dtype=np.int64)
        for i, row in enumerate(d2):
            nearest = np.argsort(row, kind="stable")[: self.k_neighbors]
            votes = np.bincount(self.y[nearest], minlength=self.n_classes)
            winners = np.flatnonzero(votes == votes.max())
            if len(winners) == 1:
                out[i] = winners[0]
            else:
                # tie: the class of the nearest neighbor among the tied classes
                out[i] = next(self.y[j] for j in nearest if self.y[j] in winners)
        return out


def train_knn(X, y, k_neighbors=5, n_classes=None):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise DataError("KNN needs a non-empty training set")
    if k_neighbors > len(X):
        raise DataError(f"k_neighbors={k_neighbors} exceeds training size {len(X)}")
    n_classes = int(y.max()) + 1 if n_classes is None else n_classes
    return KNN(X=X, y=y, k_neighbors=k_neighbors, n_classes=n_classes)


def knn_predict(model, rows):
    return model.predict(rows)


def fit_classifier(spec, X, y, seed, n_classes):
    if spec.kind == "svm":
        return train_linear_svm(X, y, C=spec.C, epochs=spec.epochs, seed=seed, n_classes=n_classes)
    return train_knn(X, y, k_neighbors=min(spec.k_neighbors, len(X)), n_classes=n_classes)


# ---------------------------------------------------------------- scoring


def confusion_matrix(y_true, y_pred, n_classes):
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if len(y_true) != len(y_pred):
        raise DataError("y_true and y_pred differ in length")
    M = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(M, (y_true, y_pred), 1)
    return M


def per_class_f1(cm):
    cm = np.asarray(cm, dtype=np.float64)
    tp = np.diag(cm)
    pred = cm.sum(axis=0)
    true = cm.sum(axis=1)
    precision = np.divide(tp, pred, out=np.zeros_like(tp), where=pred > 0)
    recall = np.divide(tp, true, out=np.zeros_like(tp), where=true > 0)
    denom = precision + recall
    return np.divide(2 * precision * recall, denom, out=np.zeros_like(tp), where=denom > 0)


def macro_f1(y_true, y_pred, n_classes):
    """Unweighted mean of per-class F1 over the classes present in ``y_true``."""
    cm = confusion_matrix(y_true, y_pred, n_classes)
    present = cm.sum(axis=1) > 0
    if not present.any():
        return 0.0
    return float(per_class_f1(cm)[present].mean())


def weighted_f1(y_true, y_pred, n_classes):
    cm = confusion_matrix(y_true, y_pred, n_classes)
    support = cm.sum(axis=1)
    if support.sum() == 0:
        return 0.0
    return float(per_class_f1(cm) @ support / support.sum())


# -------------------------------------------------------- cross-validation


@dataclass
class CVReport:
    per_fold_f1: list
    mean_f1: float
    confusion: np.ndarray
    fold_assignments: np.ndarray
    seed: int
    class_names: list
    per_fold_weighted_f1: list = field(default_factory=list)

    @property
    def per_class_f1(self):
        return per_class_f1(self.confusion).tolist()

    @property
    def mean_weighted_f1(self):
        return float(np.mean(self.per_fold_weighted_f1)) if self.per_fold_weighted_f1 else 0.0

    def to_dict(self):
        return {
            "class_names": list(self.class_names),
            "confusion": self.confusion.tolist(),
            "fold_assignments": self.fold_assignments.tolist(),
            "mean_f1": self.mean_f1,
            "mean_weighted_f1": self.mean_weighted_f1,
            "per_class_f1": self.per_class_f1,
            "per_fold_f1": list(self.per_fold_f1),
            "per_fold_weighted_f1": list(self.per_fold_weighted_f1),
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def folds_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["fold", "macro_f1", "weighted_f1"])
        for i, (f, wf) in enumerate(zip(self.per_fold_f1, self.per_fold_weighted_f1)):
            w.writerow([i, repr(f), repr(wf)])
        return buf.getvalue()

    def confusion_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["true\\predicted"] + list(self.class_names))
        for name, row in zip(self.class_names, self.confusion.tolist()):
            w.writerow([name] + row)
        return buf.getvalue()


def _fold_seed(seed, fold):
    return int(np.random.SeedSequence([seed, fold]).generate_state(1, np.uint64)[0])


def _evaluate_split(ds, spec, train, test, seed):
    n_classes = len(ds.class_names)
    params = standardize_fit(ds.features[train])
    Xtr = standardize_apply(params, ds.features[train])
    Xte = standardize_apply(params, ds.features[test])
    model = fit_classifier(spec, Xtr, ds.labels[train], seed, n_classes)
    pred = model.predict(Xte)
    return pred


def cross_validate(dataset, spec=ClassifierSpec(), k=10, seed=0):
    folds = stratified_kfold(dataset.labels, k, seed)
    n_classes = len(dataset.class_names)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    scores, wscores = [], []
    for f in range(int(folds.max()) + 1):
        test = folds == f
        pred = _evaluate_split(dataset, spec, ~test, test, _fold_seed(seed, f))
        truth = dataset.labels[test]
        scores.append(macro_f1(truth, pred, n_classes))
        wscores.append(weighted_f1(truth, pred, n_classes))
        cm += confusion_matrix(truth, pred, n_classes)
    return CVReport(
        per_fold_f1=scores,
        mean_f1=float(np.mean(scores)),
        confusion=cm,
        fold_assignments=folds,
        seed=seed,
        class_names=list(dataset.class_names),
        per_fold_weighted_f1=wscores,
    )


def holdout_evaluate(dataset, spec=ClassifierSpec(), test_fraction=0.2, seed=0):
    """Single stratified train/test split; returns ``(macro_f1, confusion)``.

    The test set is fold 0 of ``stratified_kfold(labels, round(1/test_fraction), seed)``,
    so with the same seed it coincides with the first fold of
    :func:`cross_validate`.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataError("test_fraction must lie in (0, 1)")
    _, counts = np.unique(dataset.labels, return_counts=True)
    if counts.min() < 2:
        raise DataError("every class needs at least 2 members for a stratified holdout split")
    k = max(2, int(round(1.0 / test_fraction)))
    folds = stratified_kfold(dataset.labels, k, seed)
    test = folds == 0
    n_classes = len(dataset.class_names)
    pred = _evaluate_split(dataset, spec, ~test, test, _fold_seed(seed, 0))
    truth = dataset.labels[test]
    return macro_f1(truth, pred, n_classes), confusion_matrix(truth, pred, n_classes)
