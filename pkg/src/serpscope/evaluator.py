"""Cross-validation, classification metrics and feature information analytics."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from serpscope.classifier import NON_SCHOLAR, SCHOLAR, LogisticModel, label_for
from serpscope.errors import LengthMismatch, TooFewInstances
from serpscope.features import BINARY_FEATURES, FEATURE_NAMES
from serpscope.trainer import FitConfig, FitReport, LabeledDataset, sigmoid_array, fit

CLASSES = (SCHOLAR, NON_SCHOLAR)
METRIC_NAMES = ("tp_rate", "fp_rate", "precision", "recall", "f_measure", "roc_area")
# column headings of the usual per-class accuracy table layout
TABLE_COLUMNS = ("TP Rate", "FP Rate", "Precision", "Recall", "F-Measure", "ROC Area")


def _as_label(value) -> str:
    if value in (1, True, SCHOLAR):
        return SCHOLAR
    if value in (0, False, NON_SCHOLAR):
        return NON_SCHOLAR
    raise ValueError(f"not a class label: {value!r}")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with scholar as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def confusion(preds: Sequence, truth: Sequence) -> ConfusionMatrix:
    if len(preds) != len(truth):
        raise LengthMismatch(f"{len(preds)} predictions vs {len(truth)} labels")
    if not preds:
        raise LengthMismatch("no predictions to tabulate")
    c = Counter((_as_label(t), _as_label(p)) for p, t in zip(preds, truth))
    return ConfusionMatrix(
        tp=c[SCHOLAR, SCHOLAR],
        fp=c[NON_SCHOLAR, SCHOLAR],
        fn=c[SCHOLAR, NON_SCHOLAR],
        tn=c[NON_SCHOLAR, NON_SCHOLAR],
    )


def roc_area(scores: Sequence[float], truth: Sequence) -> float | None:
    """Area under the ROC curve for scholar-vs-rest scores.

    Thresholds sweep over distinct scores from high to low; tied scores move
    together, giving a diagonal (trapezoid) segment. None if a class is absent.
    """
    s = np.asarray(scores, dtype=float)
    y = np.array([_as_label(t) == SCHOLAR for t in truth])
    if len(s) != len(y):
        raise LengthMismatch(f"{len(s)} scores vs {len(y)} labels")
    n_pos, n_neg = int(y.sum()), int((~y).sum())
    if n_pos == 0 or n_neg == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    last_of_group = np.r_[s[1:] != s[:-1], True]
    tps = np.cumsum(y)[last_of_group]
    fps = np.cumsum(~y)[last_of_group]
    tpr = np.r_[0, tps] / n_pos
    fpr = np.r_[0, fps] / n_neg
    return float(np.sum((fpr[1:] - fpr[:-1]) * (tpr[1:] + tpr[:-1]) / 2))


def _ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def _f_measure(p: float | None, r: float | None) -> float | None:
    if p is None or r is None:
        return None
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class EvaluationReport:
    """Per-class and support-weighted metrics.

    Cells that are mathematically undefined (e.g. precision with no positive
    predictions) hold None and are listed in ``undefined``.
    """

    per_class: dict[str, dict[str, float | None]]
    weighted: dict[str, float | None]
    confusion: ConfusionMatrix
    fold_count: int = 0
    support: dict[str, int] = field(default_factory=dict)
    undefined: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def cols(d):
            return {col: d[name] for col, name in zip(TABLE_COLUMNS, METRIC_NAMES)}

        return {
            "classes": {c: cols(self.per_class[c]) for c in CLASSES},
            "weighted_avg": cols(self.weighted),
            "confusion_matrix": self.confusion.to_dict(),
            "support": self.support,
            "fold_count": self.fold_count,
            "undefined": self.undefined,
        }

    def render(self) -> str:
        """Plain-text per-class accuracy table followed by the confusion matrix."""

        def fmt(v):
            return "   ?  " if v is None else f"{v:6.3f}"

        head = f"{'Class':<14}" + "".join(f"{c:>11}" for c in TABLE_COLUMNS)
        lines = [head, "-" * len(head)]
        for c in CLASSES:
            lines.append(f"{c:<14}" + "".join(f"{fmt(self.per_class[c][m]):>11}" for m in METRIC_NAMES))
        lines.append(f"{'Weighted Avg.':<14}" + "".join(f"{fmt(self.weighted[m]):>11}" for m in METRIC_NAMES))
        cm = self.confusion
        cells = [[f"TP: {cm.tp:,}", f"FP: {cm.fp:,}"], [f"FN: {cm.fn:,}", f"TN: {cm.tn:,}"]]
        w = max(len(c) for row in cells for c in row + [NON_SCHOLAR]) + 2
        lines += ["", f"{'':<14}{SCHOLAR:>{w}}{NON_SCHOLAR:>{w}}"]
        for name, row in zip(CLASSES, cells):
            lines.append(f"{name:<14}" + "".join(f"{c:>{w}}" for c in row))
        return "\n".join(lines)


def metrics(
    cm: ConfusionMatrix,
    scores: Sequence[tuple[float, object]] | None = None,
    fold_count: int = 0,
) -> EvaluationReport:
    """Derive the per-class accuracy table from a confusion matrix.

    ``scores`` are (scholar probability, true label) pairs; without them the
    ROC area is left undefined.
    """
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    auc = None
    if scores:
        p, t = zip(*scores)
        auc = roc_area(p, t)

    per_class = {
        SCHOLAR: {
            "tp_rate": _ratio(cm.tp, cm.tp + cm.fn),
            "fp_rate": _ratio(cm.fp, cm.fp + cm.tn),
            "precision": _ratio(cm.tp, cm.tp + cm.fp),
        },
        NON_SCHOLAR: {
            "tp_rate": _ratio(cm.tn, cm.tn + cm.fp),
            "fp_rate": _ratio(cm.fn, cm.fn + cm.tp),
            "precision": _ratio(cm.tn, cm.tn + cm.fn),
        },
    }
    for row in per_class.values():
        row["recall"] = row["tp_rate"]
        row["f_measure"] = _f_measure(row["precision"], row["recall"])
        row["roc_area"] = auc

    support = {SCHOLAR: cm.tp + cm.fn, NON_SCHOLAR: cm.tn + cm.fp}
    undefined = [f"{c}.{m}" for c in CLASSES for m in METRIC_NAMES if per_class[c][m] is None]

    weighted: dict[str, float | None] = {}
    for m in METRIC_NAMES:
        cells = [(per_class[c][m], support[c]) for c in CLASSES if support[c] > 0]
        if any(v is None for v, _ in cells) or not cells:
            weighted[m] = None
            undefined.append(f"weighted.{m}")
        else:
            weighted[m] = sum(v * n for v, n in cells) / sum(n for _, n in cells)

    return EvaluationReport(per_class, weighted, cm, fold_count, support, undefined)


# ---------------------------------------------------------------------------
# cross validation


def stratified_folds(data: LabeledDataset, k: int, seed: int = 0) -> list[list[int]]:
    """Split instance indices into k class-stratified folds.

    Each class is shuffled and dealt round-robin, continuing the deal where the
    previous class stopped so fold sizes stay within one of each other.
    """
    n = len(data)
    if k < 2:
        raise TooFewInstances(f"k must be >= 2, got {k}")
    if n < k:
        raise TooFewInstances(f"cannot make {k} folds from {n} instances")
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    labels = [inst.label for inst in data]
    for cls in (1, 0):
        idx = np.array([i for i, lab in enumerate(labels) if lab == cls], dtype=int)
        rng.shuffle(idx)
        for j, i in enumerate(idx):
            folds[(offset + j) % k].append(int(i))
        offset = (offset + len(idx)) % k
    return [sorted(f) for f in folds]


Fitter = Callable[[LabeledDataset, FitConfig], "tuple[LogisticModel, FitReport]"]


def cross_validate(
    data: LabeledDataset,
    k: int = 10,
    fit_config: FitConfig = FitConfig(),
    *,
    seed: int | None = None,
    fitter: Fitter = fit,
) -> EvaluationReport:
    """Stratified k-fold CV with one pooled confusion matrix over all folds.

    ``seed`` defaults to ``fit_config.seed``; ``fitter`` is swappable so the
    training subsets can be inspected.
    """
    seed = fit_config.seed if seed is None else seed
    folds = stratified_folds(data, k, seed)
    X, y = data.X, data.y
    pooled = ConfusionMatrix(0, 0, 0, 0)
    scores: list[tuple[float, int]] = []
    for held_out in folds:
        if not held_out:
            continue
        held = set(held_out)
        train = data.subset(i for i in range(len(data)) if i not in held)
        model, _ = fitter(train, fit_config)
        g = model.intercept + X[held_out] @ np.array(model.coefficients)
        p = sigmoid_array(g)
        truth = [int(y[i]) for i in held_out]
        pooled = pooled + confusion([label_for(v) for v in p], truth)
        scores.extend(zip(p.tolist(), truth))
    return metrics(pooled, scores, fold_count=k)


# ---------------------------------------------------------------------------
# information analytics


class EqualWidthBins:
    """Discretize into ``n`` equal-width bins over the observed range."""

    def __init__(self, n: int = 10):
        if n < 1:
            raise ValueError("need at least one bin")
        self.n = n

    def __call__(self, values: Sequence[float]) -> np.ndarray:
        v = np.asarray(values, dtype=float)
        lo, hi = float(v.min()), float(v.max())
        if hi == lo:
            return np.zeros(len(v), dtype=int)
        bins = np.floor((v - lo) / (hi - lo) * self.n).astype(int)
        return np.minimum(bins, self.n - 1)

    def __repr__(self):
        return f"EqualWidthBins({self.n})"


class DistinctValues:
    """Each distinct value is its own bin (for already-discrete features)."""

    def __call__(self, values: Sequence[float]) -> np.ndarray:
        _, inverse = np.unique(np.asarray(values), return_inverse=True)
        return inverse.ravel()

    def __repr__(self):
        return "DistinctValues()"


BinningPolicy = Callable[[Sequence[float]], np.ndarray]


def entropy(labels: Iterable) -> float:
    """Shannon entropy in bits."""
    counts = np.array(list(Counter(labels).values()), dtype=float)
    if counts.size == 0:
        return 0.0
    p = counts / counts.sum()
    return float(-np.sum(p * np.log2(p)))


def _conditional_entropy(bins: np.ndarray, labels: Sequence) -> float:
    n = len(labels)
    total = 0.0
    for b in np.unique(bins):
        members = [labels[i] for i in np.flatnonzero(bins == b)]
        total += len(members) / n * entropy(members)
    return total


def info_gain(values: Sequence[float], labels: Sequence, binning: BinningPolicy | None = None) -> float:
    """H(class) - H(class | binned feature), in bits."""
    if len(values) == 0:
        raise ValueError("empty feature column")
    if len(values) != len(labels):
        raise LengthMismatch(f"{len(values)} values vs {len(labels)} labels")
    bins = (binning or EqualWidthBins())(values)
    labels = list(labels)
    return max(0.0, entropy(labels) - _conditional_entropy(bins, labels))


def gain_ratio(values: Sequence[float], labels: Sequence, binning: BinningPolicy | None = None) -> float:
    """Information gain divided by the split entropy of the binned feature (0 if that is 0)."""
    bins = (binning or EqualWidthBins())(values)
    split = entropy(bins.tolist())
    if split == 0:
        return 0.0
    return info_gain(values, labels, lambda _: bins) / split


def feature_information(data: LabeledDataset, binning: BinningPolicy | None = None) -> dict[str, dict[str, float]]:
    labels = data.y.astype(int).tolist()
    out = {}
    for j, name in enumerate(FEATURE_NAMES):
        col = data.X[:, j]
        out[name] = {
            "information_gain": info_gain(col, labels, binning),
            "gain_ratio": gain_ratio(col, labels, binning),
        }
    return out


SUMMARY_FEATURES = ("f4", "f5", "f6", "f8", "f9", "f10")


def summary_stats(data: LabeledDataset) -> dict[str, dict]:
    """Per class: mean and population std of the continuous features and the
    share of SERPs where each binary indicator is present (value 0)."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    out = {}
    for cls, name in ((1, SCHOLAR), (0, NON_SCHOLAR)):
        rows = data.X[data.y == cls]
        entry: dict = {"count": int(len(rows)), "mean": {}, "std": {}, "presence": {}}
        for j, feat in enumerate(FEATURE_NAMES):
            if len(rows) == 0:
                continue
            col = rows[:, j]
            if feat in BINARY_FEATURES:
                entry["presence"][feat] = float(np.mean(col == 0))
            elif feat in SUMMARY_FEATURES:
                entry["mean"][feat] = float(np.mean(col))
                entry["std"][feat] = float(np.std(col))
        out[name] = entry
    return out
