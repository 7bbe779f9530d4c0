"""Imbalance-aware metrics, training-pixel sampling and error heatmaps.

All metrics run over a confusion matrix counted on labeled pixels
outside the training set.  Kappa corrects agreement for chance;
Jaccard and F1 are macro-averaged over the classes present so the
dominant no-change class cannot mask errors on the rare ones.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .raster import LabelRaster, Raster


@dataclass
class ConfusionMatrix:
    """k x k counts; rows are truth, columns prediction."""

    counts: np.ndarray
    classes: list[int]

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        k = len(self.classes)
        if counts.shape != (k, k):
            raise ValueError(f"counts must be {k}x{k}")
        if (counts < 0).any():
            raise ValueError("negative counts")
        self.counts = counts
        self.classes = [int(c) for c in self.classes]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass
class MetricsReport:
    kappa: float
    jaccard_macro: float
    f1_macro: float
    per_class_jaccard: dict[int, float]
    per_class_f1: dict[int, float]
    trial: int = 0
    labels_per_class: int = 0
    seed: int = 0

    def as_row(self) -> dict:
        row = {
            "trial": self.trial,
            "labels_per_class": self.labels_per_class,
            "seed": self.seed,
            "kappa": self.kappa,
            "jaccard_macro": self.jaccard_macro,
            "f1_macro": self.f1_macro,
        }
        for c in sorted(self.per_class_jaccard):
            row[f"jaccard_{c}"] = self.per_class_jaccard[c]
        for c in sorted(self.per_class_f1):
            row[f"f1_{c}"] = self.per_class_f1[c]
        return row


@dataclass
class TrialPlan:
    n_per_class: int
    n_trials: int = 10
    seed: int = 0
    eval_on: str = "all_labeled_minus_train"

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.eval_on != "all_labeled_minus_train":
            raise ValueError("only all_labeled_minus_train evaluation is supported")

    def trial_seed(self, trial: int) -> int:
        return self.seed + trial


def confusion(pred: LabelRaster, truth: LabelRaster,
              exclude: np.ndarray | None = None) -> ConfusionMatrix:
    """Count truth-vs-prediction pairs outside nodata and ``exclude``.

    ``exclude`` holds flat row-major pixel indices (the training set).
    """
    if pred.values.shape != truth.values.shape:
        raise ValueError("shape mismatch between prediction and truth")
    if sorted(pred.classes) != sorted(truth.classes):
        raise ValueError(
            f"class set mismatch: {sorted(pred.classes)} vs {sorted(truth.classes)}"
        )
    classes = sorted(truth.classes)
    t = truth.values.ravel()
    p = pred.values.ravel()
    mask = t != truth.nodata
    if exclude is not None and len(exclude) > 0:
        mask = mask.copy()
        mask[np.asarray(exclude, dtype=np.int64)] = False
    if not mask.any():
        warnings.warn("empty evaluation set", RuntimeWarning)
        return ConfusionMatrix(
            counts=np.zeros((len(classes), len(classes)), dtype=np.int64),
            classes=classes,
        )
    if (p[mask] == pred.nodata).any():
        raise ValueError("prediction contains nodata inside the evaluation set")
    code_to_idx = np.zeros(256, dtype=np.int64)
    for i, c in enumerate(classes):
        code_to_idx[c] = i
    k = len(classes)
    flat = code_to_idx[t[mask]] * k + code_to_idx[p[mask]]
    counts = np.bincount(flat, minlength=k * k).reshape(k, k)
    return ConfusionMatrix(counts=counts, classes=classes)


def cohen_kappa(cm: ConfusionMatrix) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e).

    Degenerate case: when chance agreement is exact (p_e == 1, a single
    populated row/column pair), returns 1.0 for perfect observed
    agreement and 0.0 otherwise.
    """
    n = cm.total
    if n == 0:
        return 0.0
    counts = cm.counts.astype(np.float64)
    p_o = np.trace(counts) / n
    p_e = float(np.sum(counts.sum(axis=1) * counts.sum(axis=0))) / (n * n)
    if p_e >= 1.0 - 1e-15:
        return 1.0 if p_o >= 1.0 - 1e-15 else 0.0
    return float((p_o - p_e) / (1.0 - p_e))


def _per_class_tp_fp_fn(cm: ConfusionMatrix):
    counts = cm.counts.astype(np.float64)
    tp = np.diag(counts)
    fp = counts.sum(axis=0) - tp
    fn = counts.sum(axis=1) - tp
    return tp, fp, fn


def per_class_jaccard(cm: ConfusionMatrix) -> dict[int, float]:
    tp, fp, fn = _per_class_tp_fp_fn(cm)
    out = {}
    for i, c in enumerate(cm.classes):
        denom = tp[i] + fp[i] + fn[i]
        if denom > 0:
            out[c] = float(tp[i] / denom)
    return out


def per_class_f1(cm: ConfusionMatrix) -> dict[int, float]:
    tp, fp, fn = _per_class_tp_fp_fn(cm)
    out = {}
    for i, c in enumerate(cm.classes):
        denom = 2.0 * tp[i] + fp[i] + fn[i]
        if denom > 0:
            out[c] = float(2.0 * tp[i] / denom)
    return out


def jaccard_macro(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class Jaccard over classes present."""
    per = per_class_jaccard(cm)
    return float(np.mean(list(per.values()))) if per else 0.0


def f1_macro(cm: ConfusionMatrix) -> float:
    """Unweighted mean of per-class F1 over classes present."""
    per = per_class_f1(cm)
    return float(np.mean(list(per.values()))) if per else 0.0


def metrics_report(cm: ConfusionMatrix, trial: int = 0,
                   labels_per_class: int = 0, seed: int = 0) -> MetricsReport:
    return MetricsReport(
        kappa=cohen_kappa(cm),
        jaccard_macro=jaccard_macro(cm),
        f1_macro=f1_macro(cm),
        per_class_jaccard=per_class_jaccard(cm),
        per_class_f1=per_class_f1(cm),
        trial=trial,
        labels_per_class=labels_per_class,
        seed=seed,
    )


def sample_training(truth: LabelRaster, n_per_class: int, seed: int) -> np.ndarray:
    """Draw training pixels per class, uniformly without replacement.

    Returns sorted flat row-major indices.  Each class contributes
    min(n_per_class, population - 1) pixels so at least one labeled
    pixel per class survives for evaluation; a class with fewer than
    two labeled pixels is an error.
    """
    rng = np.random.default_rng(seed)
    flat = truth.values.ravel()
    chosen = []
    for c in truth.class_codes():
        candidates = np.flatnonzero(flat == c)
        if candidates.size <= 1:
            raise ValueError(
                f"class {c} ({truth.classes[c]}) has {candidates.size} labeled "
                "pixel(s); need at least 2"
            )
        take = min(n_per_class, candidates.size - 1)
        chosen.append(rng.choice(candidates, size=take, replace=False))
    return np.sort(np.concatenate(chosen))


def misclassification_counts(trial_predictions: list[LabelRaster],
                             truth: LabelRaster) -> Raster:
    """Per-pixel count of trials that misclassified the pixel.

    Output is a single-band float raster; truth-nodata pixels carry the
    sentinel -1 (the raster format has no nodata slot).
    """
    if not trial_predictions:
        raise ValueError("need at least one prediction")
    t = truth.values
    counts = np.zeros(t.shape, dtype=np.float32)
    for pred in trial_predictions:
        if pred.values.shape != t.shape:
            raise ValueError("prediction shape mismatch")
        counts += (pred.values != t).astype(np.float32)
    counts[t == truth.nodata] = -1.0
    return Raster(bands=("misclass_count",), data=counts[None, :, :])


def render_heatmap_png(counts: Raster, n_trials: int, path) -> None:
    """Render a misclassification-count raster with a fixed 0..n color ramp."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.array(counts.data[0], dtype=np.float64)
    masked = np.ma.masked_less(values, 0.0)
    fig, ax = plt.subplots(figsize=(5, 4), dpi=120)
    im = ax.imshow(masked, cmap="hot", vmin=0, vmax=n_trials, interpolation="nearest")
    ax.set_xticks([])
    ax.set_yticks([])
    fig.colorbar(im, ax=ax, label="misclassified trials")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def misclassification_heatmap(trial_predictions: list[LabelRaster],
                              truth: LabelRaster, png_path=None) -> Raster:
    """Count misclassifications across trials; optionally render a PNG."""
    counts = misclassification_counts(trial_predictions, truth)
    if png_path is not None:
        render_heatmap_png(counts, len(trial_predictions), png_path)
    return counts
