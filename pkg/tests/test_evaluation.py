import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pondwatch.evaluation import (
    ConfusionMatrix,
    cohen_kappa,
    confusion,
    f1_macro,
    jaccard_macro,
    metrics_report,
    misclassification_heatmap,
    per_class_f1,
    per_class_jaccard,
    sample_training,
)
from pondwatch.raster import CHANGE_CLASSES, LabelRaster


def labels(values, classes=CHANGE_CLASSES):
    return LabelRaster(values=np.asarray(values, np.uint8), classes=classes)


def textbook_metrics(counts):
    """Independent straight-loop implementation of the three metrics."""
    counts = np.asarray(counts, dtype=float)
    k = counts.shape[0]
    n = counts.sum()
    p_o = sum(counts[i, i] for i in range(k)) / n
    p_e = sum(counts[i, :].sum() * counts[:, i].sum() for i in range(k)) / n**2
    kappa = 1.0 if (p_e >= 1 - 1e-15 and p_o >= 1 - 1e-15) else (
        0.0 if p_e >= 1 - 1e-15 else (p_o - p_e) / (1 - p_e)
    )
    js, f1s = [], []
    for i in range(k):
        tp = counts[i, i]
        fp = counts[:, i].sum() - tp
        fn = counts[i, :].sum() - tp
        if tp + fp + fn > 0:
            js.append(tp / (tp + fp + fn))
            f1s.append(2 * tp / (2 * tp + fp + fn))
    return kappa, float(np.mean(js)), float(np.mean(f1s))


class TestConfusion:
    def test_perfect_prediction_is_diagonal(self, rng):
        values = (rng.uniform(size=(6, 6)) * 4).astype(np.uint8)
        t = labels(values)
        cm = confusion(t, t)
        assert np.trace(cm.counts) == 36
        assert cm.counts.sum() == 36

    def test_hand_counted_three_pixels(self):
        truth = labels([[0, 1, 2]])
        pred = labels([[0, 2, 2]])
        cm = confusion(pred, truth)
        expected = np.zeros((4, 4), np.int64)
        expected[0, 0] = 1
        expected[1, 2] = 1
        expected[2, 2] = 1
        assert np.array_equal(cm.counts, expected)

    def test_excluded_pixels_not_counted(self):
        truth = labels([[0, 1, 2, 3]])
        pred = labels([[0, 1, 2, 3]])
        cm = confusion(pred, truth, exclude=np.array([0, 2]))
        assert cm.counts.sum() == 2

    def test_nodata_ignored(self):
        truth = labels([[0, 255], [255, 3]])
        pred = labels([[0, 0], [0, 3]])
        cm = confusion(pred, truth)
        assert cm.counts.sum() == 2

    def test_empty_eval_set_warns(self):
        truth = labels([[255, 255]])
        pred = labels([[0, 0]])
        with pytest.warns(RuntimeWarning, match="empty"):
            cm = confusion(pred, truth)
        assert cm.counts.sum() == 0

    def test_class_set_mismatch(self):
        truth = labels([[0]])
        pred = LabelRaster(values=np.zeros((1, 1), np.uint8), classes={0: "A", 1: "B"})
        with pytest.raises(ValueError, match="class set"):
            confusion(pred, truth)

    def test_prediction_nodata_in_eval_set_rejected(self):
        truth = labels([[0, 1]])
        pred = labels([[0, 255]])
        with pytest.raises(ValueError, match="nodata"):
            confusion(pred, truth)


class TestKappa:
    def test_perfect_diagonal(self):
        cm = ConfusionMatrix(counts=np.diag([5, 7, 9, 1]), classes=[0, 1, 2, 3])
        assert cohen_kappa(cm) == 1.0

    def test_worked_example(self):
        cm = ConfusionMatrix(counts=[[50, 10], [5, 35]], classes=[0, 1])
        # p_o = 0.85, p_e = 0.51, kappa = 0.34/0.49
        assert cohen_kappa(cm) == pytest.approx(0.34 / 0.49, abs=1e-12)
        assert cohen_kappa(cm) == pytest.approx(0.6939, abs=1e-4)

    def test_independent_prediction_scores_zero(self):
        counts = np.outer([30, 10], [1, 3])  # exact rank-one table
        cm = ConfusionMatrix(counts=counts, classes=[0, 1])
        assert cohen_kappa(cm) == pytest.approx(0.0, abs=1e-12)

    def test_degenerate_single_class(self):
        assert cohen_kappa(ConfusionMatrix(counts=[[10, 0], [0, 0]], classes=[0, 1])) == 1.0
        assert cohen_kappa(ConfusionMatrix(counts=[[0, 10], [0, 0]], classes=[0, 1])) == 0.0

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_invariant_under_simultaneous_permutation(self, seed):
        rng = np.random.default_rng(seed)
        k = int(rng.integers(2, 6))
        counts = rng.integers(0, 50, (k, k))
        if counts.sum() == 0:
            counts[0, 0] = 1
        perm = rng.permutation(k)
        cm = ConfusionMatrix(counts=counts, classes=list(range(k)))
        cm_p = ConfusionMatrix(counts=counts[np.ix_(perm, perm)], classes=list(range(k)))
        assert cohen_kappa(cm) == pytest.approx(cohen_kappa(cm_p), abs=1e-12)


class TestMacroMetrics:
    def test_worked_example(self):
        cm = ConfusionMatrix(counts=[[50, 10], [5, 35]], classes=[0, 1])
        j = per_class_jaccard(cm)
        f = per_class_f1(cm)
        assert j[0] == pytest.approx(50 / 65)
        assert j[1] == pytest.approx(35 / 50)
        assert jaccard_macro(cm) == pytest.approx((50 / 65 + 0.70) / 2, abs=1e-12)
        assert f[0] == pytest.approx(100 / 115)
        assert f[1] == pytest.approx(70 / 85)
        assert f1_macro(cm) == pytest.approx((100 / 115 + 70 / 85) / 2, abs=1e-12)

    def test_absent_class_excluded_from_mean(self):
        counts = np.zeros((3, 3), np.int64)
        counts[0, 0] = 10
        counts[1, 1] = 5
        cm = ConfusionMatrix(counts=counts, classes=[0, 1, 2])
        assert jaccard_macro(cm) == 1.0
        assert 2 not in per_class_jaccard(cm)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**31 - 1))
    def test_f1_jaccard_identity(self, seed):
        rng = np.random.default_rng(seed)
        counts = rng.integers(0, 30, (4, 4))
        counts[0, 0] += 1
        cm = ConfusionMatrix(counts=counts, classes=[0, 1, 2, 3])
        j = per_class_jaccard(cm)
        f = per_class_f1(cm)
        for c, jc in j.items():
            assert f[c] == pytest.approx(2 * jc / (1 + jc), abs=1e-12)

    def test_hundred_random_matrices_match_textbook(self, rng):
        for _ in range(100):
            k = int(rng.integers(2, 6))
            counts = rng.integers(0, 100, (k, k))
            if counts.sum() == 0:
                counts[0, 0] = 1
            cm = ConfusionMatrix(counts=counts, classes=list(range(k)))
            kappa_t, j_t, f_t = textbook_metrics(counts)
            assert abs(cohen_kappa(cm) - kappa_t) <= 1e-12
            assert abs(jaccard_macro(cm) - j_t) <= 1e-12
            assert abs(f1_macro(cm) - f_t) <= 1e-12

    def test_against_sklearn_on_label_arrays(self, rng):
        from sklearn import metrics as skm

        truth = rng.integers(0, 4, 500)
        pred = rng.integers(0, 4, 500)
        counts = np.zeros((4, 4), np.int64)
        np.add.at(counts, (truth, pred), 1)
        cm = ConfusionMatrix(counts=counts, classes=[0, 1, 2, 3])
        assert cohen_kappa(cm) == pytest.approx(skm.cohen_kappa_score(truth, pred), abs=1e-12)
        assert f1_macro(cm) == pytest.approx(skm.f1_score(truth, pred, average="macro"), abs=1e-12)
        assert jaccard_macro(cm) == pytest.approx(
            skm.jaccard_score(truth, pred, average="macro"), abs=1e-12
        )


class TestSampleTraining:
    def truth_with_counts(self, counts):
        values = np.full(sum(counts), 255, np.uint8)
        start = 0
        for code, n in enumerate(counts):
            values[start : start + n] = code
            start += n
        classes = {c: f"c{c}" for c in range(len(counts))}
        return LabelRaster(values=values.reshape(1, -1), classes=classes)

    def test_cap_leaves_one_for_evaluation(self):
        truth = self.truth_with_counts([3, 200])
        idx = sample_training(truth, 100, seed=0)
        flat = truth.values.ravel()
        assert np.sum(flat[idx] == 0) == 2
        assert np.sum(flat[idx] == 1) == 100

    def test_deterministic_for_fixed_seed(self):
        truth = self.truth_with_counts([50, 50, 50, 50])
        a = sample_training(truth, 10, seed=42)
        b = sample_training(truth, 10, seed=42)
        assert np.array_equal(a, b)
        c = sample_training(truth, 10, seed=43)
        assert not np.array_equal(a, c)

    def test_class_too_small_errors_with_name(self):
        truth = self.truth_with_counts([1, 50])
        with pytest.raises(ValueError, match="class 0"):
            sample_training(truth, 10, seed=0)

    def test_sampling_frequencies_uniform(self):
        truth = self.truth_with_counts([10])
        hits = np.zeros(10)
        for seed in range(1000):
            idx = sample_training(truth, 5, seed=seed)
            hits[idx] += 1
        freq = hits / 1000
        assert np.abs(freq - 0.5).max() < 0.05


class TestHeatmap:
    def test_all_correct_gives_zero(self, rng):
        values = (rng.uniform(size=(5, 5)) * 4).astype(np.uint8)
        truth = labels(values)
        counts = misclassification_heatmap([truth] * 10, truth)
        assert (counts.data[0] == 0).all()

    def test_single_wrong_pixel_counts_one(self):
        truth = labels([[0, 0], [0, 0]])
        wrong = np.zeros((2, 2), np.uint8)
        wrong[1, 1] = 3
        preds = [labels(wrong)] + [truth] * 9
        counts = misclassification_heatmap(preds, truth)
        assert counts.data[0, 1, 1] == 1
        assert counts.data[0].sum() == 1

    def test_matches_brute_force_tally(self, rng):
        truth_values = (rng.uniform(size=(8, 8)) * 4).astype(np.uint8)
        truth = labels(truth_values)
        preds = [labels((rng.uniform(size=(8, 8)) * 4).astype(np.uint8)) for _ in range(10)]
        counts = misclassification_heatmap(preds, truth)
        brute = np.zeros((8, 8))
        for y in range(8):
            for x in range(8):
                brute[y, x] = sum(p.values[y, x] != truth_values[y, x] for p in preds)
        assert np.array_equal(counts.data[0], brute)

    def test_nodata_pixels_marked(self):
        truth = labels([[255, 0]])
        counts = misclassification_heatmap([labels([[0, 0]])], truth)
        assert counts.data[0, 0, 0] == -1.0

    def test_png_written(self, rng, tmp_path):
        values = (rng.uniform(size=(6, 6)) * 4).astype(np.uint8)
        truth = labels(values)
        misclassification_heatmap([truth] * 3, truth, png_path=tmp_path / "h.png")
        assert (tmp_path / "h.png").stat().st_size > 0


def test_metrics_report_row_fields():
    cm = ConfusionMatrix(counts=[[50, 10], [5, 35]], classes=[0, 1])
    report = metrics_report(cm, trial=3, labels_per_class=50, seed=9)
    row = report.as_row()
    assert row["trial"] == 3
    assert row["labels_per_class"] == 50
    assert row["kappa"] == pytest.approx(0.34 / 0.49)
    assert "jaccard_0" in row and "f1_1" in row
