import numpy as np
import pytest
from PIL import Image

from augbench.dataset_io import Dataset, ImageSample
from augbench.errors import ConfigError, ValidationError
from augbench.eval_harness import (
    ConfusionMatrix,
    ExperimentReport,
    RunStats,
    TechniqueResult,
    accuracy,
    balanced_accuracy,
    confusion_matrix,
    median_run_index,
    render_report,
    render_sweep,
    report_from_dict,
    report_to_dict,
    run_benchmark,
    run_experiment,
    save_heatmap,
    sweep_from_dict,
    sweep_gan,
    sweep_to_dict,
)
from augbench.pix2pix_gan import GanHyperparams
from augbench.sign_renderer import PairedSample, load_template, render_symbolic
from augbench.squeezenet_classifier import ClassifierConfig, TrainHyperparams

SMALL_WIDTHS = ((4, 8), (4, 8))
FAST_CLS = dict(
    classifier_config=ClassifierConfig(num_classes=3, fire_module_widths=SMALL_WIDTHS, input_size=16),
    classifier_hyper=TrainHyperparams(epochs=2, batch_size=8),
)


def counting_oracle(true, pred, k):
    """Dumb O(nk) tally used to cross-check the vectorized implementation."""
    cm = np.zeros((k, k), dtype=np.int64)
    for t, p in zip(true, pred):
        cm[t, p] += 1
    return cm


def toy_dataset(num_classes=3, per_class=4, test_per_class=2, size=16, seed=0):
    rng = np.random.default_rng(seed)
    samples = []
    for split, count in (("train", per_class), ("test", test_per_class)):
        for c in range(num_classes):
            for _ in range(count):
                base = (c + 0.5) / num_classes
                px = np.clip(base + rng.normal(0, 0.05, (size, size, 3)), 0, 1)
                samples.append(ImageSample(px.astype(np.float32), c, split=split))
    return Dataset(tuple(samples), num_classes=num_classes)


# --- confusion matrix and scores ---


def test_confusion_matrix_matches_counting_oracle():
    rng = np.random.default_rng(0)
    for _ in range(50):
        k = int(rng.integers(2, 12))
        n = int(rng.integers(1, 400))
        true = rng.integers(0, k, n)
        pred = rng.integers(0, k, n)
        cm = confusion_matrix(true, pred, k)
        assert np.array_equal(cm.counts, counting_oracle(true, pred, k))


def test_confusion_matrix_row_sums_are_class_counts():
    rng = np.random.default_rng(1)
    true = rng.integers(0, 5, 300)
    pred = rng.integers(0, 5, 300)
    cm = confusion_matrix(true, pred, 5)
    assert np.array_equal(cm.counts.sum(axis=1), np.bincount(true, minlength=5))
    assert cm.total == 300


def test_confusion_matrix_rejects_out_of_range_labels():
    with pytest.raises(ValidationError):
        confusion_matrix([0, 3], [0, 1], 3)
    with pytest.raises(ValidationError):
        confusion_matrix([0, 1], [-1, 1], 3)
    with pytest.raises(ValidationError):
        confusion_matrix([0, 1], [0], 3)


def test_confusion_matrix_validates_contents():
    with pytest.raises(ValidationError):
        ConfusionMatrix(np.array([[1, 2, 3], [4, 5, 6]]))
    with pytest.raises(ValidationError):
        ConfusionMatrix(np.array([[1, -2], [0, 3]]))


def test_accuracy_and_balanced_on_known_matrix():
    cm = ConfusionMatrix(np.array([[5, 5], [0, 10]]))
    assert accuracy(cm) == 0.75
    assert balanced_accuracy(cm) == 0.75  # recalls 0.5 and 1.0


def test_balanced_accuracy_zero_row_policies():
    cm = ConfusionMatrix(np.array([[4, 0, 0], [1, 3, 0], [0, 0, 0]]))
    assert balanced_accuracy(cm, "exclude") == pytest.approx((1.0 + 0.75) / 2)
    assert balanced_accuracy(cm, "as_zero") == pytest.approx((1.0 + 0.75) / 3)
    with pytest.raises(ConfigError):
        balanced_accuracy(cm, "drop")
    with pytest.raises(ValidationError):
        balanced_accuracy(ConfusionMatrix(np.zeros((2, 2), dtype=np.int64)))


def test_balanced_accuracy_ignores_row_scale():
    base = np.array([[8, 2], [3, 7]])
    scaled = base.copy()
    scaled[0] *= 5  # five times more test samples for class 0
    a = balanced_accuracy(ConfusionMatrix(base))
    b = balanced_accuracy(ConfusionMatrix(scaled))
    assert a == pytest.approx(b)
    assert accuracy(ConfusionMatrix(base)) != accuracy(ConfusionMatrix(scaled))


def test_uniform_class_counts_make_both_scores_agree():
    rng = np.random.default_rng(2)
    k, per = 4, 30
    true = np.repeat(np.arange(k), per)
    pred = rng.integers(0, k, k * per)
    cm = confusion_matrix(true, pred, k)
    assert accuracy(cm) == pytest.approx(balanced_accuracy(cm))


def test_scores_are_permutation_invariant():
    rng = np.random.default_rng(3)
    true = rng.integers(0, 4, 200)
    pred = rng.integers(0, 4, 200)
    perm = rng.permutation(4)
    a = confusion_matrix(true, pred, 4)
    b = confusion_matrix(perm[true], perm[pred], 4)
    assert accuracy(a) == pytest.approx(accuracy(b))
    assert balanced_accuracy(a) == pytest.approx(balanced_accuracy(b))


def test_run_stats_from_values():
    values = [0.7, 0.8, 0.9, 0.6]
    stats = RunStats.from_values(values)
    assert stats.mean == pytest.approx(np.mean(values))
    assert stats.std == pytest.approx(np.std(values, ddof=1))
    assert (stats.min, stats.max, stats.n_runs) == (0.6, 0.9, 4)
    single = RunStats.from_values([0.5])
    assert single.std == 0.0 and single.n_runs == 1
    with pytest.raises(ValidationError):
        RunStats.from_values([])
    with pytest.raises(ValidationError):
        RunStats(mean=0.9, std=0.1, min=0.5, max=0.8, n_runs=3)


def test_median_run_index_lower_median_and_stability():
    assert median_run_index([0.3, 0.1, 0.2]) == 2
    assert median_run_index([0.5, 0.5, 0.1]) == 0  # tie keeps first occurrence
    assert median_run_index([0.4, 0.1, 0.3, 0.2]) == 3  # even count: lower median
    assert median_run_index([0.9]) == 0
    with pytest.raises(ValidationError):
        median_run_index([])


# --- experiment orchestration ---


def test_run_experiment_none_vs_classic_bookkeeping():
    ds = toy_dataset()
    plain = run_experiment("none", ds, repeats=2, **FAST_CLS)
    doubled = run_experiment("contrast", ds, repeats=2, **FAST_CLS)
    n_train = len(ds.split_subset("train"))
    assert plain.n_train_samples == n_train
    assert doubled.n_train_samples == 2 * n_train
    assert plain.accuracy.n_runs == 2
    assert len(plain.per_run_accuracies) == 2
    assert plain.seeds == (1, 2)
    assert plain.confusion.total == len(ds.split_subset("test"))


def test_run_experiment_is_repeatable():
    ds = toy_dataset()
    a = run_experiment("rotation", ds, repeats=2, **FAST_CLS)
    b = run_experiment("rotation", ds, repeats=2, **FAST_CLS)
    assert a.per_run_accuracies == b.per_run_accuracies
    assert np.array_equal(a.confusion.counts, b.confusion.counts)


def test_run_experiment_median_confusion_matches_median_accuracy():
    ds = toy_dataset()
    row = run_experiment("none", ds, repeats=3, **FAST_CLS)
    idx = median_run_index(row.per_run_accuracies)
    assert accuracy(row.confusion) == pytest.approx(row.per_run_accuracies[idx])


def test_run_experiment_rejects_unknown_technique_and_missing_gan():
    ds = toy_dataset()
    with pytest.raises(ConfigError):
        run_experiment("mixup", ds, repeats=1, **FAST_CLS)
    with pytest.raises(ConfigError):
        run_experiment("pix2pix", ds, repeats=1, **FAST_CLS)


def test_run_experiment_validates_seeds_and_splits():
    ds = toy_dataset()
    with pytest.raises(ValidationError):
        run_experiment("none", ds, repeats=3, seeds=(1, 2), **FAST_CLS)
    train_only = Dataset(ds.split_subset("train").samples, num_classes=ds.num_classes)
    with pytest.raises(ValidationError):
        run_experiment("none", train_only, repeats=1, **FAST_CLS)


def test_run_benchmark_collects_rows_in_order():
    ds = toy_dataset()
    report = run_benchmark(("none", "brightness"), ds, repeats=2, **FAST_CLS)
    assert [r.technique for r in report.rows] == ["none", "brightness"]
    assert report.num_classes == 3
    assert report.n_test_samples == len(ds.split_subset("test"))


def test_sweep_gan_runs_each_cell_and_counts_pool():
    ds = toy_dataset()
    library = {c: load_template("circular", c) for c in range(3)}
    pairs = tuple(
        PairedSample(render_symbolic(library[s.class_index], 16), s.pixels, s.class_index)
        for s in ds.split_subset("train").samples
    )
    result = sweep_gan(
        ds,
        pairs,
        grid=[(3, 4), (3, 2)],
        repeats=2,
        gan_hyper=GanHyperparams(epochs=1, batch_size=8),
        gan_base_channels=4,
        classifier_config=FAST_CLS["classifier_config"],
        classifier_hyper=FAST_CLS["classifier_hyper"],
    )
    assert [(c.n_d, c.n_g) for c in result.cells] == [(3, 2), (3, 4)]  # sorted grid
    n_train = len(ds.split_subset("train"))
    for cell in result.cells:
        assert cell.n_train_samples == n_train + len(pairs)
        assert cell.accuracy.n_runs == 2
    table = render_sweep(result)
    assert "Disc Layers" in table and "Balanced Acc (%)" in table
    assert table == render_sweep(sweep_from_dict(sweep_to_dict(result)))


# --- rendering and serialization ---


def fixed_report():
    def stats(mean, std, lo, hi):
        return RunStats(mean=mean, std=std, min=lo, max=hi, n_runs=3)

    rows = (
        TechniqueResult(
            technique="none",
            n_train_samples=500,
            accuracy=stats(0.815, 0.0123, 0.80, 0.83),
            balanced_accuracy=stats(0.80, 0.01, 0.79, 0.81),
            per_run_accuracies=(0.80, 0.815, 0.83),
            per_run_balanced=(0.79, 0.80, 0.81),
            seeds=(1, 2, 3),
            confusion=ConfusionMatrix(np.array([[8, 2], [1, 9]])),
        ),
        TechniqueResult(
            technique="pix2pix",
            n_train_samples=1000,
            accuracy=stats(0.90, 0.02, 0.88, 0.92),
            balanced_accuracy=stats(0.89, 0.02, 0.87, 0.91),
            per_run_accuracies=(0.88, 0.90, 0.92),
            per_run_balanced=(0.87, 0.89, 0.91),
            seeds=(1, 2, 3),
            confusion=ConfusionMatrix(np.array([[9, 1], [1, 9]])),
        ),
    )
    return ExperimentReport(rows=rows, num_classes=2, n_test_samples=20)


GOLDEN_TABLE = (
    "Augmentation  # of Samples  Accuracy (%)  Min   Max\n"
    "------------  ------------  ------------  ----  ----\n"
    "None          500           81.5 ± 1.2    80.0  83.0\n"
    "Pix2pix GAN   1000          90.0 ± 2.0    88.0  92.0\n"
)


def test_render_report_golden_bytes():
    report = fixed_report()
    assert render_report(report) == GOLDEN_TABLE
    assert render_report(report) == render_report(report)


def test_render_report_capitalizes_classic_techniques():
    report = fixed_report()
    renamed = TechniqueResult(
        technique="contrast",
        n_train_samples=1000,
        accuracy=report.rows[0].accuracy,
        balanced_accuracy=report.rows[0].balanced_accuracy,
        per_run_accuracies=report.rows[0].per_run_accuracies,
        per_run_balanced=report.rows[0].per_run_balanced,
        seeds=(1, 2, 3),
        confusion=report.rows[0].confusion,
    )
    table = render_report(ExperimentReport((renamed,), 2, 20))
    assert "\nContrast" in table


def test_render_report_writes_one_heatmap_per_row(tmp_path):
    render_report(fixed_report(), out_dir=tmp_path)
    assert (tmp_path / "confusion_none.png").is_file()
    assert (tmp_path / "confusion_pix2pix.png").is_file()


def test_save_heatmap_layout_and_stability(tmp_path):
    cm = ConfusionMatrix(np.array([[10, 0], [2, 8]]))
    a, b = tmp_path / "a.png", tmp_path / "b.png"
    save_heatmap(cm, a)
    save_heatmap(cm, b)
    assert a.read_bytes() == b.read_bytes()
    img = np.asarray(Image.open(a))
    assert img.shape == (512, 512, 3)  # 2 classes at 256 px per cell
    # perfect row 0: left cell saturated blue, right cell white
    assert tuple(img[10, 10]) == (50, 125, 255)
    assert tuple(img[10, 300]) == (255, 255, 255)


def test_report_dict_round_trip():
    report = fixed_report()
    data = report_to_dict(report)
    back = report_from_dict(data)
    assert render_report(back) == render_report(report)
    assert back.rows[0].per_run_accuracies == report.rows[0].per_run_accuracies
    assert np.array_equal(back.rows[1].confusion.counts, report.rows[1].confusion.counts)
    with pytest.raises(ValidationError):
        report_from_dict({"rows": [{}], "num_classes": 2, "n_test_samples": 5})
