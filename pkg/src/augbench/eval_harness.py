"""Experiment orchestration: repeated training runs, metrics, and reports.

A benchmark row is one augmentation technique: the training split is
augmented once, the classifier is trained `repeats` times with distinct
seeds, and every run is scored on the untouched test split. Aggregates use
the sample standard deviation (n-1 denominator; a single run reports 0).
The architecture sweep follows the same scheme per (n_d, n_g) grid cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .classic_augment import TECHNIQUES, AugmentationSpec, augment_dataset
from .dataset_io import Dataset, ImageSample
from .errors import ConfigError, ValidationError
from .pix2pix_gan import (
    DiscriminatorConfig,
    GanHyperparams,
    GeneratorConfig,
    gan_augment_dataset,
    generate,
    train_gan,
)
from .squeezenet_classifier import (
    ClassifierConfig,
    TrainHyperparams,
    predict,
    train_classifier,
)

EXPERIMENT_TECHNIQUES = ("none",) + TECHNIQUES + ("pix2pix",)

_ROW_LABELS = {"none": "None", "pix2pix": "Pix2pix GAN"}


@dataclass(frozen=True)
class ConfusionMatrix:
    """K x K counts; rows index the true class, columns the prediction."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or counts.shape[0] < 1:
            raise ValidationError(f"confusion matrix must be square, got shape {counts.shape}")
        if not np.issubdtype(counts.dtype, np.integer):
            raise ValidationError(f"confusion matrix counts must be integers, got {counts.dtype}")
        if (counts < 0).any():
            raise ValidationError("confusion matrix counts must be non-negative")
        counts = counts.astype(np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class RunStats:
    mean: float
    std: float
    min: float
    max: float
    n_runs: int

    def __post_init__(self):
        if self.n_runs < 1:
            raise ValidationError(f"n_runs must be >= 1, got {self.n_runs}")
        if not (self.min <= self.mean <= self.max) or self.std < 0:
            raise ValidationError(
                f"inconsistent stats: mean={self.mean}, std={self.std}, "
                f"min={self.min}, max={self.max}"
            )

    @classmethod
    def from_values(cls, values) -> "RunStats":
        values = [float(v) for v in values]
        if not values:
            raise ValidationError("cannot aggregate an empty run list")
        n = len(values)
        mean = sum(values) / n
        std = math.sqrt(sum((v - mean) ** 2 for v in values) / (n - 1)) if n > 1 else 0.0
        return cls(mean=mean, std=std, min=min(values), max=max(values), n_runs=n)


@dataclass(frozen=True)
class TechniqueResult:
    """One benchmark row: a technique with its aggregated run outcomes."""

    technique: str
    n_train_samples: int
    accuracy: RunStats
    balanced_accuracy: RunStats
    per_run_accuracies: tuple
    per_run_balanced: tuple
    seeds: tuple
    confusion: ConfusionMatrix


@dataclass(frozen=True)
class ExperimentReport:
    rows: tuple
    num_classes: int
    n_test_samples: int


@dataclass(frozen=True)
class SweepCell:
    n_d: int
    n_g: int
    n_train_samples: int
    accuracy: RunStats
    balanced_accuracy: RunStats
    per_run_accuracies: tuple
    per_run_balanced: tuple
    seeds: tuple


@dataclass(frozen=True)
class SweepResult:
    cells: tuple
    num_classes: int
    n_test_samples: int


# --- metrics -----------------------------------------------------------------


def confusion_matrix(true_labels, predicted_labels, num_classes: int) -> ConfusionMatrix:
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape or true.ndim != 1:
        raise ValidationError(
            f"label arrays must be 1-d and equal length, got {true.shape} vs {pred.shape}"
        )
    if num_classes < 1:
        raise ValidationError(f"num_classes must be >= 1, got {num_classes}")
    for name, arr in (("true", true), ("predicted", pred)):
        if arr.size and (arr.min() < 0 or arr.max() >= num_classes):
            raise ValidationError(f"{name} labels must lie in [0, {num_classes})")
    counts = np.bincount(true * num_classes + pred, minlength=num_classes * num_classes)
    return ConfusionMatrix(counts.reshape(num_classes, num_classes))


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.total == 0:
        raise ValidationError("accuracy is undefined for an empty confusion matrix")
    return float(np.trace(cm.counts) / cm.total)


def balanced_accuracy(cm: ConfusionMatrix, zero_count_classes: str = "exclude") -> float:
    """Macro-averaged recall over classes with test samples.

    zero_count_classes: "exclude" drops empty rows from the average,
    "as_zero" counts them as recall 0.
    """
    if zero_count_classes not in ("exclude", "as_zero"):
        raise ConfigError(f"unknown zero_count_classes policy {zero_count_classes!r}")
    row_sums = cm.counts.sum(axis=1)
    populated = row_sums > 0
    if not populated.any():
        raise ValidationError("balanced accuracy is undefined when all rows are empty")
    recalls = np.diag(cm.counts)[populated] / row_sums[populated]
    if zero_count_classes == "as_zero":
        return float(recalls.sum() / cm.num_classes)
    return float(recalls.mean())


def median_run_index(values) -> int:
    """Index of the run holding the lower-median value (stable under ties)."""
    values = list(values)
    if not values:
        raise ValidationError("no runs to take a median over")
    order = np.argsort(np.asarray(values), kind="stable")
    return int(order[(len(values) - 1) // 2])


# --- experiment orchestration -------------------------------------------------


def run_experiment(
    technique: str,
    base: Dataset,
    repeats: int = 5,
    seeds=None,
    *,
    classifier_config: ClassifierConfig | None = None,
    classifier_hyper: TrainHyperparams = TrainHyperparams(),
    augmentation_seed: int = 0,
    param_ranges: dict | None = None,
    gan_model=None,
    templates=None,
) -> TechniqueResult:
    """Benchmark one technique: augment once, train `repeats` times, score.

    "none" trains on the raw split; the seven classical techniques and
    "pix2pix" double it first. pix2pix requires gan_model and templates.
    """
    if technique not in EXPERIMENT_TECHNIQUES:
        raise ConfigError(
            f"unknown technique {technique!r}; expected one of {', '.join(EXPERIMENT_TECHNIQUES)}"
        )
    seeds = _resolve_seeds(repeats, seeds)
    train = base.split_subset("train")
    test = base.split_subset("test")
    if len(train) == 0 or len(test) == 0:
        raise ValidationError("experiment needs non-empty train and test splits")

    if technique == "none":
        augmented = train
    elif technique == "pix2pix":
        if gan_model is None or templates is None:
            raise ConfigError("technique pix2pix requires gan_model and templates")
        augmented = gan_augment_dataset(gan_model, train, templates)
    else:
        spec = AugmentationSpec(technique, seed=augmentation_seed, param_ranges=param_ranges or {})
        augmented = augment_dataset(train, spec)

    config = classifier_config or ClassifierConfig(num_classes=base.num_classes)
    accs, bals, cms = _repeat_runs(augmented, test, config, classifier_hyper, seeds)
    median = median_run_index(accs)
    return TechniqueResult(
        technique=technique,
        n_train_samples=len(augmented),
        accuracy=RunStats.from_values(accs),
        balanced_accuracy=RunStats.from_values(bals),
        per_run_accuracies=tuple(accs),
        per_run_balanced=tuple(bals),
        seeds=seeds,
        confusion=cms[median],
    )


def run_benchmark(techniques, base: Dataset, repeats: int = 5, seeds=None, **kwargs) -> ExperimentReport:
    """run_experiment over a technique list, collected into one report."""
    rows = tuple(
        run_experiment(technique, base, repeats=repeats, seeds=seeds, **kwargs)
        for technique in techniques
    )
    return ExperimentReport(
        rows=rows,
        num_classes=base.num_classes,
        n_test_samples=len(base.split_subset("test")),
    )


def sweep_augment(gan_model, train: Dataset, pairs) -> Dataset:
    """Extend a training pool with one generated sample per GAN pair."""
    pairs = tuple(pairs)
    if not pairs:
        raise ValidationError("sweep needs a non-empty pair collection")
    extra = tuple(
        ImageSample(generate(gan_model, pair.symbolic), pair.class_index, split="train")
        for pair in pairs
    )
    return Dataset(
        train.samples + extra, num_classes=train.num_classes, shape_family=train.shape_family
    )


def sweep_gan(
    base: Dataset,
    gan_pairs,
    grid,
    repeats: int = 5,
    seeds=None,
    *,
    gan_hyper: GanHyperparams = GanHyperparams(),
    gan_base_channels: int = 64,
    gan_seed: int = 0,
    classifier_config: ClassifierConfig | None = None,
    classifier_hyper: TrainHyperparams = TrainHyperparams(),
) -> SweepResult:
    """Train one GAN per (n_d, n_g) cell and benchmark the augmented pool."""
    grid = sorted(set((int(nd), int(ng)) for nd, ng in grid))
    if not grid:
        raise ValidationError("sweep grid is empty")
    seeds = _resolve_seeds(repeats, seeds)
    train = base.split_subset("train")
    test = base.split_subset("test")
    if len(train) == 0 or len(test) == 0:
        raise ValidationError("sweep needs non-empty train and test splits")
    gan_pairs = tuple(gan_pairs)
    if not gan_pairs:
        raise ValidationError("sweep needs a non-empty pair collection")
    input_size = int(gan_pairs[0].symbolic.shape[0])
    config = classifier_config or ClassifierConfig(num_classes=base.num_classes)

    cells = []
    for n_d, n_g in grid:
        g_cfg = GeneratorConfig(n_g, base_channels=gan_base_channels, input_size=input_size)
        d_cfg = DiscriminatorConfig(n_d, base_channels=gan_base_channels)
        model = train_gan(gan_pairs, g_cfg, d_cfg, gan_hyper, seed=gan_seed)
        augmented = sweep_augment(model, train, gan_pairs)
        accs, bals, _ = _repeat_runs(augmented, test, config, classifier_hyper, seeds)
        cells.append(
            SweepCell(
                n_d=n_d,
                n_g=n_g,
                n_train_samples=len(augmented),
                accuracy=RunStats.from_values(accs),
                balanced_accuracy=RunStats.from_values(bals),
                per_run_accuracies=tuple(accs),
                per_run_balanced=tuple(bals),
                seeds=seeds,
            )
        )
    return SweepResult(cells=tuple(cells), num_classes=base.num_classes, n_test_samples=len(test))


def _repeat_runs(train: Dataset, test: Dataset, config, hyper, seeds):
    test_pixels = np.stack([s.pixels for s in test.samples])
    test_labels = np.array([s.class_index for s in test.samples])
    accs, bals, cms = [], [], []
    for seed in seeds:
        history = train_classifier(train, config, hyper, seed=seed)
        predicted = predict(history.network, test_pixels)
        cm = confusion_matrix(test_labels, predicted, config.num_classes)
        accs.append(accuracy(cm))
        bals.append(balanced_accuracy(cm))
        cms.append(cm)
    return accs, bals, cms


def _resolve_seeds(repeats: int, seeds) -> tuple:
    if seeds is None:
        if repeats < 1:
            raise ValidationError(f"repeats must be >= 1, got {repeats}")
        return tuple(range(1, repeats + 1))
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) != repeats or not seeds:
        raise ValidationError(f"expected {repeats} seeds, got {len(seeds)}")
    return seeds


# --- report rendering ---------------------------------------------------------


def render_report(report: ExperimentReport, out_dir=None) -> str:
    """Fixed-width benchmark table; one confusion heatmap PNG per row.

    Output depends only on the report contents, so repeated renders are
    byte-identical. PNGs are written when out_dir is given.
    """
    header = ("Augmentation", "# of Samples", "Accuracy (%)", "Min", "Max")
    rows = []
    for row in report.rows:
        rows.append(
            (
                _ROW_LABELS.get(row.technique, row.technique.capitalize()),
                str(row.n_train_samples),
                _mu_sigma(row.accuracy),
                _pct(row.accuracy.min),
                _pct(row.accuracy.max),
            )
        )
    table = _format_table(header, rows)
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for row in report.rows:
            save_heatmap(row.confusion, out_dir / f"confusion_{row.technique}.png")
    return table


def render_sweep(result: SweepResult) -> str:
    header = (
        "Disc Layers",
        "Gen Layers",
        "Accuracy (%)",
        "Min",
        "Max",
        "Balanced Acc (%)",
        "Bal Min",
        "Bal Max",
        "# of Samples",
    )
    rows = []
    for cell in result.cells:
        rows.append(
            (
                str(cell.n_d),
                str(cell.n_g),
                _mu_sigma(cell.accuracy),
                _pct(cell.accuracy.min),
                _pct(cell.accuracy.max),
                _mu_sigma(cell.balanced_accuracy),
                _pct(cell.balanced_accuracy.min),
                _pct(cell.balanced_accuracy.max),
                str(cell.n_train_samples),
            )
        )
    return _format_table(header, rows)


def save_heatmap(cm: ConfusionMatrix, path, cell_pixels: int | None = None) -> None:
    """Row-normalized confusion heatmap as a PNG (white = 0, blue = 1)."""
    counts = cm.counts.astype(np.float64)
    row_sums = counts.sum(axis=1, keepdims=True)
    norm = np.divide(counts, row_sums, out=np.zeros_like(counts), where=row_sums > 0)
    k = cm.num_classes
    scale = cell_pixels or max(4, 512 // k)
    v = np.rint(norm * 255).astype(np.int64)  # wider than uint8: v * 205 must not wrap
    rgb = np.stack([255 - (v * 205) // 255, 255 - (v * 130) // 255, np.full_like(v, 255)], axis=2)
    img = Image.fromarray(rgb.astype(np.uint8), "RGB").resize((k * scale, k * scale), Image.NEAREST)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PNG")


def report_to_dict(report: ExperimentReport) -> dict:
    return {
        "num_classes": report.num_classes,
        "n_test_samples": report.n_test_samples,
        "rows": [
            {
                "technique": row.technique,
                "n_train_samples": row.n_train_samples,
                "seeds": list(row.seeds),
                "accuracy": _stats_dict(row.accuracy),
                "balanced_accuracy": _stats_dict(row.balanced_accuracy),
                "per_run_accuracies": list(row.per_run_accuracies),
                "per_run_balanced": list(row.per_run_balanced),
                "median_run_confusion": row.confusion.counts.tolist(),
            }
            for row in report.rows
        ],
    }


def sweep_to_dict(result: SweepResult) -> dict:
    return {
        "num_classes": result.num_classes,
        "n_test_samples": result.n_test_samples,
        "cells": [
            {
                "n_d": cell.n_d,
                "n_g": cell.n_g,
                "n_train_samples": cell.n_train_samples,
                "seeds": list(cell.seeds),
                "accuracy": _stats_dict(cell.accuracy),
                "balanced_accuracy": _stats_dict(cell.balanced_accuracy),
                "per_run_accuracies": list(cell.per_run_accuracies),
                "per_run_balanced": list(cell.per_run_balanced),
            }
            for cell in result.cells
        ],
    }


def report_from_dict(data: dict) -> ExperimentReport:
    try:
        rows = tuple(
            TechniqueResult(
                technique=row["technique"],
                n_train_samples=int(row["n_train_samples"]),
                accuracy=_stats_from_dict(row["accuracy"]),
                balanced_accuracy=_stats_from_dict(row["balanced_accuracy"]),
                per_run_accuracies=tuple(row["per_run_accuracies"]),
                per_run_balanced=tuple(row["per_run_balanced"]),
                seeds=tuple(row["seeds"]),
                confusion=ConfusionMatrix(np.asarray(row["median_run_confusion"], dtype=np.int64)),
            )
            for row in data["rows"]
        )
        return ExperimentReport(rows, int(data["num_classes"]), int(data["n_test_samples"]))
    except KeyError as exc:
        raise ValidationError(f"results record missing field {exc}") from exc


def sweep_from_dict(data: dict) -> SweepResult:
    try:
        cells = tuple(
            SweepCell(
                n_d=int(cell["n_d"]),
                n_g=int(cell["n_g"]),
                n_train_samples=int(cell["n_train_samples"]),
                accuracy=_stats_from_dict(cell["accuracy"]),
                balanced_accuracy=_stats_from_dict(cell["balanced_accuracy"]),
                per_run_accuracies=tuple(cell["per_run_accuracies"]),
                per_run_balanced=tuple(cell["per_run_balanced"]),
                seeds=tuple(cell["seeds"]),
            )
            for cell in data["cells"]
        )
        return SweepResult(cells, int(data["num_classes"]), int(data["n_test_samples"]))
    except KeyError as exc:
        raise ValidationError(f"sweep record missing field {exc}") from exc


def _stats_from_dict(data: dict) -> RunStats:
    return RunStats(
        mean=float(data["mean"]),
        std=float(data["std"]),
        min=float(data["min"]),
        max=float(data["max"]),
        n_runs=int(data["n_runs"]),
    )


def _stats_dict(stats: RunStats) -> dict:
    return {
        "mean": stats.mean,
        "std": stats.std,
        "min": stats.min,
        "max": stats.max,
        "n_runs": stats.n_runs,
    }


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}"


def _mu_sigma(stats: RunStats) -> str:
    return f"{_pct(stats.mean)} ± {_pct(stats.std)}"


def _format_table(header, rows) -> str:
    widths = [len(h) for h in header]
    for row in rows:
        widths = [max(w, len(cell)) for w, cell in zip(widths, row)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"
