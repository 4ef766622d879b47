"""Acceptance gate: eight end-to-end criteria, one test (and one pytest -v
line) per criterion. Each test also prints an uncaptured PASS/FAIL line so
the verdicts survive output capture. Budgets are asserted in wall-clock
time; numeric tolerances are stated next to each assertion."""

import contextlib
import math
import time

import numpy as np
import pytest
import torch

from augbench.classic_augment import TECHNIQUES, AugmentationSpec, apply_op, augment_dataset
from augbench.dataset_io import Dataset, ImageSample, merge_datasets
from augbench.eval_harness import (
    accuracy,
    balanced_accuracy,
    confusion_matrix,
    render_report,
    render_sweep,
    run_benchmark,
    sweep_gan,
)
from augbench.pix2pix_gan import (
    SWEEP_DISCRIMINATOR_DEPTHS,
    SWEEP_GENERATOR_DEPTHS,
    DiscriminatorConfig,
    GanHyperparams,
    GeneratorConfig,
    build_discriminator,
    build_generator,
    generate,
    l1_term,
    train_gan,
)
from augbench.sign_renderer import (
    PairedSample,
    build_pairs,
    build_synthetic_dataset,
    load_template_library,
    render_symbolic,
)
from augbench.squeezenet_classifier import (
    ClassifierConfig,
    TrainHyperparams,
    train_classifier,
)


@contextlib.contextmanager
def verdict(capsys, number, label):
    try:
        yield
    except BaseException:
        with capsys.disabled():
            print(f"criterion {number} ({label}): FAIL")
        raise
    with capsys.disabled():
        print(f"criterion {number} ({label}): PASS")


# --- criterion 1: metric implementations match brute-force oracles ---


def test_criterion_1_metric_oracles(capsys):
    with verdict(capsys, 1, "metric oracle equivalence"):
        started = time.time()
        rng = np.random.default_rng(100)
        for _ in range(100):
            k = int(rng.integers(2, 21))
            n = int(rng.integers(1, 5001))
            true = rng.integers(0, k, n)
            pred = rng.integers(0, k, n)

            cm = confusion_matrix(true, pred, k)
            oracle = np.zeros((k, k), dtype=np.int64)
            for t, p in zip(true, pred):
                oracle[t, p] += 1
            assert np.array_equal(cm.counts, oracle)

            assert math.isclose(accuracy(cm), float(np.mean(true == pred)), abs_tol=1e-12)

            recalls = []
            for c in range(k):
                mask = true == c
                if mask.any():
                    recalls.append(float(np.mean(pred[mask] == c)))
            assert math.isclose(balanced_accuracy(cm), float(np.mean(recalls)), abs_tol=1e-12)
        assert time.time() - started < 10.0


# --- criterion 2: augmentation property suite ---


def _blur_oracle(img, sigma):
    radius = math.ceil(3.0 * sigma)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    kernel = np.outer(kernel, kernel)
    kernel /= kernel.sum()
    src = np.pad(
        img.astype(np.float64), ((radius, radius), (radius, radius), (0, 0)), mode="edge"
    )
    out = np.zeros(img.shape, dtype=np.float64)
    for r in range(img.shape[0]):
        for c in range(img.shape[1]):
            window = src[r : r + 2 * radius + 1, c : c + 2 * radius + 1]
            out[r, c] = (window * kernel[:, :, None]).sum(axis=(0, 1))
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def test_criterion_2_augmentation_properties(capsys):
    with verdict(capsys, 2, "augmentation property suite"):
        started = time.time()
        ds = build_synthetic_dataset("circular", 12, 0, num_classes=4, seed=2)
        img = ds.samples[0].pixels

        # identity parameters reproduce the input exactly
        assert np.array_equal(apply_op(img, "blur", (0.0,)), img)
        assert np.array_equal(apply_op(img, "displacement", (0.0, 0.0)), img)
        assert np.array_equal(apply_op(img, "rotation", (0.0,)), img)
        assert np.array_equal(apply_op(img, "scaling", (1.0,)), img)
        assert np.allclose(apply_op(img, "brightness", (0.0,)), img, atol=1e-6)
        assert np.allclose(apply_op(img, "contrast", (1.0,)), img, atol=1e-6)

        # near-zero blur collapses to the identity within 1e-6
        assert np.abs(apply_op(img, "blur", (0.05,)).astype(np.float64) - img).max() < 1e-6

        # separable blur equals a direct 2d convolution within 1e-5
        for sigma in (0.8, 1.5):
            got = apply_op(img, "blur", (sigma,)).astype(np.float64)
            assert np.abs(got - _blur_oracle(img, sigma)).max() < 1e-5
        small = np.random.default_rng(3).uniform(0, 1, (16, 16, 3)).astype(np.float32)
        got = apply_op(small, "blur", (2.0,)).astype(np.float64)
        assert np.abs(got - _blur_oracle(small, 2.0)).max() < 1e-5

        # doubling, label multiset, and bit-reproducibility for all techniques
        for technique in TECHNIQUES:
            spec = AugmentationSpec(technique, seed=7)
            out = augment_dataset(ds, spec)
            assert len(out) == 2 * len(ds)
            assert out.samples[: len(ds)] == ds.samples
            copies = out.samples[len(ds) :]
            assert sorted(s.class_index for s in copies) == sorted(
                s.class_index for s in ds.samples
            )
            again = augment_dataset(ds, spec)
            for x, y in zip(out.samples, again.samples):
                assert np.array_equal(x.pixels, y.pixels)
        assert time.time() - started < 60.0


# --- criterion 3: GAN architecture contracts over the benchmark grid ---


def test_criterion_3_gan_contracts(capsys):
    with verdict(capsys, 3, "GAN architecture contracts"):
        started = time.time()
        torch.manual_seed(0)
        x = torch.rand(2, 3, 64, 64) * 2 - 1
        for n_g in SWEEP_GENERATOR_DEPTHS:
            g = build_generator(GeneratorConfig(n_g, base_channels=8, input_size=64))
            with torch.no_grad():
                out = g(x)
            assert out.shape == (2, 3, 64, 64)
            assert out.min() >= -1.0 and out.max() <= 1.0
        for n_d in SWEEP_DISCRIMINATOR_DEPTHS:
            d = build_discriminator(DiscriminatorConfig(n_d, base_channels=8))
            with torch.no_grad():
                grid = d(x, x)
                decision = d.decision(x, x)
            side = 64 // 2**n_d
            assert grid.shape == (2, side, side)
            assert grid.min() >= 0.0 and grid.max() <= 1.0
            # decision equals the patch-grid mean within 1e-6
            assert np.abs(decision.numpy() - grid.numpy().mean(axis=(1, 2))).max() < 1e-6
        assert time.time() - started < 120.0


# --- criterion 4: generator gradients match finite differences ---


def test_criterion_4_gradient_check(capsys):
    with verdict(capsys, 4, "generator gradient check"):
        torch.manual_seed(4)
        g = build_generator(GeneratorConfig(2, base_channels=4, input_size=8)).double().eval()
        rng = np.random.default_rng(4)
        sym = torch.from_numpy(rng.uniform(-1, 1, (2, 3, 8, 8)))
        real = torch.from_numpy(rng.uniform(-1, 1, (2, 3, 8, 8)))

        loss = l1_term(g, sym, real)
        g.zero_grad()
        loss.backward()
        params = [p for p in g.parameters() if p.grad is not None]
        analytic = torch.cat([p.grad.flatten() for p in params]).numpy()
        flat = torch.cat([p.detach().flatten() for p in params])

        def loss_at(vec):
            offset = 0
            with torch.no_grad():
                for p in params:
                    n = p.numel()
                    p.copy_(vec[offset : offset + n].view_as(p))
                    offset += n
                return l1_term(g, sym, real).item()

        coords = rng.choice(np.flatnonzero(np.abs(analytic) > 1e-4), size=20, replace=False)
        eps = 1e-5
        for c in coords:
            bumped = flat.clone()
            bumped[c] += eps
            up = loss_at(bumped)
            bumped[c] -= 2 * eps
            down = loss_at(bumped)
            fd = (up - down) / (2 * eps)
            # relative error within 1e-3 per coordinate
            assert abs(fd - analytic[c]) <= 1e-3 * max(abs(fd), abs(analytic[c]))


# --- criterion 5: toy GAN training makes measurable progress ---


def test_criterion_5_toy_gan_descent(capsys):
    with verdict(capsys, 5, "toy GAN descent"):
        started = time.time()
        ds = build_synthetic_dataset("circular", 200, 0, num_classes=10, seed=0)
        library = load_template_library("circular")
        pairs = build_pairs(ds, library)
        assert len(pairs) == 200

        model = train_gan(
            pairs,
            GeneratorConfig(4, base_channels=32),
            DiscriminatorConfig(3, base_channels=32),
            GanHyperparams(epochs=20, batch_size=16),
            seed=0,
        )
        l1 = model.history["g_l1"]
        assert len(l1) == 20
        for key in ("d_loss", "g_adv", "g_l1"):
            assert all(np.isfinite(v) for v in model.history[key])
        # the reconstruction term must drop to at most 0.7x its first epoch
        assert l1[-1] <= 0.7 * l1[0], f"final l1 {l1[-1]:.4f} vs first {l1[0]:.4f}"

        sym = render_symbolic(library[3], 64)
        assert np.array_equal(generate(model, sym), generate(model, sym))
        assert time.time() - started < 900.0


# --- criterion 6: classifier overfits a tiny set under the default regimen ---


def test_criterion_6_classifier_overfit(capsys):
    with verdict(capsys, 6, "classifier overfit"):
        started = time.time()
        ds = build_synthetic_dataset("circular", 50, 0, num_classes=5, seed=6)
        history = train_classifier(
            ds,
            ClassifierConfig(num_classes=5),
            TrainHyperparams(),  # the benchmark regimen: Adam 0.01, 100 epochs
            seed=0,
        )
        assert len(history.losses) == 100
        assert history.accuracies[-1] >= 0.95
        assert time.time() - started < 300.0


# --- criterion 7: desk-scale end-to-end benchmark, byte-stable ---


def _desk_scale_run():
    base = build_synthetic_dataset("circular", 500, 500, num_classes=10, seed=1)
    library = load_template_library("circular")
    gan = train_gan(
        build_pairs(base.split_subset("train"), library),
        GeneratorConfig(4, base_channels=16),
        DiscriminatorConfig(3, base_channels=16),
        GanHyperparams(epochs=2, batch_size=16),
        seed=0,
    )
    report = run_benchmark(
        ("none", "contrast", "displacement", "pix2pix"),
        base,
        repeats=3,
        classifier_config=ClassifierConfig(num_classes=10),
        classifier_hyper=TrainHyperparams(epochs=6, batch_size=64),
        gan_model=gan,
        templates=library,
    )
    return render_report(report), report


def test_criterion_7_end_to_end_benchmark(capsys):
    with verdict(capsys, 7, "desk-scale end-to-end benchmark"):
        started = time.time()
        table_a, report = _desk_scale_run()
        table_b, _ = _desk_scale_run()
        assert table_a.encode() == table_b.encode()

        by_name = {row.technique: row for row in report.rows}
        assert by_name["none"].n_train_samples == 500
        for technique in ("contrast", "displacement", "pix2pix"):
            assert by_name[technique].n_train_samples == 1000  # exactly 2x base
        for row in report.rows:
            assert row.accuracy.n_runs == 3
            assert 0.0 <= row.accuracy.min <= row.accuracy.max <= 1.0
        lines = table_a.splitlines()
        assert len(lines) == 2 + 4
        assert lines[0].startswith("Augmentation")
        assert time.time() - started < 2700.0


# --- criterion 8: architecture sweep shape and sample bookkeeping ---


def test_criterion_8_sweep_shape_and_bookkeeping(capsys):
    with verdict(capsys, 8, "sweep shape and bookkeeping"):
        rng = np.random.default_rng(8)
        samples = []
        for split, count in (("train", 4), ("test", 2)):
            for c in range(3):
                for _ in range(count):
                    level = (c + 0.5) / 3
                    px = np.clip(level + rng.normal(0, 0.05, (16, 16, 3)), 0, 1)
                    samples.append(ImageSample(px.astype(np.float32), c, split=split))
        ds = Dataset(tuple(samples), num_classes=3)
        library = load_template_library("circular")
        pairs = tuple(
            PairedSample(render_symbolic(library[s.class_index], 16), s.pixels, s.class_index)
            for s in ds.split_subset("train").samples
        )

        result = sweep_gan(
            ds,
            pairs,
            grid=[(n_d, n_g) for n_d in (3, 4) for n_g in (2, 4)],
            repeats=2,
            gan_hyper=GanHyperparams(epochs=1, batch_size=8),
            gan_base_channels=4,
            classifier_config=ClassifierConfig(
                num_classes=3, fire_module_widths=((4, 8),), input_size=16
            ),
            classifier_hyper=TrainHyperparams(epochs=1, batch_size=8),
        )
        assert [(c.n_d, c.n_g) for c in result.cells] == [(3, 2), (3, 4), (4, 2), (4, 4)]
        for cell in result.cells:
            assert cell.n_train_samples == 12 + 12  # base pool plus one per pair
            assert cell.accuracy.n_runs == 2
            assert 0.0 <= cell.accuracy.min <= cell.accuracy.max <= 1.0
        table = render_sweep(result)
        lines = table.splitlines()
        assert len(lines) == 2 + 4
        assert lines[0].startswith("Disc Layers")
        assert "Balanced Acc (%)" in lines[0]

        # benchmark-scale sample arithmetic: a 61089-image base pool plus one
        # generated image per 5809-pair GAN subset trains on 66898 samples
        pixel = np.zeros((1, 1, 3), dtype=np.float32)
        pixel.setflags(write=False)
        big = Dataset(
            tuple(ImageSample(pixel, i % 36) for i in range(61089)), num_classes=36
        )
        extra = Dataset(
            tuple(ImageSample(pixel, i % 36) for i in range(5809)), num_classes=36
        )
        merged = merge_datasets(big, extra)
        assert len(merged) == 66898
        assert len(merged) == len(big) + len(extra)
