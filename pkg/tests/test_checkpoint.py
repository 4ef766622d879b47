import numpy as np
import pytest

from augbench.checkpoint import (
    load_classifier_model,
    load_gan_model,
    save_classifier_model,
    save_gan_model,
)
from augbench.dataset_io import Dataset, ImageSample
from augbench.errors import ValidationError
from augbench.pix2pix_gan import (
    DiscriminatorConfig,
    GanHyperparams,
    GeneratorConfig,
    generate,
    train_gan,
)
from augbench.sign_renderer import PairedSample, load_template, render_symbolic
from augbench.squeezenet_classifier import (
    ClassifierConfig,
    TrainHyperparams,
    predict,
    train_classifier,
)


def small_gan(seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for i in range(4):
        sym = render_symbolic(load_template("circular", i % 2), 16)
        real = rng.uniform(0, 1, (16, 16, 3)).astype(np.float32)
        pairs.append(PairedSample(sym, real, i % 2))
    return train_gan(
        pairs,
        GeneratorConfig(2, base_channels=4, input_size=16),
        DiscriminatorConfig(3, base_channels=4),
        GanHyperparams(epochs=2, batch_size=4),
        seed=seed,
    )


def small_classifier(seed=0):
    rng = np.random.default_rng(seed)
    samples = tuple(
        ImageSample(
            np.clip((c + 0.5) / 2 + rng.normal(0, 0.05, (16, 16, 3)), 0, 1).astype(np.float32),
            c,
        )
        for c in (0, 1)
        for _ in range(4)
    )
    ds = Dataset(samples, num_classes=2)
    return ds, train_classifier(
        ds,
        ClassifierConfig(num_classes=2, fire_module_widths=((4, 8),), input_size=16),
        TrainHyperparams(epochs=2, batch_size=4),
        seed=seed,
    )


def test_gan_round_trip_preserves_outputs(tmp_path):
    model = small_gan()
    path = tmp_path / "gan.npz"
    save_gan_model(model, path)
    back = load_gan_model(path)
    assert back.generator_config == model.generator_config
    assert back.discriminator_config == model.discriminator_config
    assert back.hyperparams == model.hyperparams
    assert back.history == model.history
    sym = render_symbolic(load_template("circular", 0), 16)
    assert np.array_equal(generate(back, sym), generate(model, sym))


def test_classifier_round_trip_preserves_predictions(tmp_path):
    ds, hist = small_classifier()
    path = tmp_path / "cls.npz"
    save_classifier_model(hist, path)
    back = load_classifier_model(path)
    assert back.config == hist.config
    assert back.losses == hist.losses
    assert back.accuracies == hist.accuracies
    xs = np.stack([s.pixels for s in ds.samples])
    assert np.array_equal(predict(back.network, xs), predict(hist.network, xs))


def test_load_rejects_missing_file(tmp_path):
    with pytest.raises(ValidationError):
        load_gan_model(tmp_path / "nope.npz")


def test_load_rejects_kind_mismatch(tmp_path):
    model = small_gan()
    path = tmp_path / "gan.npz"
    save_gan_model(model, path)
    with pytest.raises(ValidationError):
        load_classifier_model(path)


def test_load_rejects_foreign_npz(tmp_path):
    path = tmp_path / "alien.npz"
    np.savez(path, weights=np.zeros(3))
    with pytest.raises(ValidationError):
        load_gan_model(path)


def test_save_appends_npz_suffix(tmp_path):
    _, hist = small_classifier()
    target = tmp_path / "model"
    save_classifier_model(hist, target)
    stored = list(tmp_path.iterdir())
    assert len(stored) == 1
    load_classifier_model(stored[0])
