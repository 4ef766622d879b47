"""Compact fire-module CNN for 64x64 sign classification.

The network is a scaled-down squeeze/expand architecture: a small stem
convolution, three max-pool stages with fire modules in between, a 1x1
classification convolution, and global average pooling. forward() returns
softmax probabilities; the raw logits stay internal to the training loop.

Training defaults follow the benchmark regimen: 100 epochs of Adam at
learning rate 0.01, batch size 64, no weight decay and no dropout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from torch import nn

from .dataset_io import Dataset
from .errors import ConfigError, TrainingError, ValidationError

DEFAULT_FIRE_WIDTHS = ((16, 32), (16, 32), (32, 64), (32, 64))
STEM_CHANNELS = 32


@dataclass(frozen=True)
class ClassifierConfig:
    num_classes: int
    fire_module_widths: tuple = DEFAULT_FIRE_WIDTHS
    input_size: int = 64

    def __post_init__(self):
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        widths = tuple((int(s), int(e)) for s, e in self.fire_module_widths)
        if not widths:
            raise ConfigError("need at least one fire module")
        for i, (squeeze, expand) in enumerate(widths):
            if squeeze < 1 or expand < 1:
                raise ConfigError(f"fire module {i}: widths must be >= 1, got {(squeeze, expand)}")
        if self.input_size < 8:
            raise ConfigError(f"input_size must be >= 8, got {self.input_size}")
        object.__setattr__(self, "fire_module_widths", widths)


@dataclass(frozen=True)
class TrainHyperparams:
    epochs: int = 100
    learning_rate: float = 0.01
    batch_size: int = 64

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")


@dataclass
class TrainHistory:
    """Per-epoch training curves plus the trained network."""

    losses: tuple
    accuracies: tuple
    network: nn.Module
    config: ClassifierConfig
    hyperparams: TrainHyperparams


class _Fire(nn.Module):
    """Squeeze 1x1 convolution feeding parallel 1x1 and 3x3 expands.

    BatchNorm after each convolution is our addition to the classic module;
    without it the unnormalized global-average head makes training collapse
    at practical learning rates on small datasets.
    """

    def __init__(self, in_ch: int, squeeze: int, expand: int):
        super().__init__()
        self.squeeze = nn.Conv2d(in_ch, squeeze, 1, bias=False)
        self.squeeze_norm = nn.BatchNorm2d(squeeze)
        self.expand1 = nn.Conv2d(squeeze, expand, 1, bias=False)
        self.expand3 = nn.Conv2d(squeeze, expand, 3, padding=1, bias=False)
        self.expand_norm = nn.BatchNorm2d(2 * expand)
        self.act = nn.ReLU(inplace=True)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        s = self.act(self.squeeze_norm(self.squeeze(x)))
        out = torch.cat([self.expand1(s), self.expand3(s)], dim=1)
        return self.act(self.expand_norm(out))


class _SqueezeClassifier(nn.Module):
    def __init__(self, config: ClassifierConfig):
        super().__init__()
        self.config = config
        widths = config.fire_module_widths
        # Three pooling stages; fire modules split into contiguous groups
        # between them (front-loaded when the count is not divisible by 3).
        n = len(widths)
        n1 = (n + 2) // 3
        n2 = (n - n1 + 1) // 2
        groups = (widths[:n1], widths[n1 : n1 + n2], widths[n1 + n2 :])

        layers = [
            nn.Conv2d(3, STEM_CHANNELS, 3, padding=1, bias=False),
            nn.BatchNorm2d(STEM_CHANNELS),
            nn.ReLU(inplace=True),
        ]
        in_ch = STEM_CHANNELS
        for group in groups:
            layers.append(nn.MaxPool2d(2))
            for squeeze, expand in group:
                layers.append(_Fire(in_ch, squeeze, expand))
                in_ch = 2 * expand
        self.features = nn.Sequential(*layers)
        self.head = nn.Conv2d(in_ch, config.num_classes, 1)

    def logits(self, x: torch.Tensor) -> torch.Tensor:
        return self.head(self.features(x)).mean(dim=(2, 3))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return torch.softmax(self.logits(x), dim=1)


def build_classifier(config: ClassifierConfig) -> nn.Module:
    return _SqueezeClassifier(config)


def train_classifier(
    dataset: Dataset,
    config: ClassifierConfig,
    hyper: TrainHyperparams = TrainHyperparams(),
    seed: int = 0,
) -> TrainHistory:
    """Train on the dataset's train split for exactly hyper.epochs epochs.

    History records the running loss and accuracy over each epoch's batches.
    Deterministic given the seed: weight init and batch order both derive
    from it.
    """
    train = dataset.split_subset("train")
    if len(train) == 0:
        raise ValidationError("training split is empty")
    if config.num_classes < dataset.num_classes:
        raise ValidationError(
            f"classifier has {config.num_classes} outputs but dataset declares "
            f"{dataset.num_classes} classes"
        )
    size = config.input_size
    for i, sample in enumerate(train.samples):
        if sample.pixels.shape != (size, size, 3):
            raise ValidationError(
                f"train sample {i}: expected {size}x{size}x3, got {sample.pixels.shape}"
            )

    x = torch.stack(
        [torch.from_numpy(np.array(s.pixels, dtype=np.float32)) for s in train.samples]
    ).permute(0, 3, 1, 2)
    y = torch.tensor([s.class_index for s in train.samples], dtype=torch.long)
    n = len(train)

    torch.manual_seed(seed)
    network = build_classifier(config)
    optimizer = torch.optim.Adam(network.parameters(), lr=hyper.learning_rate)
    criterion = nn.CrossEntropyLoss()

    losses = []
    accuracies = []
    network.train()
    for epoch in range(hyper.epochs):
        order = np.random.default_rng(np.random.SeedSequence((seed, epoch))).permutation(n)
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, hyper.batch_size):
            idx = torch.from_numpy(order[start : start + hyper.batch_size].copy())
            logits = network.logits(x[idx])
            loss = criterion(logits, y[idx])
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            value = loss.item()
            if not np.isfinite(value):
                raise TrainingError(f"non-finite loss at epoch {epoch} (lr={hyper.learning_rate})")
            loss_sum += value * len(idx)
            correct += int((logits.argmax(dim=1) == y[idx]).sum())
        losses.append(loss_sum / n)
        accuracies.append(correct / n)
    network.eval()
    return TrainHistory(tuple(losses), tuple(accuracies), network, config, hyper)


def predict(network: nn.Module, images: np.ndarray):
    """Most probable class per image; ties break to the lowest index.

    Accepts one HxWx3 image (returns an int) or a batch NxHxWx3 (returns an
    int array in input order).
    """
    arr = np.asarray(images, dtype=np.float32)
    single = arr.ndim == 3
    if single:
        arr = arr[None]
    size = network.config.input_size
    if arr.ndim != 4 or arr.shape[1:] != (size, size, 3):
        raise ValidationError(
            f"expected images of shape {size}x{size}x3, got {np.asarray(images).shape}"
        )
    network.eval()
    with torch.no_grad():
        probs = network(torch.from_numpy(np.array(arr)).permute(0, 3, 1, 2)).numpy()
    labels = np.argmax(probs, axis=1).astype(np.int64)
    return int(labels[0]) if single else labels
