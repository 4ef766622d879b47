"""Conditional image-to-image GAN for symbolic-to-realistic sign translation.

The generator is an encoder-decoder with skip connections; the
discriminator scores local patches of a (condition, candidate) pair and
averages them into one decision. There is no noise input anywhere, so a
trained generator is a deterministic function of the conditioning image.

Training defaults (Adam lr 2e-4, betas (0.5, 0.999), L1 weight 100, batch
16) follow common practice for this objective; all are overridable through
GanHyperparams. No dropout is used: generate() must be repeatable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .dataset_io import Dataset, ImageSample
from .errors import ConfigError, TrainingError, ValidationError
from .sign_renderer import PairedSample, SignTemplate, render_symbolic

SWEEP_GENERATOR_DEPTHS = (2, 4, 6, 8, 10)
SWEEP_DISCRIMINATOR_DEPTHS = (3, 4)
MAX_CHANNEL_FACTOR = 8


@dataclass(frozen=True)
class GeneratorConfig:
    n_conv_layers: int = 4
    base_channels: int = 64
    input_size: int = 64

    def __post_init__(self):
        n = self.n_conv_layers
        if n < 2 or n % 2 != 0:
            raise ConfigError(f"generator depth must be a positive even integer, got {n}")
        if n not in SWEEP_GENERATOR_DEPTHS:
            warnings.warn(
                f"generator depth {n} is outside the benchmark grid {SWEEP_GENERATOR_DEPTHS}"
            )
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")
        s = self.input_size
        if s < 4 or s & (s - 1):
            raise ConfigError(f"input_size must be a power of two >= 4, got {s}")


@dataclass(frozen=True)
class DiscriminatorConfig:
    n_conv_layers: int = 3
    base_channels: int = 64

    def __post_init__(self):
        if self.n_conv_layers not in SWEEP_DISCRIMINATOR_DEPTHS:
            raise ConfigError(
                f"discriminator depth must be one of {SWEEP_DISCRIMINATOR_DEPTHS}, "
                f"got {self.n_conv_layers}"
            )
        if self.base_channels < 1:
            raise ConfigError(f"base_channels must be >= 1, got {self.base_channels}")


@dataclass(frozen=True)
class GanHyperparams:
    learning_rate: float = 2e-4
    l1_weight: float = 100.0
    epochs: int = 1
    batch_size: int = 16
    optimizer_betas: tuple[float, float] = (0.5, 0.999)

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.l1_weight < 0:
            raise ConfigError(f"l1_weight must be >= 0, got {self.l1_weight}")
        b1, b2 = self.optimizer_betas
        if not (0.0 <= b1 < 1.0 and 0.0 <= b2 < 1.0):
            raise ConfigError(f"optimizer betas must lie in [0, 1), got {self.optimizer_betas}")


@dataclass
class GanModel:
    """A trained generator/discriminator pair plus its loss history."""

    generator: nn.Module
    discriminator: nn.Module
    generator_config: GeneratorConfig
    discriminator_config: DiscriminatorConfig
    hyperparams: GanHyperparams
    history: dict = field(default_factory=dict)


def _channel_plan(base: int, depth: int) -> list[int]:
    return [min(base * 2**i, base * MAX_CHANNEL_FACTOR) for i in range(depth)]


class _Generator(nn.Module):
    """Encoder-decoder with skip connections.

    Encoder layers halve the resolution with stride-2 4x4 convolutions until
    the feature map is 1x1; any remaining layers run stride-1 3x3 at the
    bottleneck so depths beyond log2(input_size) stay well defined. The
    decoder mirrors the encoder layer for layer, concatenating the encoder
    feature at each matching resolution. BatchNorm is omitted on the first
    encoder layer, on the output layer, and wherever the feature map is 1x1.
    """

    def __init__(self, config: GeneratorConfig):
        super().__init__()
        self.config = config
        n = config.n_conv_layers
        channels = _channel_plan(config.base_channels, n)

        self.encoder = nn.ModuleList()
        sizes = [config.input_size]
        in_ch = 3
        for j in range(n):
            halve = sizes[-1] > 1
            out_size = sizes[-1] // 2 if halve else 1
            use_norm = j > 0 and out_size > 1
            block = [
                nn.Conv2d(in_ch, channels[j], 4, 2, 1, bias=not use_norm)
                if halve
                else nn.Conv2d(in_ch, channels[j], 3, 1, 1, bias=not use_norm)
            ]
            if use_norm:
                block.append(nn.BatchNorm2d(channels[j]))
            block.append(nn.LeakyReLU(0.2, inplace=True))
            self.encoder.append(nn.Sequential(*block))
            sizes.append(out_size)
            in_ch = channels[j]

        self.decoder = nn.ModuleList()
        for i in range(1, n + 1):
            j = n - i  # mirrored encoder layer index (0-based)
            in_size, out_size = sizes[j + 1], sizes[j]
            # Block 1 sees the bottleneck feature alone; later blocks see the
            # previous decoder output concatenated with encoder feature j,
            # both of which carry channels[j] channels.
            in_ch = channels[n - 1] if i == 1 else 2 * channels[j]
            out_ch = 3 if i == n else channels[j - 1]
            use_norm = i < n and out_size > 1
            if out_size > in_size:
                conv = nn.ConvTranspose2d(in_ch, out_ch, 4, 2, 1, bias=not use_norm)
            else:
                conv = nn.Conv2d(in_ch, out_ch, 3, 1, 1, bias=not use_norm)
            block = [conv]
            if use_norm:
                block.append(nn.BatchNorm2d(out_ch))
            block.append(nn.Tanh() if i == n else nn.ReLU(inplace=True))
            self.decoder.append(nn.Sequential(*block))

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skips = []
        h = x
        for block in self.encoder:
            h = block(h)
            skips.append(h)
        h = self.decoder[0](skips[-1])
        for i, block in enumerate(self.decoder[1:], start=2):
            h = block(torch.cat([h, skips[-i]], dim=1))
        return h


class _PatchDiscriminator(nn.Module):
    """Patch classifier over a channel-concatenated (condition, candidate) pair.

    Each stride-2 block halves the resolution; a final 1x1 convolution maps
    to one logit per patch. forward() returns the sigmoid patch grid,
    decision() its per-sample mean.
    """

    def __init__(self, config: DiscriminatorConfig):
        super().__init__()
        self.config = config
        n = config.n_conv_layers
        channels = _channel_plan(config.base_channels, n)
        layers = []
        in_ch = 6
        for j in range(n):
            use_norm = j > 0
            layers.append(nn.Conv2d(in_ch, channels[j], 4, 2, 1, bias=not use_norm))
            if use_norm:
                layers.append(nn.BatchNorm2d(channels[j]))
            layers.append(nn.LeakyReLU(0.2, inplace=True))
            in_ch = channels[j]
        layers.append(nn.Conv2d(in_ch, 1, 1))
        self.net = nn.Sequential(*layers)

    def patch_logits(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        size = condition.shape[-1]
        stride_total = 2**self.config.n_conv_layers
        if size % stride_total:
            raise ValidationError(
                f"input size {size} is not divisible by the total stride {stride_total}"
            )
        return self.net(torch.cat([condition, candidate], dim=1))

    def forward(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        return torch.sigmoid(self.patch_logits(condition, candidate)).squeeze(1)

    def decision(self, condition: torch.Tensor, candidate: torch.Tensor) -> torch.Tensor:
        return self.forward(condition, candidate).mean(dim=(1, 2))


def build_generator(config: GeneratorConfig) -> nn.Module:
    return _Generator(config)


def build_discriminator(config: DiscriminatorConfig) -> nn.Module:
    return _PatchDiscriminator(config)


def l1_term(generator: nn.Module, symbolic: torch.Tensor, real: torch.Tensor) -> torch.Tensor:
    """Mean absolute error between G(symbolic) and real, in network scale."""
    return torch.mean(torch.abs(generator(symbolic) - real))


def train_gan(
    pairs,
    g_cfg: GeneratorConfig,
    d_cfg: DiscriminatorConfig,
    hyper: GanHyperparams,
    seed: int = 0,
) -> GanModel:
    """Alternate one discriminator and one generator update per batch.

    Patch targets are 1 for real and 0 for generated; the generator
    objective is adversarial BCE plus l1_weight times the L1 term. History
    records per-epoch means of discriminator loss, generator adversarial
    loss, and the raw (unweighted) L1 term.
    """
    pairs = tuple(pairs)
    if not pairs:
        raise ValidationError("cannot train on an empty pair collection")
    size = g_cfg.input_size
    for i, pair in enumerate(pairs):
        if pair.symbolic.shape != (size, size, 3):
            raise ValidationError(
                f"pair {i}: expected {size}x{size}x3 images, got {pair.symbolic.shape}"
            )

    torch.manual_seed(seed)
    generator = build_generator(g_cfg)
    discriminator = build_discriminator(d_cfg)
    opt_g = torch.optim.Adam(
        generator.parameters(), lr=hyper.learning_rate, betas=hyper.optimizer_betas
    )
    opt_d = torch.optim.Adam(
        discriminator.parameters(), lr=hyper.learning_rate, betas=hyper.optimizer_betas
    )
    bce = nn.BCEWithLogitsLoss()

    sym = torch.stack([_to_internal(p.symbolic) for p in pairs])
    real = torch.stack([_to_internal(p.real) for p in pairs])
    n = len(pairs)

    history = {"d_loss": [], "g_adv": [], "g_l1": []}
    generator.train()
    discriminator.train()
    for epoch in range(hyper.epochs):
        order = np.random.default_rng(np.random.SeedSequence((seed, epoch))).permutation(n)
        d_sum = adv_sum = l1_sum = 0.0
        batches = 0
        for start in range(0, n, hyper.batch_size):
            idx = torch.from_numpy(order[start : start + hyper.batch_size].copy())
            cond = sym[idx]
            target = real[idx]
            fake = generator(cond)

            opt_d.zero_grad()
            logits_real = discriminator.patch_logits(cond, target)
            logits_fake = discriminator.patch_logits(cond, fake.detach())
            loss_d = 0.5 * (
                bce(logits_real, torch.ones_like(logits_real))
                + bce(logits_fake, torch.zeros_like(logits_fake))
            )
            loss_d.backward()
            opt_d.step()

            opt_g.zero_grad()
            logits_fake = discriminator.patch_logits(cond, fake)
            loss_adv = bce(logits_fake, torch.ones_like(logits_fake))
            loss_l1 = torch.mean(torch.abs(fake - target))
            loss_g = loss_adv + hyper.l1_weight * loss_l1
            loss_g.backward()
            opt_g.step()

            values = (loss_d.item(), loss_adv.item(), loss_l1.item())
            if not all(np.isfinite(values)):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {batches}: "
                    f"d={values[0]}, adv={values[1]}, l1={values[2]}"
                )
            d_sum += values[0]
            adv_sum += values[1]
            l1_sum += values[2]
            batches += 1

        history["d_loss"].append(d_sum / batches)
        history["g_adv"].append(adv_sum / batches)
        history["g_l1"].append(l1_sum / batches)

    generator.eval()
    discriminator.eval()
    return GanModel(generator, discriminator, g_cfg, d_cfg, hyper, history)


def generate(model: GanModel, symbolic: np.ndarray) -> np.ndarray:
    """Translate one symbolic image; deterministic for a fixed model."""
    size = model.generator_config.input_size
    arr = np.asarray(symbolic, dtype=np.float32)
    if arr.shape != (size, size, 3):
        raise ValidationError(f"expected a {size}x{size}x3 image, got shape {arr.shape}")
    model.generator.eval()
    with torch.no_grad():
        out = model.generator(_to_internal(arr).unsqueeze(0))
    return _from_internal(out[0])


def gan_augment_dataset(
    model: GanModel, dataset: Dataset, templates: dict[int, SignTemplate]
) -> Dataset:
    """Double a dataset with one generated sample per original.

    The symbolic condition for a sample is its class template rendered at
    dataset resolution, so (deterministic generate) every sample of a class
    contributes the same generated image; the per-class result is cached.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot augment an empty dataset")
    size = model.generator_config.input_size
    cache: dict[int, np.ndarray] = {}
    generated = []
    for i, sample in enumerate(dataset.samples):
        cls = sample.class_index
        if cls not in cache:
            template = templates.get(cls)
            if template is None:
                raise ValidationError(f"sample {i}: no template for class {cls}")
            cache[cls] = generate(model, render_symbolic(template, size))
        generated.append(ImageSample(cache[cls], cls, split=sample.split))
    return Dataset(
        dataset.samples + tuple(generated),
        num_classes=dataset.num_classes,
        shape_family=dataset.shape_family,
    )


def _to_internal(image: np.ndarray) -> torch.Tensor:
    """HxWx3 array in [0,1] -> 3xHxW tensor in [-1,1]."""
    return torch.from_numpy(np.array(image, dtype=np.float32)).permute(2, 0, 1) * 2 - 1


def _from_internal(tensor: torch.Tensor) -> np.ndarray:
    out = (tensor.permute(1, 2, 0).numpy() + 1.0) / 2.0
    return np.clip(out, 0.0, 1.0).astype(np.float32)
