"""Single-file checkpoint archives shared by the GAN and the classifier.

An archive is a compressed npz holding one JSON metadata entry (format tag,
version, configs, loss history) plus every network weight as a named array.
Optimizer state is not stored; checkpoints restore models for inference and
evaluation, not for resuming an interrupted run.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

from .errors import ValidationError
from .pix2pix_gan import (
    DiscriminatorConfig,
    GanHyperparams,
    GanModel,
    GeneratorConfig,
    build_discriminator,
    build_generator,
)
from .squeezenet_classifier import (
    ClassifierConfig,
    TrainHistory,
    TrainHyperparams,
    build_classifier,
)

FORMAT_TAG = "augbench-checkpoint"
FORMAT_VERSION = 1


def save_gan_model(model: GanModel, path) -> None:
    meta = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "kind": "gan",
        "generator_config": _asdict(model.generator_config),
        "discriminator_config": _asdict(model.discriminator_config),
        "hyperparams": _asdict(model.hyperparams),
        "history": model.history,
    }
    arrays = {}
    _pack_state(arrays, "g", model.generator)
    _pack_state(arrays, "d", model.discriminator)
    _write(path, meta, arrays)


def load_gan_model(path) -> GanModel:
    meta, data = _read(path, expected_kind="gan")
    g_cfg = GeneratorConfig(**meta["generator_config"])
    d_cfg = DiscriminatorConfig(**meta["discriminator_config"])
    hyper_kwargs = dict(meta["hyperparams"])
    hyper_kwargs["optimizer_betas"] = tuple(hyper_kwargs["optimizer_betas"])
    generator = build_generator(g_cfg)
    discriminator = build_discriminator(d_cfg)
    _unpack_state(data, "g", generator)
    _unpack_state(data, "d", discriminator)
    generator.eval()
    discriminator.eval()
    return GanModel(
        generator,
        discriminator,
        g_cfg,
        d_cfg,
        GanHyperparams(**hyper_kwargs),
        meta["history"],
    )


def save_classifier_model(history: TrainHistory, path) -> None:
    meta = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "kind": "classifier",
        "config": _asdict(history.config),
        "hyperparams": _asdict(history.hyperparams),
        "losses": list(history.losses),
        "accuracies": list(history.accuracies),
    }
    arrays = {}
    _pack_state(arrays, "net", history.network)
    _write(path, meta, arrays)


def load_classifier_model(path) -> TrainHistory:
    meta, data = _read(path, expected_kind="classifier")
    cfg_kwargs = dict(meta["config"])
    cfg_kwargs["fire_module_widths"] = tuple(tuple(p) for p in cfg_kwargs["fire_module_widths"])
    config = ClassifierConfig(**cfg_kwargs)
    network = build_classifier(config)
    _unpack_state(data, "net", network)
    network.eval()
    return TrainHistory(
        tuple(meta["losses"]),
        tuple(meta["accuracies"]),
        network,
        config,
        TrainHyperparams(**meta["hyperparams"]),
    )


def _asdict(config) -> dict:
    out = {}
    for name in config.__dataclass_fields__:
        value = getattr(config, name)
        out[name] = list(value) if isinstance(value, tuple) else value
    return out


def _pack_state(arrays: dict, prefix: str, module: torch.nn.Module) -> None:
    for key, tensor in module.state_dict().items():
        arrays[f"{prefix}::{key}"] = tensor.detach().cpu().numpy()


def _unpack_state(data, prefix: str, module: torch.nn.Module) -> None:
    state = {}
    tag = f"{prefix}::"
    for name in data.files:
        if name.startswith(tag):
            state[name[len(tag) :]] = torch.from_numpy(data[name].copy())
    module.load_state_dict(state)


def _write(path, meta: dict, arrays: dict) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez_compressed(path, __meta__=np.frombuffer(json.dumps(meta).encode(), np.uint8), **arrays)
    # np.savez appends .npz when missing; keep the caller's exact path.
    written = path if path.suffix == ".npz" else path.with_name(path.name + ".npz")
    if written != path:
        written.replace(path)


def _read(path, expected_kind: str):
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"checkpoint not found: {path}")
    data = np.load(path, allow_pickle=False)
    if "__meta__" not in data.files:
        raise ValidationError(f"{path} is not a checkpoint archive (no metadata entry)")
    meta = json.loads(bytes(data["__meta__"]).decode())
    if meta.get("format") != FORMAT_TAG:
        raise ValidationError(f"{path}: unexpected format tag {meta.get('format')!r}")
    if meta.get("version") != FORMAT_VERSION:
        raise ValidationError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
    if meta.get("kind") != expected_kind:
        raise ValidationError(f"{path}: expected a {expected_kind} checkpoint, got {meta.get('kind')!r}")
    return meta, data
