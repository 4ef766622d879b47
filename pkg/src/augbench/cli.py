"""Command-line entry point wiring the pipeline together.

Every subcommand is deterministic given its flags and config file: all
randomness flows from explicit seeds, and each run writes a reproducibility
record (resolved config, seeds, package versions) next to its outputs.

Exit codes: 0 success, 1 validation or runtime failure (diagnostic on
stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import platform
import sys
from importlib import metadata
from pathlib import Path

import yaml

from .checkpoint import (
    load_classifier_model,
    load_gan_model,
    save_classifier_model,
    save_gan_model,
)
from .classic_augment import TECHNIQUES, AugmentationSpec, augment_dataset
from .dataset_io import (
    Dataset,
    load_dataset,
    save_dataset,
    select_gan_subset,
    write_image,
)
from .errors import AugbenchError, ConfigError
from .eval_harness import (
    ExperimentReport,
    render_report,
    render_sweep,
    report_from_dict,
    report_to_dict,
    run_benchmark,
    save_heatmap,
    sweep_from_dict,
    sweep_gan,
    sweep_to_dict,
)
from .pix2pix_gan import (
    DiscriminatorConfig,
    GanHyperparams,
    GeneratorConfig,
    generate,
    train_gan,
)
from .sign_renderer import (
    TEMPLATE_FAMILIES,
    build_pairs,
    build_synthetic_dataset,
    find_template_by_name,
    load_template,
    load_template_library,
    render_symbolic,
)
from .squeezenet_classifier import ClassifierConfig, TrainHyperparams, train_classifier

CONFIG_SCHEMA_VERSION = 1

_CONFIG_KEYS = {
    "schema_version",
    "dataset",
    "techniques",
    "repeats",
    "seeds",
    "augmentation",
    "classifier",
    "gan",
    "sweep",
    "output_dir",
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
        return 0
    except (AugbenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="augbench",
        description="Sign-image augmentation benchmark: rendering, GAN and "
        "classical augmentation, classifier training, evaluation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="rasterize one symbolic sign template to a PNG")
    _template_flags(p)
    p.add_argument("--size", type=int, default=64, help="output edge length (default 64)")
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("synth-data", help="build a synthetic dataset and write its manifest")
    p.add_argument("--family", default="circular", help="template family (default circular)")
    p.add_argument("--num-classes", type=int, default=None, help="use the first N classes")
    p.add_argument("--train", type=int, required=True, help="number of training samples")
    p.add_argument("--test", type=int, required=True, help="number of test samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_synth_data)

    p = sub.add_parser("augment", help="double a dataset's train split with one technique")
    p.add_argument("--manifest", required=True)
    p.add_argument("--technique", required=True, choices=TECHNIQUES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--ranges",
        default=None,
        help='parameter ranges as JSON, e.g. \'{"factor": [0.8, 1.2]}\'',
    )
    p.add_argument("--out", required=True, help="output dataset directory")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("gan-train", help="train the conditional GAN on (symbolic, real) pairs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--templates", required=True, help="template family or directory")
    p.add_argument("--nd", type=int, default=3, help="discriminator conv layers (default 3)")
    p.add_argument("--ng", type=int, default=4, help="generator conv layers (default 4)")
    p.add_argument("--base-channels", type=int, default=64)
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=2e-4)
    p.add_argument("--l1-weight", type=float, default=100.0)
    p.add_argument("--subset", type=int, default=0, help="train on the N best samples (0 = all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output checkpoint path (.npz)")
    p.set_defaults(func=_cmd_gan_train)

    p = sub.add_parser(
        "gan-generate",
        help="translate one symbolic template through a trained GAN (novel families allowed)",
    )
    p.add_argument("--checkpoint", required=True)
    _template_flags(p)
    p.add_argument("--out", required=True, help="output PNG path")
    p.set_defaults(func=_cmd_gan_generate)

    p = sub.add_parser("cls-train", help="train the classifier on a dataset manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output checkpoint path (.npz)")
    p.set_defaults(func=_cmd_cls_train)

    p = sub.add_parser("evaluate", help="benchmark augmentation techniques with repeated runs")
    _config_flags(p)
    p.add_argument("--techniques", default=None, help="comma-separated technique list")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="GAN architecture sweep over a (n_d, n_g) grid")
    _config_flags(p)
    p.add_argument("--grid", default=None, help='grid as "3,4x2,4" (discriminators x generators)')
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("report", help="re-render tables and heatmaps from a results file")
    p.add_argument("--results", required=True, help="results JSON written by evaluate/sweep")
    p.add_argument("--out-dir", default=None, help="where to write tables and heatmaps")
    p.set_defaults(func=_cmd_report)

    return parser


def _template_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--family",
        required=True,
        help=f"template family {TEMPLATE_FAMILIES} or a directory of template JSON files",
    )
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--class-index", type=int, default=None, help="template class index")
    group.add_argument("--name", default=None, help="template name, e.g. speed_limit_30")


def _config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="experiment config YAML")
    p.add_argument("--manifest", default=None, help="dataset manifest (overrides config)")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--seeds", default=None, help="comma-separated run seeds")
    p.add_argument("--output-dir", default=None)


# --- simple commands ----------------------------------------------------------


def _cmd_render(args) -> None:
    template = _pick_template(args)
    write_image(render_symbolic(template, args.size), args.out)
    _write_repro(
        Path(str(args.out) + ".repro.json"),
        "render",
        {"family": args.family, "class_index": template.class_index, "size": args.size},
        seeds=[],
    )
    print(args.out)


def _cmd_synth_data(args) -> None:
    dataset = build_synthetic_dataset(
        args.family, args.train, args.test, num_classes=args.num_classes, seed=args.seed
    )
    manifest = save_dataset(dataset, args.out)
    _write_repro(
        Path(args.out) / "repro.json",
        "synth-data",
        {
            "family": args.family,
            "num_classes": dataset.num_classes,
            "train": args.train,
            "test": args.test,
        },
        seeds=[args.seed],
    )
    print(manifest)


def _cmd_augment(args) -> None:
    dataset = load_dataset(args.manifest)
    ranges = json.loads(args.ranges) if args.ranges else {}
    spec = AugmentationSpec(args.technique, seed=args.seed, param_ranges=ranges)
    train = dataset.split_subset("train")
    test = dataset.split_subset("test")
    doubled = augment_dataset(train, spec)
    combined = Dataset(
        doubled.samples + test.samples,
        num_classes=dataset.num_classes,
        shape_family=dataset.shape_family,
    )
    manifest = save_dataset(combined, args.out)
    _write_repro(
        Path(args.out) / "repro.json",
        "augment",
        {"manifest": str(args.manifest), "spec": spec.to_dict()},
        seeds=[args.seed],
    )
    print(manifest)


def _cmd_gan_train(args) -> None:
    dataset = load_dataset(args.manifest)
    train = dataset.split_subset("train")
    if args.subset:
        train = select_gan_subset(train, args.subset)
    library = load_template_library(args.templates)
    pairs = build_pairs(train, library)
    hyper = GanHyperparams(
        learning_rate=args.lr,
        l1_weight=args.l1_weight,
        epochs=args.epochs,
        batch_size=args.batch_size,
    )
    model = train_gan(
        pairs,
        GeneratorConfig(args.ng, base_channels=args.base_channels),
        DiscriminatorConfig(args.nd, base_channels=args.base_channels),
        hyper,
        seed=args.seed,
    )
    save_gan_model(model, args.out)
    _write_repro(
        Path(str(args.out) + ".repro.json"),
        "gan-train",
        {
            "manifest": str(args.manifest),
            "templates": args.templates,
            "n_d": args.nd,
            "n_g": args.ng,
            "base_channels": args.base_channels,
            "epochs": args.epochs,
            "batch_size": args.batch_size,
            "learning_rate": args.lr,
            "l1_weight": args.l1_weight,
            "pairs": len(pairs),
            "final_l1": model.history["g_l1"][-1],
        },
        seeds=[args.seed],
    )
    print(args.out)


def _cmd_gan_generate(args) -> None:
    model = load_gan_model(args.checkpoint)
    template = _pick_template(args)
    symbolic = render_symbolic(template, model.generator_config.input_size)
    write_image(generate(model, symbolic), args.out)
    _write_repro(
        Path(str(args.out) + ".repro.json"),
        "gan-generate",
        {
            "checkpoint": str(args.checkpoint),
            "family": args.family,
            "class_index": template.class_index,
            "template_name": template.name,
        },
        seeds=[],
    )
    print(args.out)


def _cmd_cls_train(args) -> None:
    dataset = load_dataset(args.manifest)
    config = ClassifierConfig(num_classes=dataset.num_classes)
    hyper = TrainHyperparams(
        epochs=args.epochs, learning_rate=args.lr, batch_size=args.batch_size
    )
    history = train_classifier(dataset, config, hyper, seed=args.seed)
    save_classifier_model(history, args.out)
    _write_repro(
        Path(str(args.out) + ".repro.json"),
        "cls-train",
        {
            "manifest": str(args.manifest),
            "epochs": args.epochs,
            "learning_rate": args.lr,
            "batch_size": args.batch_size,
            "final_loss": history.losses[-1],
            "final_accuracy": history.accuracies[-1],
        },
        seeds=[args.seed],
    )
    print(args.out)


# --- config-driven commands ---------------------------------------------------


def _cmd_evaluate(args) -> None:
    cfg = _resolve_config(args)
    techniques = cfg.get("techniques") or ["none"]
    out_dir = Path(cfg.get("output_dir") or "runs/run")
    dataset = _resolve_dataset(cfg)
    repeats, seeds = _resolve_repeats(cfg)

    kwargs = _classifier_kwargs(cfg, dataset)
    aug_cfg = cfg.get("augmentation") or {}
    kwargs["augmentation_seed"] = int(aug_cfg.get("seed", 0))
    technique_ranges = aug_cfg.get("ranges") or {}

    if "pix2pix" in techniques:
        model, library = _resolve_gan(cfg, dataset, out_dir)
        kwargs["gan_model"] = model
        kwargs["templates"] = library

    rows = []
    for technique in techniques:
        row_kwargs = dict(kwargs)
        if technique in technique_ranges:
            row_kwargs["param_ranges"] = technique_ranges[technique]
        rows.append(
            run_benchmark([technique], dataset, repeats=repeats, seeds=seeds, **row_kwargs).rows[0]
        )
    report = ExperimentReport(
        tuple(rows), dataset.num_classes, len(dataset.split_subset("test"))
    )

    table = render_report(report, out_dir / "reports")
    (out_dir / "reports").mkdir(parents=True, exist_ok=True)
    (out_dir / "reports" / "table.txt").write_text(table, encoding="utf-8")
    (out_dir / "results").mkdir(parents=True, exist_ok=True)
    (out_dir / "results" / "results.json").write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_resolved_config(cfg, out_dir)
    _write_repro(out_dir / "repro.json", "evaluate", cfg, seeds=list(seeds or range(1, repeats + 1)))
    print(table, end="")


def _cmd_sweep(args) -> None:
    cfg = _resolve_config(args)
    out_dir = Path(cfg.get("output_dir") or "runs/run")
    dataset = _resolve_dataset(cfg)
    repeats, seeds = _resolve_repeats(cfg)
    sweep_cfg = cfg.get("sweep") or {}
    grid = _parse_grid(sweep_cfg.get("grid") or "3,4x2,4,6,8,10")

    gan_cfg = cfg.get("gan") or {}
    library = load_template_library(_gan_templates_family(gan_cfg))
    train = dataset.split_subset("train")
    subset = int(gan_cfg.get("subset", 0))
    pool = select_gan_subset(train, subset) if subset else train
    pairs = build_pairs(pool, library)

    cls_kwargs = _classifier_kwargs(cfg, dataset)
    result = sweep_gan(
        dataset,
        pairs,
        grid,
        repeats=repeats,
        seeds=seeds,
        gan_hyper=_gan_hyper(gan_cfg),
        gan_base_channels=int(gan_cfg.get("base_channels", 64)),
        gan_seed=int(gan_cfg.get("seed", 0)),
        classifier_config=cls_kwargs["classifier_config"],
        classifier_hyper=cls_kwargs["classifier_hyper"],
    )

    table = render_sweep(result)
    (out_dir / "reports").mkdir(parents=True, exist_ok=True)
    (out_dir / "reports" / "sweep.txt").write_text(table, encoding="utf-8")
    (out_dir / "results").mkdir(parents=True, exist_ok=True)
    (out_dir / "results" / "sweep.json").write_text(
        json.dumps(sweep_to_dict(result), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    _write_resolved_config(cfg, out_dir)
    _write_repro(out_dir / "repro.json", "sweep", cfg, seeds=list(seeds or range(1, repeats + 1)))
    print(table, end="")


def _cmd_report(args) -> None:
    path = Path(args.results)
    if not path.is_file():
        raise ConfigError(f"results file not found: {path}")
    data = json.loads(path.read_text(encoding="utf-8"))
    if "rows" in data:
        report = report_from_dict(data)
        table = render_report(report)
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "table.txt").write_text(table, encoding="utf-8")
            for row in report.rows:
                save_heatmap(row.confusion, out / f"confusion_{row.technique}.png")
    elif "cells" in data:
        table = render_sweep(sweep_from_dict(data))
        if args.out_dir:
            out = Path(args.out_dir)
            out.mkdir(parents=True, exist_ok=True)
            (out / "sweep.txt").write_text(table, encoding="utf-8")
    else:
        raise ConfigError(f"{path} is neither an evaluate nor a sweep results file")
    print(table, end="")


# --- shared helpers -----------------------------------------------------------


def _pick_template(args):
    if args.name is not None:
        return find_template_by_name(args.family, args.name)
    return load_template(args.family, args.class_index)


def _resolve_config(args) -> dict:
    cfg = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        loaded = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: config must be a mapping")
        version = loaded.get("schema_version")
        if version != CONFIG_SCHEMA_VERSION:
            raise ConfigError(
                f"{path}: schema_version must be {CONFIG_SCHEMA_VERSION}, got {version!r}"
            )
        unknown = set(loaded) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
        cfg = loaded
    cfg.setdefault("schema_version", CONFIG_SCHEMA_VERSION)

    if args.manifest:
        cfg["dataset"] = {"manifest": args.manifest}
    if args.repeats is not None:
        cfg["repeats"] = args.repeats
    if args.seeds is not None:
        cfg["seeds"] = [int(s) for s in args.seeds.split(",") if s]
    if args.output_dir is not None:
        cfg["output_dir"] = args.output_dir
    if getattr(args, "techniques", None):
        cfg["techniques"] = [t.strip() for t in args.techniques.split(",") if t.strip()]
    if getattr(args, "grid", None):
        cfg.setdefault("sweep", {})["grid"] = args.grid
    return cfg


def _resolve_dataset(cfg) -> Dataset:
    spec = cfg.get("dataset") or {}
    manifest = spec.get("manifest")
    synth = spec.get("synthetic")
    if manifest and synth:
        raise ConfigError("dataset config must give either manifest or synthetic, not both")
    if manifest:
        return load_dataset(manifest)
    if synth:
        return build_synthetic_dataset(
            synth.get("family", "circular"),
            int(synth["train"]),
            int(synth["test"]),
            num_classes=synth.get("num_classes"),
            seed=int(synth.get("seed", 0)),
        )
    raise ConfigError("config needs dataset.manifest or dataset.synthetic")


def _resolve_repeats(cfg):
    seeds = cfg.get("seeds")
    if seeds is not None:
        seeds = tuple(int(s) for s in seeds)
        repeats = cfg.get("repeats", len(seeds))
        if repeats != len(seeds):
            raise ConfigError(f"repeats={repeats} but {len(seeds)} seeds given")
        return repeats, seeds
    return int(cfg.get("repeats", 5)), None


def _classifier_kwargs(cfg, dataset) -> dict:
    cls_cfg = cfg.get("classifier") or {}
    widths = cls_cfg.get("fire_widths")
    config_args = {"num_classes": dataset.num_classes}
    if widths:
        config_args["fire_module_widths"] = tuple(tuple(int(v) for v in pair) for pair in widths)
    return {
        "classifier_config": ClassifierConfig(**config_args),
        "classifier_hyper": TrainHyperparams(
            epochs=int(cls_cfg.get("epochs", 100)),
            learning_rate=float(cls_cfg.get("learning_rate", 0.01)),
            batch_size=int(cls_cfg.get("batch_size", 64)),
        ),
    }


def _gan_templates_family(gan_cfg) -> str:
    family = gan_cfg.get("templates")
    if not family:
        raise ConfigError("gan config needs a templates family (gan.templates)")
    return family


def _gan_hyper(gan_cfg) -> GanHyperparams:
    return GanHyperparams(
        learning_rate=float(gan_cfg.get("learning_rate", 2e-4)),
        l1_weight=float(gan_cfg.get("l1_weight", 100.0)),
        epochs=int(gan_cfg.get("epochs", 20)),
        batch_size=int(gan_cfg.get("batch_size", 16)),
    )


def _resolve_gan(cfg, dataset: Dataset, out_dir: Path):
    gan_cfg = cfg.get("gan") or {}
    library = load_template_library(_gan_templates_family(gan_cfg))
    checkpoint = gan_cfg.get("checkpoint")
    if checkpoint:
        return load_gan_model(checkpoint), library

    train = dataset.split_subset("train")
    subset = int(gan_cfg.get("subset", 0))
    pool = select_gan_subset(train, subset) if subset else train
    pairs = build_pairs(pool, library)
    model = train_gan(
        pairs,
        GeneratorConfig(int(gan_cfg.get("n_g", 4)), base_channels=int(gan_cfg.get("base_channels", 64))),
        DiscriminatorConfig(int(gan_cfg.get("n_d", 3)), base_channels=int(gan_cfg.get("base_channels", 64))),
        _gan_hyper(gan_cfg),
        seed=int(gan_cfg.get("seed", 0)),
    )
    ckpt_dir = out_dir / "checkpoints"
    ckpt_dir.mkdir(parents=True, exist_ok=True)
    save_gan_model(model, ckpt_dir / "gan.npz")
    return model, library


def _write_resolved_config(cfg: dict, out_dir: Path) -> None:
    config_dir = out_dir / "config"
    config_dir.mkdir(parents=True, exist_ok=True)
    (config_dir / "config.yaml").write_text(
        yaml.safe_dump(cfg, sort_keys=True), encoding="utf-8"
    )


def _write_repro(path: Path, command: str, config: dict, seeds) -> None:
    record = {
        "command": command,
        "config": config,
        "seeds": list(seeds),
        "versions": _versions(),
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _versions() -> dict:
    versions = {"python": platform.python_version()}
    for package in ("augbench", "numpy", "torch", "pillow", "pyyaml"):
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def _parse_grid(text: str):
    try:
        d_part, g_part = str(text).lower().split("x")
        n_ds = [int(v) for v in d_part.split(",") if v]
        n_gs = [int(v) for v in g_part.split(",") if v]
        if not n_ds or not n_gs:
            raise ValueError("empty axis")
    except ValueError as exc:
        raise ConfigError(
            f'bad grid {text!r}: expected "ND[,ND...]xNG[,NG...]", e.g. "3,4x2,4"'
        ) from exc
    return [(nd, ng) for nd in n_ds for ng in n_gs]


if __name__ == "__main__":
    sys.exit(main())
