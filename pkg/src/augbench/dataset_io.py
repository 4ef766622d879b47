"""Dataset ingestion, persistence, and subsetting.

A dataset on disk is a flat CSV manifest (one row per image) plus the PNG
files it references, with an optional ``meta.json`` sidecar carrying
``num_classes`` and ``shape_family``. In memory every image is an HxWx3
float32 raster with channel values in [0, 1]; after ingestion H = W = 64.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ManifestError, ValidationError

IMAGE_SIZE = 64

MANIFEST_NAME = "manifest.csv"
META_NAME = "meta.json"
MANIFEST_FIELDS = (
    "path",
    "class_index",
    "split",
    "bbox_x",
    "bbox_y",
    "bbox_w",
    "bbox_h",
    "quality",
)

SPLITS = ("train", "test")
SHAPE_FAMILIES = ("circular", "triangular", "synthetic")

# Fixed class counts for the two real sign families; "synthetic" is free.
FAMILY_NUM_CLASSES = {"circular": 36, "triangular": 16}


@dataclass(frozen=True, eq=False)
class ImageSample:
    """One labeled image.

    ``pixels`` is an HxWx3 float32 array in [0, 1] and is made read-only on
    construction so samples can be shared across threads.
    """

    pixels: np.ndarray
    class_index: int
    split: str = "train"
    bbox: tuple[int, int, int, int] | None = None
    quality: float | None = None

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 3 or px.shape[2] != 3 or px.shape[0] < 1 or px.shape[1] < 1:
            raise ValidationError(f"pixels must be HxWx3, got shape {px.shape}")
        if float(px.min()) < 0.0 or float(px.max()) > 1.0:
            raise ValidationError("pixel values must lie in [0, 1]")
        if px.flags.writeable:
            if px is self.pixels:
                px = px.copy()
            px.setflags(write=False)
        object.__setattr__(self, "pixels", px)
        if self.class_index < 0:
            raise ValidationError(f"class_index must be >= 0, got {self.class_index}")
        if self.split not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}, got {self.split!r}")
        if self.bbox is not None:
            bbox = tuple(int(v) for v in self.bbox)
            if len(bbox) != 4 or bbox[2] < 0 or bbox[3] < 0:
                raise ValidationError(f"bbox must be (x, y, w, h) with w, h >= 0, got {self.bbox}")
            object.__setattr__(self, "bbox", bbox)
        if self.quality is not None:
            q = float(self.quality)
            if not 0.0 <= q <= 1.0:
                raise ValidationError(f"quality must lie in [0, 1], got {q}")
            object.__setattr__(self, "quality", q)


@dataclass(frozen=True, eq=False)
class Dataset:
    """An ordered, immutable collection of samples with a fixed label space."""

    samples: tuple[ImageSample, ...]
    num_classes: int
    shape_family: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(self.samples))
        if self.num_classes < 1:
            raise ValidationError(f"num_classes must be >= 1, got {self.num_classes}")
        if self.shape_family not in SHAPE_FAMILIES:
            raise ValidationError(
                f"shape_family must be one of {SHAPE_FAMILIES}, got {self.shape_family!r}"
            )
        expected = FAMILY_NUM_CLASSES.get(self.shape_family)
        if expected is not None and self.num_classes != expected:
            raise ValidationError(
                f"{self.shape_family} family has {expected} classes, got {self.num_classes}"
            )
        for i, s in enumerate(self.samples):
            if s.class_index >= self.num_classes:
                raise ValidationError(
                    f"sample {i}: class_index {s.class_index} >= num_classes {self.num_classes}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def split_subset(self, split: str) -> "Dataset":
        """Samples with the given split tag, order preserved."""
        if split not in SPLITS:
            raise ValidationError(f"unknown split {split!r}")
        kept = tuple(s for s in self.samples if s.split == split)
        return Dataset(kept, self.num_classes, self.shape_family)

    def class_counts(self, split: str | None = None) -> np.ndarray:
        """Per-class sample counts (length ``num_classes``)."""
        counts = np.zeros(self.num_classes, dtype=np.int64)
        for s in self.samples:
            if split is None or s.split == split:
                counts[s.class_index] += 1
        return counts


def rescale_image(pixels: np.ndarray, target: int) -> np.ndarray:
    """Bilinear resample an HxWx3 raster to target x target.

    Uses half-pixel-center source coordinates with edge clamping, so the
    operation is the identity when the input is already target x target.
    """
    px = np.asarray(pixels)
    if px.ndim != 3 or px.shape[2] != 3:
        raise ValidationError(f"expected HxWx3 raster, got shape {px.shape}")
    h, w = px.shape[:2]
    if h < 1 or w < 1 or target < 1:
        raise ValidationError("image dimensions and target must be >= 1")
    if h == target and w == target:
        return px.astype(np.float32, copy=True)

    src = px.astype(np.float64)
    ylo, yhi, fy = _resample_coords(h, target)
    xlo, xhi, fx = _resample_coords(w, target)
    fy = fy[:, None, None]
    fx = fx[None, :, None]
    top = (1.0 - fx) * src[np.ix_(ylo, xlo)] + fx * src[np.ix_(ylo, xhi)]
    bot = (1.0 - fx) * src[np.ix_(yhi, xlo)] + fx * src[np.ix_(yhi, xhi)]
    out = (1.0 - fy) * top + fy * bot
    return out.astype(np.float32)


def _resample_coords(n_in: int, n_out: int):
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.int64)
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, src - lo


def load_dataset(
    manifest_path,
    *,
    num_classes: int | None = None,
    shape_family: str | None = None,
) -> Dataset:
    """Load a dataset from a CSV manifest.

    Images are rescaled to 64x64 and normalized to [0, 1]; sample order
    equals manifest order. ``num_classes``/``shape_family`` default to the
    ``meta.json`` sidecar next to the manifest when present, otherwise the
    class count is inferred as max(class_index) + 1.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")

    meta = _read_meta(manifest_path)
    if shape_family is None:
        shape_family = meta.get("shape_family", "synthetic")
    if num_classes is None:
        num_classes = meta.get("num_classes")

    rows = _read_manifest_rows(manifest_path)
    if not rows:
        raise ValidationError(f"empty dataset: {manifest_path} has no rows")

    root = manifest_path.parent
    samples = []
    for i, row in enumerate(rows, start=1):
        rel_path, class_index, split, bbox, quality = _parse_row(row, i)
        img_path = root / rel_path
        if not img_path.is_file():
            raise ManifestError(f"manifest row {i}: image not found: {img_path}")
        try:
            px = _read_png(img_path)
        except Exception as exc:
            raise ManifestError(f"manifest row {i}: unreadable image {img_path}: {exc}") from exc
        if px.shape[0] != IMAGE_SIZE or px.shape[1] != IMAGE_SIZE:
            px = rescale_image(px, IMAGE_SIZE)
        samples.append(ImageSample(px, class_index, split, bbox, quality))

    if num_classes is None:
        num_classes = max(s.class_index for s in samples) + 1
    try:
        return Dataset(tuple(samples), int(num_classes), shape_family)
    except ValidationError as exc:
        raise ValidationError(f"{manifest_path}: {exc}") from exc


def save_dataset(dataset: Dataset, out_dir) -> Path:
    """Write a dataset as PNG files plus a CSV manifest; returns the manifest path.

    Loading the result back reproduces labels exactly and pixels within the
    8-bit quantization error (1/255 per channel).
    """
    if len(dataset) == 0:
        raise ValidationError("empty dataset: refusing to save a dataset with no samples")
    out_dir = Path(out_dir)
    images_dir = out_dir / "images"
    images_dir.mkdir(parents=True, exist_ok=True)

    manifest_path = out_dir / MANIFEST_NAME
    with manifest_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_FIELDS)
        for i, s in enumerate(dataset.samples):
            rel = f"images/{i:06d}.png"
            _write_png(out_dir / rel, s.pixels)
            bbox = ["", "", "", ""] if s.bbox is None else [str(v) for v in s.bbox]
            quality = "" if s.quality is None else repr(s.quality)
            writer.writerow([rel, s.class_index, s.split, *bbox, quality])

    meta = {
        "schema_version": 1,
        "num_classes": dataset.num_classes,
        "shape_family": dataset.shape_family,
    }
    (out_dir / META_NAME).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return manifest_path


def select_gan_subset(dataset: Dataset, n: int) -> Dataset:
    """The ``n`` highest-quality samples, in manifest order.

    Ranking uses the per-sample quality score; samples without one fall back
    to bbox area (larger = better), then to 0. Ties keep manifest order.
    """
    if n < 0:
        raise ValidationError(f"subset size must be >= 0, got {n}")
    if n > len(dataset):
        raise ValidationError(f"subset size {n} exceeds dataset size {len(dataset)}")

    def rank(sample: ImageSample) -> float:
        if sample.quality is not None:
            return sample.quality
        if sample.bbox is not None:
            return float(sample.bbox[2] * sample.bbox[3])
        return 0.0

    order = sorted(range(len(dataset)), key=lambda i: (-rank(dataset.samples[i]), i))
    chosen = sorted(order[:n])
    return Dataset(
        tuple(dataset.samples[i] for i in chosen), dataset.num_classes, dataset.shape_family
    )


def merge_datasets(a: Dataset, b: Dataset) -> Dataset:
    """Concatenate two datasets over the same label space (a's samples first)."""
    if a.num_classes != b.num_classes:
        raise ValidationError(
            f"cannot merge datasets with num_classes {a.num_classes} vs {b.num_classes}"
        )
    if a.shape_family != b.shape_family:
        raise ValidationError(
            f"cannot merge datasets with shape_family {a.shape_family!r} vs {b.shape_family!r}"
        )
    return Dataset(a.samples + b.samples, a.num_classes, a.shape_family)


def _read_meta(manifest_path: Path) -> dict:
    meta_path = manifest_path.parent / META_NAME
    if not meta_path.is_file():
        return {}
    try:
        return json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"invalid meta file {meta_path}: {exc}") from exc


def _read_manifest_rows(manifest_path: Path) -> list[dict]:
    with manifest_path.open("r", newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        if tuple(reader.fieldnames) != MANIFEST_FIELDS:
            raise ManifestError(
                f"manifest header must be {','.join(MANIFEST_FIELDS)}, "
                f"got {','.join(reader.fieldnames)}"
            )
        return list(reader)


def _parse_row(row: dict, index: int):
    try:
        rel_path = row["path"]
        class_index = int(row["class_index"])
        split = row["split"]
        bbox_fields = [row["bbox_x"], row["bbox_y"], row["bbox_w"], row["bbox_h"]]
        if all(v == "" for v in bbox_fields):
            bbox = None
        elif any(v == "" for v in bbox_fields):
            raise ValueError("bbox must have all four fields or none")
        else:
            bbox = tuple(int(v) for v in bbox_fields)
        quality = None if row["quality"] == "" else float(row["quality"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"manifest row {index}: {exc}") from exc
    if not rel_path:
        raise ManifestError(f"manifest row {index}: empty path")
    return rel_path, class_index, split, bbox, quality


def read_image(path) -> np.ndarray:
    """Load an image file as a float32 HxWx3 array in [0, 1]."""
    return _read_png(Path(path))


def write_image(pixels: np.ndarray, path) -> None:
    """Write an HxWx3 array in [0, 1] as an 8-bit RGB PNG."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_png(path, pixels)


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32)
    return arr / 255.0


def _write_png(path: Path, pixels: np.ndarray) -> None:
    arr = np.clip(np.rint(np.asarray(pixels, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr, mode="RGB").save(path, format="PNG")
