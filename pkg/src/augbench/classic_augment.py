"""Seven classical augmentation techniques with uniform parameter sampling.

Each technique is a pure function of (image, params). Parameter sampling is
deterministic given (seed, draw_index), so augmenting a dataset twice with
the same spec yields bit-equal results regardless of iteration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._raster import inverse_affine_warp, rotation_about_center_matrix
from .dataset_io import IMAGE_SIZE, Dataset, ImageSample, rescale_image
from .errors import ConfigError, ValidationError

TECHNIQUES = (
    "blur",
    "brightness",
    "contrast",
    "displacement",
    "occlusion",
    "rotation",
    "scaling",
)

# Calibrated so every augmented sign stays recognizable at 64x64. All of
# these can be overridden through AugmentationSpec.param_ranges.
DEFAULT_RANGES = {
    "blur": {"sigma": (0.5, 2.0)},
    "brightness": {"delta": (-0.25, 0.25)},
    "contrast": {"factor": (0.6, 1.4)},
    "displacement": {"dx": (-6.0, 6.0), "dy": (-6.0, 6.0)},
    "occlusion": {"width": (0.0, 32.0), "height": (0.0, 32.0), "fill": (0.5, 0.5)},
    "rotation": {"theta_deg": (-15.0, 15.0)},
    "scaling": {"scale": (0.8, 1.2)},
}


@dataclass(frozen=True)
class AugmentationSpec:
    """One technique plus its sampling ranges and RNG seed."""

    technique: str
    seed: int = 0
    param_ranges: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ConfigError(
                f"unknown technique {self.technique!r}; expected one of {', '.join(TECHNIQUES)}"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        defaults = DEFAULT_RANGES[self.technique]
        merged = {}
        for name, default in defaults.items():
            lo, hi = (float(v) for v in self.param_ranges.get(name, default))
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"range for {name!r} must be finite, got ({lo}, {hi})")
            if lo > hi:
                raise ConfigError(f"inverted range for {name!r}: ({lo}, {hi})")
            merged[name] = (lo, hi)
        if self.technique == "occlusion":
            for name in ("width", "height"):
                lo, hi = merged[name]
                if lo < 0 or hi > IMAGE_SIZE:
                    raise ConfigError(
                        f"occlusion {name} range must lie in [0, {IMAGE_SIZE}], got ({lo}, {hi})"
                    )
            lo, hi = merged["fill"]
            if lo < 0.0 or hi > 1.0:
                raise ConfigError(f"occlusion fill range must lie in [0, 1], got ({lo}, {hi})")
        unknown = set(self.param_ranges) - set(defaults)
        if unknown:
            raise ConfigError(
                f"{self.technique} does not take parameter(s) {sorted(unknown)}; "
                f"expected {sorted(defaults)}"
            )
        object.__setattr__(self, "param_ranges", merged)

    def to_dict(self) -> dict:
        return {
            "technique": self.technique,
            "seed": self.seed,
            "param_ranges": {k: list(v) for k, v in self.param_ranges.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AugmentationSpec":
        return cls(
            technique=data["technique"],
            seed=int(data.get("seed", 0)),
            param_ranges=dict(data.get("param_ranges", {})),
        )


def sample_params(spec: AugmentationSpec, draw_index: int) -> tuple:
    """Draw one parameter tuple for apply_op, uniform over the spec ranges.

    Fully determined by (spec.seed, draw_index). Occlusion draws integer
    rectangle geometry; the remaining techniques draw reals.
    """
    if draw_index < 0:
        raise ValidationError(f"draw_index must be >= 0, got {draw_index}")
    rng = np.random.default_rng(np.random.SeedSequence((spec.seed, draw_index)))
    r = spec.param_ranges
    if spec.technique == "blur":
        return (_uniform(rng, r["sigma"]),)
    if spec.technique == "brightness":
        return (_uniform(rng, r["delta"]),)
    if spec.technique == "contrast":
        return (_uniform(rng, r["factor"]),)
    if spec.technique == "displacement":
        return (_uniform(rng, r["dx"]), _uniform(rng, r["dy"]))
    if spec.technique == "occlusion":
        w = _uniform_int(rng, r["width"])
        h = _uniform_int(rng, r["height"])
        x = int(rng.integers(0, IMAGE_SIZE - w + 1))
        y = int(rng.integers(0, IMAGE_SIZE - h + 1))
        return (x, y, w, h, _uniform(rng, r["fill"]))
    if spec.technique == "rotation":
        return (_uniform(rng, r["theta_deg"]),)
    return (_uniform(rng, r["scale"]),)


def apply_op(image: np.ndarray, technique: str, params: tuple) -> np.ndarray:
    """Apply one augmentation to an HxWx3 image in [0,1]; returns float32.

    Semantics: blur = Gaussian of std sigma (replicated border); brightness
    = add delta, clip; contrast = scale about mid-gray by factor, clip;
    displacement = translate by (dx, dy) with border replication; occlusion
    = fill the rectangle (x, y, w, h) with a constant; rotation = rotate
    theta degrees about the image center with border replication; scaling =
    resample by s then center-crop or edge-pad back to the input size.
    """
    img = np.asarray(image, dtype=np.float32)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValidationError(f"expected an HxWx3 image, got shape {img.shape}")
    if technique not in TECHNIQUES:
        raise ConfigError(f"unknown technique {technique!r}")
    handler = _HANDLERS[technique]
    out = handler(img, *params)
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def augment_dataset(dataset: Dataset, spec: AugmentationSpec) -> Dataset:
    """Double a dataset: all originals, then one augmented copy per original.

    Copy i uses the parameter draw with draw_index i, so the result is
    reproducible and independent of processing order. Augmented copies keep
    the source label and split; bounding box and quality are dropped since
    geometric ops invalidate them.
    """
    if len(dataset) == 0:
        raise ValidationError("cannot augment an empty dataset")
    copies = []
    for i, sample in enumerate(dataset.samples):
        params = sample_params(spec, i)
        pixels = apply_op(sample.pixels, spec.technique, params)
        copies.append(ImageSample(pixels, sample.class_index, split=sample.split))
    return Dataset(
        dataset.samples + tuple(copies),
        num_classes=dataset.num_classes,
        shape_family=dataset.shape_family,
    )


# --- per-technique implementations -------------------------------------------


def _blur(img, sigma):
    sigma = float(sigma)
    if not math.isfinite(sigma) or sigma < 0.0:
        raise ValidationError(f"blur sigma must be >= 0, got {sigma}")
    kernel = _gaussian_kernel(sigma)
    if len(kernel) == 1:
        return img.copy()
    out = img.astype(np.float64)
    out = _convolve_axis(out, kernel, axis=0)
    out = _convolve_axis(out, kernel, axis=1)
    return out


def _brightness(img, delta):
    delta = float(delta)
    if not -1.0 <= delta <= 1.0:
        raise ValidationError(f"brightness delta must be in [-1, 1], got {delta}")
    return img.astype(np.float64) + delta


def _contrast(img, factor):
    factor = float(factor)
    if not math.isfinite(factor) or factor < 0.0:
        raise ValidationError(f"contrast factor must be >= 0, got {factor}")
    return 0.5 + factor * (img.astype(np.float64) - 0.5)


def _displacement(img, dx, dy):
    dx, dy = float(dx), float(dy)
    if not (math.isfinite(dx) and math.isfinite(dy)):
        raise ValidationError(f"displacement must be finite, got ({dx}, {dy})")
    if dx == 0.0 and dy == 0.0:
        return img.copy()
    matrix = np.array([[1.0, 0.0, -dx], [0.0, 1.0, -dy]])
    return inverse_affine_warp(img.astype(np.float64), matrix)


def _occlusion(img, x, y, w, h, fill):
    h_img, w_img = img.shape[:2]
    x, y, w, h = int(x), int(y), int(w), int(h)
    fill = float(fill)
    if w < 0 or h < 0 or x < 0 or y < 0 or x + w > w_img or y + h > h_img:
        raise ValidationError(
            f"occlusion rect ({x}, {y}, {w}, {h}) outside a {w_img}x{h_img} image"
        )
    if not 0.0 <= fill <= 1.0:
        raise ValidationError(f"occlusion fill must be in [0, 1], got {fill}")
    out = img.copy()
    out[y : y + h, x : x + w] = fill
    return out


def _rotation(img, theta_deg):
    theta_deg = float(theta_deg)
    if not math.isfinite(theta_deg):
        raise ValidationError(f"rotation angle must be finite, got {theta_deg}")
    if theta_deg == 0.0:
        return img.copy()
    h, w = img.shape[:2]
    matrix = rotation_about_center_matrix(h, w, theta_deg)
    return inverse_affine_warp(img.astype(np.float64), matrix)


def _scaling(img, scale):
    scale = float(scale)
    size = img.shape[0]
    if img.shape[0] != img.shape[1]:
        raise ValidationError(f"scaling expects a square image, got {img.shape[:2]}")
    if not math.isfinite(scale) or scale <= 0.0 or round(size * scale) < 1:
        raise ValidationError(f"scale factor {scale} is outside the legal domain")
    target = int(round(size * scale))
    resampled = rescale_image(img, target)
    if target == size:
        return resampled
    if target > size:
        off = (target - size) // 2
        return resampled[off : off + size, off : off + size]
    before = (size - target) // 2
    after = size - target - before
    return np.pad(resampled, ((before, after), (before, after), (0, 0)), mode="edge")


_HANDLERS = {
    "blur": _blur,
    "brightness": _brightness,
    "contrast": _contrast,
    "displacement": _displacement,
    "occlusion": _occlusion,
    "rotation": _rotation,
    "scaling": _scaling,
}


def _gaussian_kernel(sigma: float) -> np.ndarray:
    if sigma == 0.0:
        return np.ones(1)
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def _convolve_axis(img: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (radius, radius)
    padded = np.pad(img, pad, mode="edge")
    out = np.zeros_like(img)
    index = [slice(None)] * img.ndim
    n = img.shape[axis]
    for i, weight in enumerate(kernel):
        index[axis] = slice(i, i + n)
        out += weight * padded[tuple(index)]
    return out


def _uniform(rng, bounds) -> float:
    lo, hi = bounds
    return lo if lo == hi else float(rng.uniform(lo, hi))


def _uniform_int(rng, bounds) -> int:
    lo, hi = int(math.ceil(bounds[0])), int(math.floor(bounds[1]))
    if hi < lo:
        raise ConfigError(f"range ({bounds[0]}, {bounds[1]}) contains no integers")
    return int(rng.integers(lo, hi + 1))
