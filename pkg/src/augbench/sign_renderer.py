"""Procedural sign rendering and pseudo-realistic sample synthesis.

Symbolic signs are rasterized from vector templates (circle or triangle
silhouette plus a pictogram built from a small set of primitives). The same
template rendered twice is bit-identical: rasterization is pure numpy with a
fixed 4x supersampling factor. ``synthesize_realistic`` turns a template
into a photograph-like stand-in sample for desk-scale experiments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from ._raster import bilinear_sample, inverse_affine_warp
from .dataset_io import ImageSample, Dataset, rescale_image
from .errors import ConfigError, ValidationError

SUPERSAMPLE = 4
MIN_RENDER_SIZE = 16
BACKGROUND_COLOR = (0.5, 0.5, 0.5)

# Silhouette geometry in normalized [0,1]^2 coordinates (x = column, y = row).
CIRCLE_CENTER = (0.5, 0.5)
CIRCLE_RADIUS = 0.47
CIRCLE_BORDER = 0.085
TRIANGLE_VERTS = ((0.5, 0.14), (0.06, 0.90), (0.94, 0.90))
TRIANGLE_BORDER = 0.055

PRIMITIVE_KINDS = ("line", "polyline", "arc", "disc", "digit", "arrow")

TEMPLATE_SCHEMA_VERSION = 1
TEMPLATE_FAMILIES = ("circular", "triangular", "novel")

# Photometric / geometric jitter budget for synthesize_realistic. These are
# desk-scale calibration values, overridable nowhere on purpose: the
# regression bound in the tests is frozen against them.
BRIGHTNESS_JITTER = 0.2
HUE_JITTER_DEG = 10.0
WARP_ROTATION_DEG = 1.5
WARP_SCALE_JITTER = 0.015
WARP_SHIFT_PX = 1.0
SENSOR_NOISE_STD = 0.02


@dataclass(frozen=True, eq=False)
class SignTemplate:
    """Vector description of one sign class.

    ``pictogram`` is an ordered list of primitive dicts, each with a
    ``kind`` key from PRIMITIVE_KINDS; all coordinates live in [0,1]^2.
    """

    shape: str
    class_index: int
    border_color: tuple[float, float, float]
    face_color: tuple[float, float, float]
    pictogram: tuple[dict, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.shape not in ("circle", "triangle"):
            raise ValidationError(f"template shape must be circle or triangle, got {self.shape!r}")
        if self.class_index < 0:
            raise ValidationError(f"class_index must be >= 0, got {self.class_index}")
        object.__setattr__(self, "border_color", _check_color(self.border_color))
        object.__setattr__(self, "face_color", _check_color(self.face_color))
        prims = tuple(dict(p) for p in self.pictogram)
        for i, prim in enumerate(prims):
            kind = prim.get("kind")
            if kind not in PRIMITIVE_KINDS:
                raise ValidationError(f"pictogram[{i}]: unknown primitive kind {kind!r}")
            for x, y in _primitive_points(prim):
                if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                    raise ValidationError(
                        f"pictogram[{i}] ({kind}): point ({x}, {y}) outside [0,1]^2"
                    )
        object.__setattr__(self, "pictogram", prims)


@dataclass(frozen=True, eq=False)
class PairedSample:
    """A (symbolic, real) training pair; the symbolic half is the GAN condition."""

    symbolic: np.ndarray
    real: np.ndarray
    class_index: int

    def __post_init__(self):
        sym = _freeze(np.asarray(self.symbolic, dtype=np.float32))
        real = _freeze(np.asarray(self.real, dtype=np.float32))
        if sym.shape != real.shape:
            raise ValidationError(
                f"symbolic and real halves must match, got {sym.shape} vs {real.shape}"
            )
        object.__setattr__(self, "symbolic", sym)
        object.__setattr__(self, "real", real)


def render_symbolic(template: SignTemplate, size: int) -> np.ndarray:
    """Rasterize a template to a size x size x 3 float32 image in [0, 1].

    Deterministic: a pure function of (template, size). The area outside the
    sign silhouette is BACKGROUND_COLOR; edges are anti-aliased by 4x
    supersampling.
    """
    if size < MIN_RENDER_SIZE:
        raise ValidationError(f"render size must be >= {MIN_RENDER_SIZE}, got {size}")
    hi = size * SUPERSAMPLE
    coords = (np.arange(hi, dtype=np.float64) + 0.5) / hi
    X, Y = np.meshgrid(coords, coords)
    canvas = np.empty((hi, hi, 3), dtype=np.float64)
    canvas[:] = BACKGROUND_COLOR

    if template.shape == "circle":
        _paint(canvas, _disc_mask(X, Y, CIRCLE_CENTER, CIRCLE_RADIUS), template.border_color)
        _paint(
            canvas,
            _disc_mask(X, Y, CIRCLE_CENTER, CIRCLE_RADIUS - CIRCLE_BORDER),
            template.face_color,
        )
    else:
        _paint(canvas, _triangle_mask(X, Y, TRIANGLE_VERTS), template.border_color)
        inner = _inset_triangle(TRIANGLE_VERTS, TRIANGLE_BORDER)
        _paint(canvas, _triangle_mask(X, Y, inner), template.face_color)

    for prim in template.pictogram:
        _paint(canvas, _primitive_mask(X, Y, prim), prim.get("color", (0.05, 0.05, 0.05)))

    out = canvas.reshape(size, SUPERSAMPLE, size, SUPERSAMPLE, 3).mean(axis=(1, 3))
    return np.clip(out, 0.0, 1.0).astype(np.float32)


def compose_pair(real_sample: ImageSample, template: SignTemplate) -> PairedSample:
    """Pair a real sample with the symbolic render of its class."""
    if real_sample.class_index != template.class_index:
        raise ValidationError(
            f"class mismatch: sample has class {real_sample.class_index}, "
            f"template has class {template.class_index}"
        )
    h, w = real_sample.pixels.shape[:2]
    if h != w:
        raise ValidationError(f"real sample must be square, got {h}x{w}")
    symbolic = render_symbolic(template, h)
    return PairedSample(symbolic, real_sample.pixels, template.class_index)


def build_pairs(dataset: Dataset, library: dict[int, SignTemplate]) -> tuple[PairedSample, ...]:
    """Compose one (symbolic, real) pair per dataset sample, in dataset order."""
    pairs = []
    for i, sample in enumerate(dataset.samples):
        template = library.get(sample.class_index)
        if template is None:
            raise ValidationError(f"sample {i}: no template for class {sample.class_index}")
        pairs.append(compose_pair(sample, template))
    return tuple(pairs)


def synthesize_realistic(
    template: SignTemplate,
    rng_seed: int,
    size: int = 64,
    split: str = "train",
) -> ImageSample:
    """Render a template and degrade it into a pseudo-realistic sample.

    Applies, in fixed order: random background clutter behind the sign
    silhouette, a small affine warp, hue and brightness jitter, and Gaussian
    sensor noise. Deterministic given (template, rng_seed): the rng draw
    order is part of the contract.
    """
    rng = np.random.default_rng(rng_seed)
    clean = render_symbolic(template, size).astype(np.float64)

    # Background clutter: smooth random field mixed with a vertical gradient.
    coarse = rng.uniform(0.15, 0.85, size=(8, 8, 3))
    field = rescale_image(coarse.astype(np.float32), size).astype(np.float64)
    top = rng.uniform(0.3, 0.9, size=3)
    bottom = rng.uniform(0.1, 0.7, size=3)
    ramp = np.linspace(0.0, 1.0, size)[:, None, None]
    clutter = 0.5 * field + 0.5 * ((1.0 - ramp) * top + ramp * bottom)

    bg = np.asarray(BACKGROUND_COLOR)
    alpha = np.clip(np.abs(clean - bg).max(axis=2) / 0.15, 0.0, 1.0)
    composed = alpha[:, :, None] * clean + (1.0 - alpha[:, :, None]) * clutter

    theta = rng.uniform(-WARP_ROTATION_DEG, WARP_ROTATION_DEG)
    scale = 1.0 + rng.uniform(-WARP_SCALE_JITTER, WARP_SCALE_JITTER)
    shift = rng.uniform(-WARP_SHIFT_PX, WARP_SHIFT_PX, size=2)
    matrix = _jitter_warp_matrix(size, theta, scale, shift)
    warped = inverse_affine_warp(composed, matrix)
    warped_alpha = inverse_affine_warp(alpha, matrix)

    hue_deg = rng.uniform(-HUE_JITTER_DEG, HUE_JITTER_DEG)
    brightness = rng.uniform(-BRIGHTNESS_JITTER, BRIGHTNESS_JITTER)
    out = _hue_rotate(warped, hue_deg) + brightness
    out = out + rng.normal(0.0, SENSOR_NOISE_STD, size=out.shape)
    out = np.clip(out, 0.0, 1.0).astype(np.float32)

    quality = float(rng.uniform(0.3, 1.0))
    return ImageSample(
        out, template.class_index, split=split, bbox=_mask_bbox(warped_alpha), quality=quality
    )


def build_synthetic_dataset(
    family: str,
    n_train: int,
    n_test: int,
    num_classes: int | None = None,
    seed: int = 0,
) -> Dataset:
    """Desk-scale synthetic dataset: classes cycle round-robin over templates.

    Uses the first ``num_classes`` template classes of ``family`` (all of
    them when None). Deterministic given the arguments.
    """
    library = load_template_library(family)
    classes = sorted(library)
    if num_classes is not None:
        if num_classes < 1 or num_classes > len(classes):
            raise ValidationError(
                f"num_classes must be in [1, {len(classes)}], got {num_classes}"
            )
        classes = classes[:num_classes]
    if n_train < 1 or n_test < 0:
        raise ValidationError("need n_train >= 1 and n_test >= 0")

    seeds = np.random.SeedSequence(seed).generate_state(n_train + n_test, dtype=np.uint64)
    samples = []
    for i in range(n_train):
        cls = classes[i % len(classes)]
        samples.append(synthesize_realistic(library[cls], int(seeds[i]), split="train"))
    for j in range(n_test):
        cls = classes[j % len(classes)]
        samples.append(
            synthesize_realistic(library[cls], int(seeds[n_train + j]), split="test")
        )
    return Dataset(tuple(samples), num_classes=len(classes), shape_family="synthetic")


# --- template library -------------------------------------------------------


def template_to_dict(template: SignTemplate, family: str) -> dict:
    return {
        "schema_version": TEMPLATE_SCHEMA_VERSION,
        "family": family,
        "class_index": template.class_index,
        "name": template.name,
        "shape": template.shape,
        "border_color": list(template.border_color),
        "face_color": list(template.face_color),
        "pictogram": [dict(p) for p in template.pictogram],
    }


def template_from_dict(data: dict) -> SignTemplate:
    try:
        version = data.get("schema_version", TEMPLATE_SCHEMA_VERSION)
        if version != TEMPLATE_SCHEMA_VERSION:
            raise ValidationError(f"unsupported template schema_version {version}")
        return SignTemplate(
            shape=data["shape"],
            class_index=int(data["class_index"]),
            border_color=tuple(data["border_color"]),
            face_color=tuple(data["face_color"]),
            pictogram=tuple(data.get("pictogram", ())),
            name=data.get("name", ""),
        )
    except KeyError as exc:
        raise ValidationError(f"template record missing field {exc}") from exc


def save_template(template: SignTemplate, family: str, path) -> None:
    Path(path).write_text(
        json.dumps(template_to_dict(template, family), indent=2) + "\n", encoding="utf-8"
    )


def load_template_file(path) -> SignTemplate:
    return template_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def load_template_library(family: str) -> dict[int, SignTemplate]:
    """All templates of a family, keyed by class index.

    Families bundled with the package: "circular" (36 classes),
    "triangular" (16), and "novel" (probe signs outside the training
    families). A filesystem directory of template JSON files also works.
    """
    if family in TEMPLATE_FAMILIES:
        base = resources.files("augbench") / "templates" / family
        entries = [e for e in base.iterdir() if e.name.endswith(".json")]
    else:
        path = Path(family)
        if not path.is_dir():
            raise ConfigError(f"unknown template family or directory: {family!r}")
        entries = sorted(path.glob("*.json"))
    library = {}
    for entry in sorted(entries, key=lambda e: e.name):
        template = template_from_dict(json.loads(entry.read_text(encoding="utf-8")))
        if template.class_index in library:
            raise ConfigError(f"duplicate template class_index {template.class_index} in {family}")
        library[template.class_index] = template
    if not library:
        raise ConfigError(f"template family {family!r} has no templates")
    return library


def load_template(family: str, class_index: int) -> SignTemplate:
    library = load_template_library(family)
    if class_index not in library:
        raise ConfigError(f"family {family!r} has no template for class {class_index}")
    return library[class_index]


def find_template_by_name(family: str, name: str) -> SignTemplate:
    library = load_template_library(family)
    for template in library.values():
        if template.name == name:
            return template
    known = ", ".join(sorted(t.name for t in library.values()))
    raise ConfigError(f"family {family!r} has no template named {name!r} (known: {known})")


# --- rasterization internals -------------------------------------------------


def _check_color(color) -> tuple[float, float, float]:
    values = tuple(float(c) for c in color)
    if len(values) != 3 or any(not 0.0 <= c <= 1.0 for c in values):
        raise ValidationError(f"color must be an RGB triple in [0,1], got {color!r}")
    return values


def _freeze(arr: np.ndarray) -> np.ndarray:
    if arr.flags.writeable:
        arr = arr.copy()
        arr.setflags(write=False)
    return arr


def _paint(canvas: np.ndarray, mask: np.ndarray, color) -> None:
    canvas[mask] = np.asarray(color, dtype=np.float64)


def _disc_mask(X, Y, center, radius):
    return (X - center[0]) ** 2 + (Y - center[1]) ** 2 <= radius * radius


def _triangle_mask(X, Y, verts):
    (x0, y0), (x1, y1), (x2, y2) = verts
    e0 = (x1 - x0) * (Y - y0) - (y1 - y0) * (X - x0)
    e1 = (x2 - x1) * (Y - y1) - (y2 - y1) * (X - x1)
    e2 = (x0 - x2) * (Y - y2) - (y0 - y2) * (X - x2)
    return ((e0 >= 0) & (e1 >= 0) & (e2 >= 0)) | ((e0 <= 0) & (e1 <= 0) & (e2 <= 0))


def _inset_triangle(verts, inset):
    vx = np.array([v[0] for v in verts])
    vy = np.array([v[1] for v in verts])
    cx, cy = vx.mean(), vy.mean()
    # Inradius of the triangle: area / semiperimeter.
    a = np.hypot(vx[1] - vx[0], vy[1] - vy[0])
    b = np.hypot(vx[2] - vx[1], vy[2] - vy[1])
    c = np.hypot(vx[0] - vx[2], vy[0] - vy[2])
    s = (a + b + c) / 2.0
    area = np.sqrt(max(s * (s - a) * (s - b) * (s - c), 0.0))
    r_in = area / s
    factor = max(1.0 - inset / r_in, 0.0)
    return tuple((cx + factor * (x - cx), cy + factor * (y - cy)) for x, y in verts)


def _segment_mask(X, Y, p0, p1, width):
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    d = p1 - p0
    L2 = float(d @ d)
    r2 = (width / 2.0) ** 2
    if L2 == 0.0:
        return (X - p0[0]) ** 2 + (Y - p0[1]) ** 2 <= r2
    t = np.clip(((X - p0[0]) * d[0] + (Y - p0[1]) * d[1]) / L2, 0.0, 1.0)
    px = p0[0] + t * d[0]
    py = p0[1] + t * d[1]
    return (X - px) ** 2 + (Y - py) ** 2 <= r2


def _arc_mask(X, Y, center, radius, width, start_deg, end_deg):
    dx = X - center[0]
    dy = Y - center[1]
    dist = np.sqrt(dx * dx + dy * dy)
    ring = (dist >= radius - width / 2.0) & (dist <= radius + width / 2.0)
    ang = np.degrees(np.arctan2(dy, dx))  # screen coords, y down
    start = ((start_deg + 180.0) % 360.0) - 180.0
    end = ((end_deg + 180.0) % 360.0) - 180.0
    if start <= end:
        sector = (ang >= start) & (ang <= end)
    else:
        sector = (ang >= start) | (ang <= end)
    return ring & sector


# Seven-segment layout: tuple of (segment start, segment end) in a unit box
# centered at the origin, x in [-0.5, 0.5] * width, y in [-0.5, 0.5] * height.
_SEGMENT_ENDPOINTS = {
    "A": ((-0.5, -1.0), (0.5, -1.0)),
    "B": ((0.5, -1.0), (0.5, 0.0)),
    "C": ((0.5, 0.0), (0.5, 1.0)),
    "D": ((-0.5, 1.0), (0.5, 1.0)),
    "E": ((-0.5, 0.0), (-0.5, 1.0)),
    "F": ((-0.5, -1.0), (-0.5, 0.0)),
    "G": ((-0.5, 0.0), (0.5, 0.0)),
}

_DIGIT_SEGMENTS = {
    "0": "ABCDEF",
    "1": "BC",
    "2": "ABGED",
    "3": "ABGCD",
    "4": "FGBC",
    "5": "AFGCD",
    "6": "AFGECD",
    "7": "ABC",
    "8": "ABCDEFG",
    "9": "ABCDFG",
}


def _digit_masks(X, Y, prim):
    char = str(prim.get("char", ""))
    if char not in _DIGIT_SEGMENTS:
        raise ValidationError(f"digit primitive supports chars 0-9, got {char!r}")
    cx, cy = prim["center"]
    height = float(prim["height"])
    width = 0.6 * height
    half_h = 0.5 * height
    stroke = float(prim.get("stroke", 0.16 * height))
    mask = np.zeros(X.shape, dtype=bool)
    for seg in _DIGIT_SEGMENTS[char]:
        (sx0, sy0), (sx1, sy1) = _SEGMENT_ENDPOINTS[seg]
        p0 = (cx + sx0 * width, cy + sy0 * half_h)
        p1 = (cx + sx1 * width, cy + sy1 * half_h)
        mask |= _segment_mask(X, Y, p0, p1, stroke)
    return mask


def _arrow_mask(X, Y, prim):
    p0 = np.asarray(prim["p0"], dtype=np.float64)
    p1 = np.asarray(prim["p1"], dtype=np.float64)
    width = float(prim["width"])
    head_len = float(prim.get("head_len", 3.0 * width))
    head_width = float(prim.get("head_width", 2.4 * width))
    d = p1 - p0
    length = float(np.hypot(*d))
    if length == 0.0:
        raise ValidationError("arrow primitive needs distinct endpoints")
    u = d / length
    n = np.array([-u[1], u[0]])
    head_len = min(head_len, length)
    base = p1 - head_len * u
    mask = _segment_mask(X, Y, p0, base, width)
    tri = (tuple(p1), tuple(base + head_width / 2.0 * n), tuple(base - head_width / 2.0 * n))
    return mask | _triangle_mask(X, Y, tri)


def _primitive_mask(X, Y, prim):
    kind = prim["kind"]
    if kind == "line":
        return _segment_mask(X, Y, prim["p0"], prim["p1"], float(prim["width"]))
    if kind == "polyline":
        pts = [tuple(p) for p in prim["points"]]
        if len(pts) < 2:
            raise ValidationError("polyline needs at least 2 points")
        width = float(prim["width"])
        mask = np.zeros(X.shape, dtype=bool)
        for a, b in zip(pts[:-1], pts[1:]):
            mask |= _segment_mask(X, Y, a, b, width)
        for p in pts[1:-1]:  # round joints
            mask |= _disc_mask(X, Y, p, width / 2.0)
        return mask
    if kind == "arc":
        return _arc_mask(
            X,
            Y,
            prim["center"],
            float(prim["radius"]),
            float(prim["width"]),
            float(prim.get("start_deg", -180.0)),
            float(prim.get("end_deg", 180.0)),
        )
    if kind == "disc":
        return _disc_mask(X, Y, prim["center"], float(prim["radius"]))
    if kind == "digit":
        return _digit_masks(X, Y, prim)
    if kind == "arrow":
        return _arrow_mask(X, Y, prim)
    raise ValidationError(f"unknown primitive kind {kind!r}")


def _primitive_points(prim):
    """Declared coordinate points of a primitive, for bounds validation."""
    kind = prim.get("kind")
    if kind == "line":
        return [tuple(prim["p0"]), tuple(prim["p1"])]
    if kind == "polyline":
        return [tuple(p) for p in prim["points"]]
    if kind in ("arc", "disc"):
        return [tuple(prim["center"])]
    if kind == "digit":
        return [tuple(prim["center"])]
    if kind == "arrow":
        return [tuple(prim["p0"]), tuple(prim["p1"])]
    return []


def _jitter_warp_matrix(size, theta_deg, scale, shift):
    c = (size - 1) / 2.0
    rad = np.deg2rad(theta_deg)
    cos, sin = np.cos(rad), np.sin(rad)
    # Forward map: p' = scale * R(theta) (p - c) + c + shift; invert for sampling.
    a = np.array([[cos, sin], [-sin, cos]]) / scale
    center = np.array([c, c])
    offset = center - a @ (center + np.asarray(shift))
    return np.array(
        [
            [a[0, 0], a[0, 1], offset[0]],
            [a[1, 0], a[1, 1], offset[1]],
        ]
    )


def _hue_rotate(pixels: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate hues about the gray axis with the standard RGB rotation matrix."""
    rad = np.deg2rad(degrees)
    c, s = np.cos(rad), np.sin(rad)
    third = (1.0 - c) / 3.0
    root = np.sqrt(1.0 / 3.0) * s
    m = np.array(
        [
            [c + third, third - root, third + root],
            [third + root, c + third, third - root],
            [third - root, third + root, c + third],
        ]
    )
    return pixels @ m.T


def _mask_bbox(alpha: np.ndarray) -> tuple[int, int, int, int] | None:
    present = alpha > 0.5
    if not present.any():
        return None
    rows = np.flatnonzero(present.any(axis=1))
    cols = np.flatnonzero(present.any(axis=0))
    x, y = int(cols[0]), int(rows[0])
    return (x, y, int(cols[-1] - cols[0] + 1), int(rows[-1] - rows[0] + 1))
