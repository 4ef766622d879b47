"""Low-level resampling helpers shared by the renderer and the augmenters."""

from __future__ import annotations

import numpy as np


def bilinear_sample(image: np.ndarray, yy: np.ndarray, xx: np.ndarray) -> np.ndarray:
    """Sample ``image`` at fractional row/column coordinates.

    Out-of-range coordinates are clamped to the frame, which gives border
    replication. ``image`` may be HxW or HxWxC; the result is float64 with
    the shape of ``yy`` (plus the channel axis, if any). Integer coordinates
    reproduce the underlying pixels exactly.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    yy = np.clip(np.asarray(yy, dtype=np.float64), 0.0, h - 1.0)
    xx = np.clip(np.asarray(xx, dtype=np.float64), 0.0, w - 1.0)
    y0 = np.floor(yy).astype(np.int64)
    x0 = np.floor(xx).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = yy - y0
    fx = xx - x0
    if img.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = (1.0 - fx) * img[y0, x0] + fx * img[y0, x1]
    bot = (1.0 - fx) * img[y1, x0] + fx * img[y1, x1]
    return (1.0 - fy) * top + fy * bot


def inverse_affine_warp(image: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Warp an image with an output-to-source affine map.

    ``matrix`` is 2x3 acting on (x, y, 1) column vectors with x = column and
    y = row: src_x = m00*x + m01*y + m02, src_y = m10*x + m11*y + m12.
    Border handling is edge replication via clamped bilinear sampling.
    """
    img = np.asarray(image, dtype=np.float64)
    h, w = img.shape[:2]
    m = np.asarray(matrix, dtype=np.float64)
    X, Y = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    src_x = m[0, 0] * X + m[0, 1] * Y + m[0, 2]
    src_y = m[1, 0] * X + m[1, 1] * Y + m[1, 2]
    return bilinear_sample(img, src_y, src_x)


def rotation_about_center_matrix(h: int, w: int, theta_deg: float) -> np.ndarray:
    """Output-to-source matrix rotating the frame by ``theta_deg`` about its center."""
    cy = (h - 1) / 2.0
    cx = (w - 1) / 2.0
    rad = np.deg2rad(theta_deg)
    cos, sin = np.cos(rad), np.sin(rad)
    # src = R(-theta) (dst - c) + c
    return np.array(
        [
            [cos, sin, cx - cos * cx - sin * cy],
            [-sin, cos, cy + sin * cx - cos * cy],
        ],
        dtype=np.float64,
    )
