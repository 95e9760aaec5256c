"""Foundational image and geometry types shared by all pipeline stages.

Conventions used throughout the package:

* Images and masks are numpy arrays indexed ``[row, col]``, i.e. ``[y, x]``.
* Point coordinates are ``(x, y)`` with x growing rightward, y growing
  downward, origin at the centre of the top-left pixel.
* Binary masks are boolean arrays; ``True`` marks foreground.
* Polygon traversal is clockwise as displayed on screen (y down); with the
  surveyor formula used by :func:`signed_area` a clockwise ring has
  signed area <= 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np


class Point2(NamedTuple):
    """A 2-D point in pixel coordinates."""

    x: float
    y: float


@dataclass(frozen=True)
class AffineTransform:
    """2x3 affine map from infrared to visible coordinates.

    Maps ``(x, y)`` to ``(a*x + b*y + tx, c*x + d*y + ty)``.
    """

    a: float
    b: float
    tx: float
    c: float
    d: float
    ty: float

    def __post_init__(self) -> None:
        for name in ("a", "b", "tx", "c", "d", "ty"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"non-finite affine entry {name!r}")

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(1.0, 0.0, 0.0, 0.0, 1.0, 0.0)

    @classmethod
    def translation(cls, dx: float, dy: float) -> "AffineTransform":
        return cls(1.0, 0.0, float(dx), 0.0, 1.0, float(dy))

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "AffineTransform":
        m = np.asarray(m, dtype=float)
        if m.shape != (2, 3):
            raise ValueError(f"expected a 2x3 matrix, got shape {m.shape}")
        return cls(m[0, 0], m[0, 1], m[0, 2], m[1, 0], m[1, 1], m[1, 2])

    @classmethod
    def rotation_scale_about(
        cls, cx: float, cy: float, degrees: float, scale: float = 1.0
    ) -> "AffineTransform":
        """Rotation by ``degrees`` (clockwise on screen) and uniform scaling,
        both about the fixed point ``(cx, cy)``."""
        rad = math.radians(degrees)
        ca = scale * math.cos(rad)
        sa = scale * math.sin(rad)
        # x' = ca*(x-cx) - sa*(y-cy) + cx ; y' = sa*(x-cx) + ca*(y-cy) + cy
        return cls(ca, -sa, cx - ca * cx + sa * cy, sa, ca, cy - sa * cx - ca * cy)

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b, self.tx], [self.c, self.d, self.ty]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def is_invertible(self) -> bool:
        return abs(self.det) > 1e-12

    def inverse(self) -> "AffineTransform":
        det = self.det
        if abs(det) <= 1e-12:
            raise ValueError("transform is not invertible (singular linear part)")
        ia = self.d / det
        ib = -self.b / det
        ic = -self.c / det
        id_ = self.a / det
        return AffineTransform(
            ia, ib, -(ia * self.tx + ib * self.ty), ic, id_, -(ic * self.tx + id_ * self.ty)
        )

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """Transform equivalent to applying ``inner`` first, then ``self``."""
        return AffineTransform(
            self.a * inner.a + self.b * inner.c,
            self.a * inner.b + self.b * inner.d,
            self.a * inner.tx + self.b * inner.ty + self.tx,
            self.c * inner.a + self.d * inner.c,
            self.c * inner.b + self.d * inner.d,
            self.c * inner.tx + self.d * inner.ty + self.ty,
        )

    def apply(self, p: Point2 | tuple[float, float]) -> Point2:
        x, y = float(p[0]), float(p[1])
        return Point2(self.a * x + self.b * y + self.tx, self.c * x + self.d * y + self.ty)

    def apply_points(self, pts: np.ndarray) -> np.ndarray:
        """Apply to an (n, 2) array of (x, y) points; returns an (n, 2) array."""
        pts = np.asarray(pts, dtype=float)
        out = np.empty_like(pts)
        out[..., 0] = self.a * pts[..., 0] + self.b * pts[..., 1] + self.tx
        out[..., 1] = self.c * pts[..., 0] + self.d * pts[..., 1] + self.ty
        return out


def apply_transform(p: Point2 | tuple[float, float], t: AffineTransform) -> Point2:
    """Map one point through ``t``."""
    return t.apply(p)


@dataclass
class GrayFrame:
    """Single-channel 8-bit frame plus its position in the sequence."""

    pixels: np.ndarray  # (height, width) uint8
    frame_index: int = 0

    def __post_init__(self) -> None:
        self.pixels = np.asarray(self.pixels)
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("frame pixels must be a non-empty 2-D array")
        if self.pixels.dtype != np.uint8:
            self.pixels = np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


def _check_same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ValueError(f"mask dimensions differ: {a.shape} vs {b.shape}")


def mask_intersection_count(a: np.ndarray, b: np.ndarray) -> int:
    """Number of pixels set in both masks."""
    _check_same_shape(a, b)
    return int(np.count_nonzero(np.logical_and(a, b)))


def mask_union_count(a: np.ndarray, b: np.ndarray) -> int:
    """Number of pixels set in either mask."""
    _check_same_shape(a, b)
    return int(np.count_nonzero(np.logical_or(a, b)))


def warp_mask(src: np.ndarray, t: AffineTransform, out_w: int, out_h: int) -> np.ndarray:
    """Warp a binary mask through ``t`` into an ``out_h`` x ``out_w`` canvas.

    Each output pixel is looked up at its inverse-mapped source location,
    rounded to the nearest pixel (no holes from forward splatting); locations
    outside the source stay background.
    """
    inv = t.inverse()
    src = np.asarray(src, dtype=bool)
    h, w = src.shape
    ys, xs = np.indices((out_h, out_w), dtype=float)
    sx = np.rint(inv.a * xs + inv.b * ys + inv.tx).astype(np.int64)
    sy = np.rint(inv.c * xs + inv.d * ys + inv.ty).astype(np.int64)
    inside = (sx >= 0) & (sx < w) & (sy >= 0) & (sy < h)
    out = np.zeros((out_h, out_w), dtype=bool)
    out[inside] = src[sy[inside], sx[inside]]
    return out


def signed_area(points: np.ndarray) -> float:
    """Signed area of a closed ring under the y-down convention.

    Clockwise as displayed (y down) gives a non-positive value.
    """
    pts = np.asarray(points, dtype=float)
    x = pts[:, 0]
    y = pts[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    return float(np.sum((xn - x) * (yn + y)) / 2.0)
