"""Homogeneous 2D affine transforms and bounding-box algebra.

Coordinates follow the image convention: origin at the top-left corner,
x grows rightward, y grows downward. A positive rotation angle turns the
+x axis toward the +y axis, which reads as clockwise on screen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Keypoints closer than this (in pixels) make a pose degenerate.
DEGENERATE_EPS = 1e-6


class DegeneratePoseError(ValueError):
    """Raised when the two keypoints of a hand pose (nearly) coincide."""


@dataclass(frozen=True)
class Point2:
    """A 2D point in pixel coordinates."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=np.float64)


@dataclass(frozen=True)
class AffineTransform:
    """A 2D affine map stored as a 3x3 homogeneous matrix.

    The last row is required to be exactly (0, 0, 1) and the upper-left
    2x2 block must be invertible; both are checked on construction and
    therefore hold after every composition.
    """

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError(f"affine matrix must be 3x3, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("affine matrix entries must be finite")
        if m[2, 0] != 0.0 or m[2, 1] != 0.0 or m[2, 2] != 1.0:
            raise ValueError(f"last row must be exactly (0, 0, 1), got {m[2]}")
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if det == 0.0:
            raise ValueError("upper-left 2x2 block is singular")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    def __matmul__(self, other: "AffineTransform") -> "AffineTransform":
        return AffineTransform(self.m @ other.m)

    def __call__(self, p: Point2) -> Point2:
        return apply(self, p)


@dataclass(frozen=True)
class HandPose2D:
    """A two-keypoint hand pose: the wrist and a second anchor keypoint.

    The anchor is nominally the pinky-side keypoint but any keypoint
    distinct from the wrist works; the alignment math only needs the
    wrist-to-anchor vector.
    """

    wrist: Point2
    anchor: Point2
    eps: float = field(default=DEGENERATE_EPS, compare=False)

    def __post_init__(self):
        if math.dist(tuple(self.wrist), tuple(self.anchor)) <= self.eps:
            raise DegeneratePoseError(
                f"wrist {tuple(self.wrist)} and anchor {tuple(self.anchor)} coincide "
                f"(within {self.eps} px)"
            )


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixel coordinates, min corner through max corner."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"box coordinates must be finite, got {vals}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"box min corner must not exceed max corner, got {vals}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    def area(self) -> float:
        return self.width * self.height

    def contains(self, p: Point2) -> bool:
        return self.x_min <= p.x <= self.x_max and self.y_min <= p.y <= self.y_max

    def padded(self, pad: float) -> "BBox":
        if pad < 0:
            raise ValueError(f"pad must be non-negative, got {pad}")
        return BBox(self.x_min - pad, self.y_min - pad, self.x_max + pad, self.y_max + pad)


def identity() -> AffineTransform:
    return AffineTransform(np.eye(3))


def scale_matrix(s: float) -> AffineTransform:
    """Uniform scaling about the origin: (x, y) -> (s*x, s*y)."""
    s = float(s)
    if not math.isfinite(s) or s <= 0:
        raise ValueError(f"scale must be a positive finite number, got {s}")
    return AffineTransform(np.array([[s, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, 1.0]]))


def translation_matrix(tx: float, ty: float) -> AffineTransform:
    """Translation: (x, y) -> (x + tx, y + ty)."""
    if not (math.isfinite(tx) and math.isfinite(ty)):
        raise ValueError(f"translation must be finite, got ({tx}, {ty})")
    return AffineTransform(np.array([[1.0, 0.0, tx], [0.0, 1.0, ty], [0.0, 0.0, 1.0]]))


def rotation_about(center: Point2, theta: float) -> AffineTransform:
    """Rotation by ``theta`` radians about ``center``.

    Built as T(center) @ R(theta) @ T(-center), so the center is a fixed
    point of the returned map. Positive theta turns +x toward +y.
    """
    if not math.isfinite(theta):
        raise ValueError(f"rotation angle must be finite, got {theta}")
    c, s = math.cos(theta), math.sin(theta)
    rot = AffineTransform(np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]))
    return translation_matrix(center.x, center.y) @ rot @ translation_matrix(-center.x, -center.y)


def compose(*transforms: AffineTransform) -> AffineTransform:
    """Compose left to right: compose(A, B) applies B first, then A."""
    if not transforms:
        return identity()
    out = transforms[0]
    for t in transforms[1:]:
        out = out @ t
    return out


def apply(t: AffineTransform, p: Point2) -> Point2:
    """Apply the transform to a point via the homogeneous product."""
    v = t.m @ np.array([p.x, p.y, 1.0])
    return Point2(float(v[0]), float(v[1]))


def apply_to_array(t: AffineTransform, pts: np.ndarray) -> np.ndarray:
    """Apply the transform to an (N, 2) array of points."""
    pts = np.asarray(pts, dtype=np.float64)
    return pts @ t.m[:2, :2].T + t.m[:2, 2]


def _wrap_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    theta = math.fmod(theta, math.tau)
    if theta <= -math.pi:
        theta += math.tau
    elif theta > math.pi:
        theta -= math.tau
    return theta


def compute_alignment(src: HandPose2D, dst: HandPose2D) -> AffineTransform:
    """Similarity transform carrying ``src`` onto ``dst``.

    The chain scales by the ratio of keypoint distances, translates so the
    scaled source wrist lands exactly on the destination wrist, then rotates
    about the destination wrist by the angle between the wrist-to-anchor
    vectors. Two keypoints determine the map exactly: the returned transform
    sends src.wrist to dst.wrist and src.anchor to dst.anchor.
    """
    sv = (src.anchor.x - src.wrist.x, src.anchor.y - src.wrist.y)
    dv = (dst.anchor.x - dst.wrist.x, dst.anchor.y - dst.wrist.y)
    s = math.hypot(*dv) / math.hypot(*sv)
    theta = _wrap_angle(math.atan2(dv[1], dv[0]) - math.atan2(sv[1], sv[0]))
    shift = translation_matrix(dst.wrist.x - s * src.wrist.x, dst.wrist.y - s * src.wrist.y)
    return rotation_about(dst.wrist, theta) @ shift @ scale_matrix(s)


def union_bbox(a: BBox, b: BBox) -> BBox:
    """Smallest box containing both boxes."""
    return BBox(
        min(a.x_min, b.x_min),
        min(a.y_min, b.y_min),
        max(a.x_max, b.x_max),
        max(a.y_max, b.y_max),
    )


def bbox_of_points(points, pad: float = 0.0) -> BBox:
    """Min/max box over the points, expanded by ``pad`` on every side.

    The result is not clipped; callers clip to image bounds themselves.
    """
    pts = list(points)
    if not pts:
        raise ValueError("cannot take the bounding box of an empty point list")
    if pad < 0:
        raise ValueError(f"pad must be non-negative, got {pad}")
    xs = [p.x for p in pts]
    ys = [p.y for p in pts]
    return BBox(min(xs) - pad, min(ys) - pad, max(xs) + pad, max(ys) + pad)
