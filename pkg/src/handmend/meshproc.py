"""Mesh projection, triangle rasterization, and box-mask derivation.

A hand mesh is projected with a fixed pinhole camera (identity extrinsics)
into screen space, rasterized into a grayscale guidance map with z-buffered
depth shading, and the guidance support is padded into the rectangular
inpainting mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import AffineTransform, BBox, Point2, apply_to_array, union_bbox

# Depth shading endpoints: nearest mesh depth renders at 1.0, farthest at
# FAR_SHADE; the background stays 0 so the support is recoverable.
FAR_SHADE = 0.25

# Default mask padding, as a fraction of the guidance bbox diagonal.
DEFAULT_PAD_FRACTION = 0.10


class BehindCameraError(ValueError):
    """Raised when a mesh vertex sits at or behind the camera plane."""


class EmptyGuidanceError(ValueError):
    """Raised when a guidance map has no nonzero pixels to locate a hand."""


@dataclass(frozen=True)
class HandMesh:
    """Triangle mesh in camera space: (N, 3) vertices and (M, 3) face indices."""

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.intp).reshape(-1, 3)
        if not np.all(np.isfinite(v)):
            raise ValueError("mesh vertices must be finite")
        if f.size:
            if f.min() < 0 or f.max() >= len(v):
                raise ValueError("face index out of range")
            distinct = (f[:, 0] != f[:, 1]) & (f[:, 1] != f[:, 2]) & (f[:, 0] != f[:, 2])
            if not distinct.all():
                raise ValueError("degenerate face: repeated vertex index")
        v.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)


@dataclass(frozen=True)
class Camera:
    """Pinhole camera with identity extrinsics."""

    focal: float
    principal: Point2
    height: int
    width: int

    def __post_init__(self):
        if not (math.isfinite(self.focal) and self.focal > 0):
            raise ValueError(f"focal length must be positive, got {self.focal}")
        if self.height < 1 or self.width < 1:
            raise ValueError(f"image size must be at least 1x1, got {self.height}x{self.width}")


def merge_meshes(a: HandMesh, b: HandMesh) -> HandMesh:
    """Concatenate two meshes into one, reindexing the second one's faces."""
    vertices = np.vstack([a.vertices, b.vertices])
    faces = np.vstack([a.faces, b.faces + len(a.vertices)])
    return HandMesh(vertices, faces)


def project(mesh: HandMesh, cam: Camera) -> np.ndarray:
    """Project mesh triangles to screen space, keeping per-vertex depth.

    Returns an (M, 3, 3) array: for each face, three rows of (u, v, z) with
    u = focal*x/z + cx and v = focal*y/z + cy.
    """
    v = mesh.vertices
    if len(v) and v[:, 2].min() <= 0:
        raise BehindCameraError("mesh vertex at or behind the camera (z <= 0)")
    z = v[:, 2]
    u = cam.focal * v[:, 0] / z + cam.principal.x
    w = cam.focal * v[:, 1] / z + cam.principal.y
    projected = np.stack([u, w, z], axis=1)
    return projected[mesh.faces] if mesh.faces.size else np.empty((0, 3, 3))


def _edge(ax, ay, bx, by, px, py):
    """Signed area of (a, b, p); positive when p is on the interior side."""
    return (bx - ax) * (py - ay) - (by - ay) * (px - ax)


def rasterize_triangles(triangles: np.ndarray, height: int, width: int) -> np.ndarray:
    """Z-buffer fill of (u, v, z) screen-space triangles into a grayscale map.

    Pixel centers (col + 0.5, row + 0.5) are sampled; centers exactly on a
    shared edge belong to the triangle whose edge is a top edge (horizontal,
    pointing +x) or a left edge (pointing -y), so each boundary pixel has a
    single owner. Pixel depth is interpolated with screen-space barycentric
    weights and the nearest surface wins. Shades map the triangle set's depth
    range [z_min, z_max] linearly onto [1.0, FAR_SHADE], nearest first; a
    constant-depth mesh renders at 1.0.
    """
    triangles = np.asarray(triangles, dtype=np.float64)
    out = np.zeros((height, width), dtype=np.float64)
    if triangles.size == 0:
        return out
    zbuf = np.full((height, width), np.inf)

    z_all = triangles[:, :, 2]
    z_min, z_max = z_all.min(), z_all.max()

    for tri in triangles:
        (x0, y0, z0), (x1, y1, z1), (x2, y2, z2) = tri
        area = _edge(x0, y0, x1, y1, x2, y2)
        if area == 0.0:
            continue
        if area < 0.0:
            (x1, y1, z1), (x2, y2, z2) = (x2, y2, z2), (x1, y1, z1)
            area = -area

        c_lo = max(0, int(math.floor(min(x0, x1, x2) - 0.5)))
        c_hi = min(width - 1, int(math.ceil(max(x0, x1, x2))))
        r_lo = max(0, int(math.floor(min(y0, y1, y2) - 0.5)))
        r_hi = min(height - 1, int(math.ceil(max(y0, y1, y2))))
        if c_lo > c_hi or r_lo > r_hi:
            continue

        px = np.arange(c_lo, c_hi + 1) + 0.5
        py = np.arange(r_lo, r_hi + 1) + 0.5
        px, py = np.meshgrid(px, py)

        w0 = _edge(x1, y1, x2, y2, px, py)
        w1 = _edge(x2, y2, x0, y0, px, py)
        w2 = _edge(x0, y0, x1, y1, px, py)

        def owns(w, ax, ay, bx, by):
            dx, dy = bx - ax, by - ay
            top_left = (dy == 0.0 and dx > 0.0) or dy < 0.0
            return (w > 0.0) | ((w == 0.0) & top_left)

        covered = (
            owns(w0, x1, y1, x2, y2) & owns(w1, x2, y2, x0, y0) & owns(w2, x0, y0, x1, y1)
        )
        if not covered.any():
            continue

        z = (w0 * z0 + w1 * z1 + w2 * z2) / area
        if z_max > z_min:
            shade = np.clip(1.0 - (1.0 - FAR_SHADE) * (z - z_min) / (z_max - z_min), FAR_SHADE, 1.0)
        else:
            shade = np.full_like(z, 1.0)

        window_z = zbuf[r_lo : r_hi + 1, c_lo : c_hi + 1]
        window_out = out[r_lo : r_hi + 1, c_lo : c_hi + 1]
        nearer = covered & (z < window_z)
        window_z[nearer] = z[nearer]
        window_out[nearer] = np.broadcast_to(shade, z.shape)[nearer]

    return out


def rasterize(mesh: HandMesh, cam: Camera) -> np.ndarray:
    """Render the mesh into an H x W guidance map in [0, 1]; background is 0."""
    return rasterize_triangles(project(mesh, cam), cam.height, cam.width)


def transform_mesh_2d(mesh: HandMesh, cam: Camera, t: AffineTransform) -> np.ndarray:
    """Project, move the projected vertices by ``t``, then rasterize.

    Depth values ride along unchanged, so shading and occlusion order match
    the untransformed rendering.
    """
    tris = project(mesh, cam)
    if tris.size:
        flat = tris.reshape(-1, 3)
        moved = apply_to_array(t, flat[:, :2])
        tris = np.concatenate([moved, flat[:, 2:]], axis=1).reshape(tris.shape)
    return rasterize_triangles(tris, cam.height, cam.width)


def support_bbox(guidance: np.ndarray) -> BBox:
    """Bounding box of the nonzero pixels, in (x=col, y=row) pixel indices."""
    rows, cols = np.nonzero(guidance)
    if rows.size == 0:
        raise EmptyGuidanceError("guidance map has no nonzero pixels")
    return BBox(float(cols.min()), float(rows.min()), float(cols.max()), float(rows.max()))


def default_pad(box: BBox) -> float:
    return DEFAULT_PAD_FRACTION * box.diagonal


def fill_box_mask(box: BBox, height: int, width: int) -> np.ndarray:
    """Fill a {0,1} mask over the box, clipped to the image; uint8 H x W."""
    mask = np.zeros((height, width), dtype=np.uint8)
    r0 = max(0, int(round(box.y_min)))
    r1 = min(height - 1, int(round(box.y_max)))
    c0 = max(0, int(round(box.x_min)))
    c1 = min(width - 1, int(round(box.x_max)))
    if r0 <= r1 and c0 <= c1:
        mask[r0 : r1 + 1, c0 : c1 + 1] = 1
    return mask


def mask_from_map(guidance: np.ndarray, pad: float | None = None) -> np.ndarray:
    """Box mask covering the guidance support, expanded by ``pad`` pixels.

    ``pad`` rounds to whole pixels; None picks 10% of the support diagonal.
    Raises EmptyGuidanceError when the map is all zero.
    """
    box = support_bbox(guidance)
    if pad is None:
        pad = default_pad(box)
    if pad < 0:
        raise ValueError(f"pad must be non-negative, got {pad}")
    h, w = guidance.shape
    return fill_box_mask(box.padded(round(pad)), h, w)


def component_boxes(guidance: np.ndarray, pad: float = 0.0) -> list[BBox]:
    """Padded bounding box of each 8-connected nonzero component.

    The union (in box algebra) of these equals the single box that
    mask_from_map uses, so callers needing one mask can fold them with
    union_bbox.
    """
    labels, count = ndimage.label(guidance != 0, structure=np.ones((3, 3), dtype=int))
    if count == 0:
        raise EmptyGuidanceError("guidance map has no nonzero pixels")
    boxes = []
    for sl in ndimage.find_objects(labels):
        box = BBox(float(sl[1].start), float(sl[0].start), float(sl[1].stop - 1), float(sl[0].stop - 1))
        boxes.append(box.padded(round(pad)) if pad else box)
    return boxes


def union_component_box(guidance: np.ndarray, pad: float = 0.0) -> BBox:
    boxes = component_boxes(guidance, pad)
    out = boxes[0]
    for b in boxes[1:]:
        out = union_bbox(out, b)
    return out
