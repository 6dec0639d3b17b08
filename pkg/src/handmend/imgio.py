"""File formats: PNG/PGM images, float32 sidecars, mesh/pose/manifest JSON.

Images travel as float arrays in [0, 1]; 8-bit encodings quantize with
round(255 * v). The .npy sidecar keeps lossless float32 values so tests
can compare latents without quantization. All writers are deterministic:
identical arrays produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .geometry import HandPose2D, Point2
from .meshproc import HandMesh


def load_image(path) -> np.ndarray:
    """Read a PNG or PGM into float64 [0, 1]; grayscale (H, W) or color (H, W, 3)."""
    with Image.open(path) as im:
        if im.mode in ("RGBA", "P", "LA"):
            im = im.convert("RGB")
        if im.mode in ("I;16", "I"):
            return np.asarray(im, dtype=np.float64) / 65535.0
        if im.mode in ("L", "RGB"):
            return np.asarray(im, dtype=np.float64) / 255.0
        raise ValueError(f"unsupported image mode {im.mode!r} in {path}")


def _quantize(img: np.ndarray) -> np.ndarray:
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_png(path, img: np.ndarray) -> None:
    """Write [0,1] floats as 8-bit PNG, grayscale or RGB by array shape."""
    data = _quantize(np.asarray(img, dtype=np.float64))
    if data.ndim == 2:
        Image.fromarray(data, mode="L").save(path, format="PNG")
    elif data.ndim == 3 and data.shape[2] == 3:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")
    else:
        raise ValueError(f"expected (H, W) or (H, W, 3) image, got shape {data.shape}")


def save_pgm(path, map01: np.ndarray) -> None:
    """Write a [0,1] grayscale map as binary PGM with intensity round(255 * v)."""
    data = np.asarray(map01, dtype=np.float64)
    if data.ndim != 2:
        raise ValueError(f"PGM wants a 2-D map, got shape {data.shape}")
    Image.fromarray(_quantize(data), mode="L").save(path, format="PPM")


def save_mask_pgm(path, mask: np.ndarray) -> None:
    """Write a {0,1} mask as PGM using {0, 255}."""
    mask = np.asarray(mask)
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("mask values must be exactly 0 or 1")
    Image.fromarray((mask * np.uint8(255)).astype(np.uint8), mode="L").save(path, format="PPM")


def save_float32(path, arr: np.ndarray) -> None:
    np.save(path, np.asarray(arr, dtype=np.float32))


def load_float32(path) -> np.ndarray:
    return np.load(path)


def load_mesh(path) -> HandMesh:
    raw = json.loads(Path(path).read_text())
    return HandMesh(
        np.asarray(raw["vertices"], dtype=np.float64),
        np.asarray(raw["faces"], dtype=np.intp).reshape(-1, 3),
    )


def save_mesh(path, mesh: HandMesh) -> None:
    payload = {"vertices": mesh.vertices.tolist(), "faces": mesh.faces.tolist()}
    Path(path).write_text(json.dumps(payload))


def load_pose(path) -> HandPose2D:
    raw = json.loads(Path(path).read_text())
    return HandPose2D(
        Point2(float(raw["wrist"][0]), float(raw["wrist"][1])),
        Point2(float(raw["anchor"][0]), float(raw["anchor"][1])),
    )


def save_pose(path, pose: HandPose2D) -> None:
    payload = {"wrist": [pose.wrist.x, pose.wrist.y], "anchor": [pose.anchor.x, pose.anchor.y]}
    Path(path).write_text(json.dumps(payload))


_MANIFEST_KEYS = {"image", "mesh", "detectors", "reference_mesh", "reference_pose", "pose"}


@dataclass(frozen=True)
class ManifestRow:
    """One batch job: an input image plus whichever inputs its flow needs.

    Refinement rows carry a mesh (optionally gated by a detector sidecar);
    pose-transformation rows carry reference_mesh, reference_pose, and the
    input-image pose.
    """

    image: str
    mesh: Optional[str] = None
    detectors: Optional[str] = None
    reference_mesh: Optional[str] = None
    reference_pose: Optional[str] = None
    pose: Optional[str] = None


def load_manifest(path) -> list[ManifestRow]:
    """Parse a manifest JSON list; unknown keys and duplicate images are errors."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, list):
        raise ValueError("manifest must be a JSON list of job objects")
    rows = []
    seen = set()
    for i, item in enumerate(raw):
        if not isinstance(item, dict) or "image" not in item:
            raise ValueError(f"manifest entry {i} must be an object with an 'image' key")
        unknown = set(item) - _MANIFEST_KEYS
        if unknown:
            raise ValueError(f"manifest entry {i} has unknown keys {sorted(unknown)}")
        if item["image"] in seen:
            raise ValueError(f"duplicate manifest image {item['image']!r}")
        seen.add(item["image"])
        rows.append(ManifestRow(**{k: (str(v) if v is not None else None) for k, v in item.items()}))
    return rows
