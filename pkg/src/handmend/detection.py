"""Existence gate fusing a box detector with labeled hand keypoints.

A hand counts as present only when every one of its keypoints lies on a
1-pixel of the detector box mask; keypoints 1-4 belong to the left hand,
5-8 to the right. Detectors are interfaces here; file-driven doubles
backed by a JSON sidecar stand in for the real networks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Protocol, Sequence

import numpy as np

from .geometry import BBox, Point2
from .meshproc import HandMesh, fill_box_mask, merge_meshes

LEFT_INDICES = (1, 2, 3, 4)
RIGHT_INDICES = (5, 6, 7, 8)
KEYPOINTS_PER_HAND = 4


class NoHandDetectedError(ValueError):
    """Raised when the gate concludes neither hand is present."""


@dataclass(frozen=True)
class LabeledKeypoints:
    """Up to eight indexed keypoints; absent indices mean the detector found nothing."""

    points: Mapping[int, Point2]

    def __post_init__(self):
        cleaned = {}
        for idx, p in self.points.items():
            idx = int(idx)
            if idx not in LEFT_INDICES and idx not in RIGHT_INDICES:
                raise ValueError(f"keypoint index must be in 1..8, got {idx}")
            if not isinstance(p, Point2):
                p = Point2(float(p[0]), float(p[1]))
            cleaned[idx] = p
        object.__setattr__(self, "points", cleaned)

    def get(self, index: int) -> Optional[Point2]:
        return self.points.get(index)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Optional[Sequence[float]]]) -> "LabeledKeypoints":
        """Parse the sidecar form {"1": [x, y], ...}; null entries are absent."""
        return cls({int(k): Point2(float(v[0]), float(v[1])) for k, v in raw.items() if v is not None})


@dataclass(frozen=True)
class HandExistence:
    left: bool
    right: bool

    @property
    def any(self) -> bool:
        return self.left or self.right


class BoxDetector(Protocol):
    def __call__(self, image: np.ndarray) -> np.ndarray: ...


class KeypointDetector(Protocol):
    def __call__(self, image: np.ndarray) -> LabeledKeypoints: ...


class MeshPredictor(Protocol):
    def __call__(self, image: np.ndarray, existence: HandExistence) -> HandMesh: ...


def _pixel_index(p: Point2, height: int, width: int) -> tuple[int, int]:
    # nearest pixel with half-up ties, clamped into the frame
    col = min(max(int(math.floor(p.x + 0.5)), 0), width - 1)
    row = min(max(int(math.floor(p.y + 0.5)), 0), height - 1)
    return row, col


def _check_box_mask(mask) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.ndim != 2 or mask.size == 0:
        raise ValueError(f"box mask must be a nonempty 2-D array, got shape {mask.shape}")
    if not np.isin(mask, (0, 1)).all():
        raise ValueError("box mask values must be exactly 0 or 1")
    return mask


def judge_existence(
    mask, keypoints: LabeledKeypoints, min_contained: int = KEYPOINTS_PER_HAND
) -> HandExistence:
    """Decide per-hand presence from box-mask containment of the keypoints.

    A hand exists when at least ``min_contained`` of its four keypoints are
    present and land on mask=1 pixels; the default demands all four, and a
    missing keypoint never counts as contained. Pure function.
    """
    mask = _check_box_mask(mask)
    if not 1 <= min_contained <= KEYPOINTS_PER_HAND:
        raise ValueError(f"min_contained must be in 1..4, got {min_contained}")
    height, width = mask.shape

    def hand_present(indices) -> bool:
        contained = 0
        for idx in indices:
            p = keypoints.get(idx)
            if p is None:
                continue
            row, col = _pixel_index(p, height, width)
            if mask[row, col] == 1:
                contained += 1
        return contained >= min_contained

    return HandExistence(hand_present(LEFT_INDICES), hand_present(RIGHT_INDICES))


def boxes_to_mask(boxes, height: int, width: int) -> np.ndarray:
    """Union of [x0, y0, x1, y1] boxes as a {0,1} mask, clipped to the frame."""
    out = np.zeros((height, width), dtype=np.uint8)
    for b in np.asarray(boxes, dtype=np.float64).reshape(-1, 4):
        out |= fill_box_mask(BBox(b[0], b[1], b[2], b[3]), height, width)
    return out


def double_check_predict(
    box_detector: BoxDetector,
    keypoint_detector: KeypointDetector,
    mesh_predictor: MeshPredictor,
    image: np.ndarray,
) -> HandMesh:
    """Run both detectors, gate on fused existence, and forward to the predictor.

    Raises NoHandDetectedError without invoking the predictor when neither
    hand passes the gate.
    """
    existence = judge_existence(box_detector(image), keypoint_detector(image))
    if not existence.any:
        raise NoHandDetectedError("double check found no hand in the image")
    return mesh_predictor(image, existence)


@dataclass(frozen=True)
class SidecarDetections:
    """Parsed detector sidecar: hand boxes plus labeled keypoints."""

    boxes: np.ndarray
    keypoints: LabeledKeypoints

    def __post_init__(self):
        boxes = np.asarray(self.boxes, dtype=np.float64).reshape(-1, 4)
        if not np.all(np.isfinite(boxes)):
            raise ValueError("detection boxes must be finite")
        boxes.setflags(write=False)
        object.__setattr__(self, "boxes", boxes)

    @classmethod
    def from_json(cls, path) -> "SidecarDetections":
        raw = json.loads(Path(path).read_text())
        return cls(
            np.asarray(raw.get("boxes", []), dtype=np.float64).reshape(-1, 4),
            LabeledKeypoints.from_mapping(raw.get("keypoints", {})),
        )

    def box_detector(self) -> BoxDetector:
        def detect(image: np.ndarray) -> np.ndarray:
            h, w = image.shape[:2]
            return boxes_to_mask(self.boxes, h, w)

        return detect

    def keypoint_detector(self) -> KeypointDetector:
        def detect(image: np.ndarray) -> LabeledKeypoints:
            return self.keypoints

        return detect


@dataclass(frozen=True)
class StaticMeshPredictor:
    """Predictor double returning fixed meshes, gated by the existence flags.

    Mirrors the downstream contract: a flagged-off hand contributes no
    geometry even if a mesh for it exists.
    """

    left: Optional[HandMesh] = None
    right: Optional[HandMesh] = None

    def __call__(self, image: np.ndarray, existence: HandExistence) -> HandMesh:
        kept = [
            m
            for m, flag in ((self.left, existence.left), (self.right, existence.right))
            if flag and m is not None
        ]
        if not kept:
            raise NoHandDetectedError("no mesh available for the flagged hands")
        out = kept[0]
        for extra in kept[1:]:
            out = merge_meshes(out, extra)
        return out
