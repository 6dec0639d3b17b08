"""End-to-end flows: refinement, pose transformation, and batch jobs.

refine() walks mesh -> guidance map -> padded box mask -> masked
inpainting. transform_pose() first aligns a reference hand onto the
input pose with the similarity chain, masks the union of the original
and aligned guidance boxes, then runs the same inpainting. The batch
runner maps a JSON manifest over these flows and assembles a JobReport;
each image derives its own rng seed from the global seed and its path,
so job order and parallelism cannot change any output.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Union

import numpy as np

from .config import RefineConfig
from .detection import NoHandDetectedError, SidecarDetections, double_check_predict
from .diffusion import Denoiser, inpaint
from .geometry import HandPose2D, compute_alignment, union_bbox
from .imgio import (
    ManifestRow,
    load_image,
    load_manifest,
    load_mesh,
    load_pose,
    save_float32,
    save_mask_pgm,
    save_pgm,
    save_png,
)
from .meshproc import (
    HandMesh,
    default_pad,
    fill_box_mask,
    mask_from_map,
    rasterize,
    support_bbox,
    transform_mesh_2d,
)

MeshSource = Union[HandMesh, Callable[[np.ndarray], HandMesh]]

STATUS_REFINED = "refined"
STATUS_SKIPPED = "skipped-no-hand"
STATUS_ERROR = "error"


class OffFrameError(ValueError):
    """Raised when the aligned guidance lands entirely outside the frame."""


@dataclass(frozen=True)
class RefineResult:
    """Output latent plus the intermediates the flow computed on the way."""

    output: np.ndarray
    guidance: np.ndarray
    mask: np.ndarray
    background_drift: float


@dataclass(frozen=True)
class JobEntry:
    image: str
    status: str
    artifacts: dict[str, str] = field(default_factory=dict)
    seed: Optional[int] = None
    duration_s: float = 0.0
    detail: str = ""


@dataclass(frozen=True)
class JobReport:
    entries: tuple[JobEntry, ...]

    def __post_init__(self):
        images = [e.image for e in self.entries]
        if len(set(images)) != len(images):
            raise ValueError("report must list every input image exactly once")
        object.__setattr__(
            self, "entries", tuple(sorted(self.entries, key=lambda e: e.image))
        )

    def count(self, status: str) -> int:
        return sum(1 for e in self.entries if e.status == status)

    @property
    def summary(self) -> dict[str, int]:
        return {
            s: self.count(s)
            for s in (STATUS_REFINED, STATUS_SKIPPED, STATUS_ERROR)
        }

    def to_json(self, include_timing: bool = True) -> str:
        entries = []
        for e in self.entries:
            item = {
                "image": e.image,
                "status": e.status,
                "artifacts": dict(sorted(e.artifacts.items())),
                "seed": e.seed,
                "detail": e.detail,
            }
            if include_timing:
                item["duration_s"] = round(e.duration_s, 6)
            entries.append(item)
        return json.dumps({"summary": self.summary, "entries": entries}, indent=2)


def _unmasked_drift(output: np.ndarray, image: np.ndarray, mask: np.ndarray) -> float:
    outside = np.asarray(mask) == 0
    if not outside.any():
        return 0.0
    if output.ndim == 3:
        outside = outside[:, :, np.newaxis] & np.ones(output.shape, dtype=bool)
    return float(np.max(np.abs(output[outside] - image[outside])))


def _resolve_mesh(mesh_source: MeshSource, image: np.ndarray) -> HandMesh:
    if isinstance(mesh_source, HandMesh):
        return mesh_source
    return mesh_source(image)


def per_image_seed(global_seed: int, image_path: str) -> int:
    """Stable per-job seed: SHA-256 over the global seed and the image path."""
    digest = hashlib.sha256(f"{global_seed}:{image_path}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def refine(
    image: np.ndarray,
    mesh_source: MeshSource,
    config: RefineConfig,
    rng: np.random.Generator,
    denoiser: Optional[Denoiser] = None,
    cond: Optional[np.ndarray] = None,
) -> RefineResult:
    """Refine the hand region of one image from its mesh.

    The mesh is rasterized to the guidance map, the padded support box
    becomes the inpainting mask, and the masked sampler regenerates that
    region conditioned on the guidance.
    """
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape[:2]
    camera = config.camera.build(h, w)
    mesh = _resolve_mesh(mesh_source, image)
    guidance = rasterize(mesh, camera)
    mask = mask_from_map(guidance, config.mask_pad)
    schedule = config.schedule.build()
    if denoiser is None:
        denoiser = config.denoiser.build(image.shape, schedule)
    output = inpaint(denoiser, image, mask, guidance, schedule, rng, cond=cond)
    return RefineResult(output, guidance, mask, _unmasked_drift(output, image, mask))


def transform_pose(
    input_image: np.ndarray,
    input_pose: HandPose2D,
    reference_mesh: HandMesh,
    reference_pose: HandPose2D,
    config: RefineConfig,
    rng: np.random.Generator,
    denoiser: Optional[Denoiser] = None,
    cond: Optional[np.ndarray] = None,
) -> RefineResult:
    """Move the reference hand onto the input pose, then refine there.

    The mask covers the union of the original and the aligned guidance
    boxes (each padded), so both the vacated and the newly occupied
    regions are regenerated.
    """
    input_image = np.asarray(input_image, dtype=np.float64)
    h, w = input_image.shape[:2]
    camera = config.camera.build(h, w)
    alignment = compute_alignment(reference_pose, input_pose)
    original = rasterize(reference_mesh, camera)
    aligned = transform_mesh_2d(reference_mesh, camera, alignment)
    if not aligned.any():
        raise OffFrameError("alignment moved the guidance outside the frame")

    def padded_support(guidance: np.ndarray):
        box = support_bbox(guidance)
        pad = default_pad(box) if config.mask_pad is None else config.mask_pad
        return box.padded(pad)

    box = union_bbox(padded_support(original), padded_support(aligned))
    mask = fill_box_mask(box, h, w)
    schedule = config.schedule.build()
    if denoiser is None:
        denoiser = config.denoiser.build(input_image.shape, schedule)
    output = inpaint(denoiser, input_image, mask, aligned, schedule, rng, cond=cond)
    return RefineResult(output, aligned, mask, _unmasked_drift(output, input_image, mask))


def _gated_mesh_source(mesh: HandMesh, detectors: SidecarDetections) -> MeshSource:
    def source(image: np.ndarray) -> HandMesh:
        return double_check_predict(
            detectors.box_detector(),
            detectors.keypoint_detector(),
            lambda img, existence: mesh,
            image,
        )

    return source


@dataclass(frozen=True)
class _JobPlan:
    row: ManifestRow
    base: Path
    seed: int


def _write_artifacts(
    base: Path,
    result: RefineResult,
    kind: str,
    intermediates: bool,
) -> dict[str, str]:
    # artifact names are recorded relative to the output directory so two
    # runs into different directories stay byte-comparable
    artifacts = {}
    out_png = base.with_name(f"{base.name}.{kind}.png")
    save_png(out_png, result.output)
    artifacts["output"] = out_png.name
    out_npy = base.with_name(f"{base.name}.{kind}.npy")
    save_float32(out_npy, result.output)
    artifacts["output_float32"] = out_npy.name
    if intermediates:
        guidance_path = base.with_name(f"{base.name}.guidance.pgm")
        save_pgm(guidance_path, result.guidance)
        artifacts["guidance"] = guidance_path.name
        mask_path = base.with_name(f"{base.name}.mask.pgm")
        save_mask_pgm(mask_path, result.mask)
        artifacts["mask"] = mask_path.name
    return artifacts


def _run_row(
    row: ManifestRow,
    root: Path,
    base: Path,
    config: RefineConfig,
    seed: int,
    intermediates: bool,
) -> JobEntry:
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    try:
        image = load_image(root / row.image)
        if row.reference_mesh or row.reference_pose:
            if not (row.reference_mesh and row.reference_pose and row.pose):
                raise ValueError(
                    "pose transformation rows need reference_mesh, reference_pose, and pose"
                )
            result = transform_pose(
                image,
                load_pose(root / row.pose),
                load_mesh(root / row.reference_mesh),
                load_pose(root / row.reference_pose),
                config,
                rng,
            )
            kind = "transformed"
        else:
            if row.mesh is None:
                raise ValueError("refinement rows need a mesh")
            mesh = load_mesh(root / row.mesh)
            source: MeshSource = mesh
            if row.detectors is not None:
                source = _gated_mesh_source(
                    mesh, SidecarDetections.from_json(root / row.detectors)
                )
            result = refine(image, source, config, rng)
            kind = "refined"
    except NoHandDetectedError as exc:
        return JobEntry(
            row.image,
            STATUS_SKIPPED,
            seed=seed,
            duration_s=time.perf_counter() - start,
            detail=str(exc),
        )
    except (ValueError, OSError, KeyError, TypeError) as exc:
        return JobEntry(
            row.image,
            STATUS_ERROR,
            seed=seed,
            duration_s=time.perf_counter() - start,
            detail=f"{type(exc).__name__}: {exc}",
        )
    artifacts = _write_artifacts(base, result, kind, intermediates)
    return JobEntry(
        row.image,
        STATUS_REFINED,
        artifacts=artifacts,
        seed=seed,
        duration_s=time.perf_counter() - start,
    )


def run_manifest(
    manifest_path,
    config: RefineConfig,
    out_dir,
    global_seed: Optional[int] = None,
    emit_intermediates: bool = False,
) -> JobReport:
    """Run every manifest row and return the assembled report.

    Input paths resolve relative to the manifest; artifacts land in
    out_dir named by image stem. The report is sorted by image path.
    """
    manifest_path = Path(manifest_path)
    rows = load_manifest(manifest_path)
    root = manifest_path.parent
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seed0 = config.seed if global_seed is None else global_seed

    stems = [Path(r.image).stem for r in rows]
    dupes = sorted({s for s in stems if stems.count(s) > 1})
    if dupes:
        raise ValueError(f"manifest image stems must be unique, repeated: {dupes}")

    entries = []
    for row in rows:
        base = out_dir / Path(row.image).stem
        entries.append(
            _run_row(row, root, base, config, per_image_seed(seed0, row.image), emit_intermediates)
        )
    return JobReport(tuple(entries))


def run_single(
    row: ManifestRow,
    config: RefineConfig,
    out_dir=None,
    global_seed: Optional[int] = None,
) -> JobEntry:
    """Run one job outside a manifest; paths resolve against the working directory.

    Single-image runs always write the guidance and mask intermediates,
    next to the input unless out_dir says otherwise. The rng seed derives
    from the global seed and the image path exactly as in batch mode, so
    single and batch runs of the same job agree bit for bit.
    """
    image_path = Path(row.image)
    target = Path(out_dir) if out_dir is not None else image_path.parent
    target.mkdir(parents=True, exist_ok=True)
    seed0 = config.seed if global_seed is None else global_seed
    return _run_row(
        row,
        Path(""),
        target / image_path.stem,
        config,
        per_image_seed(seed0, row.image),
        intermediates=True,
    )
