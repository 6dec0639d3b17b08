"""Mesh-guided diffusion inpainting for hand refinement in generated images."""

from .config import (
    CameraConfig,
    DenoiserConfig,
    RefineConfig,
    ScheduleConfig,
    config_from_mapping,
    load_config,
)
from .detection import (
    HandExistence,
    LabeledKeypoints,
    NoHandDetectedError,
    SidecarDetections,
    StaticMeshPredictor,
    boxes_to_mask,
    double_check_predict,
    judge_existence,
)
from .diffusion import (
    DenoiserInput,
    EmptyMaskError,
    NoiseSchedule,
    ddim_step,
    final_step,
    gmm_denoiser,
    gmm_posterior_mean,
    inpaint,
    make_schedule,
    masked_blend_step,
    noise_known,
    sample_gmm,
    zero_denoiser,
)
from .geometry import (
    AffineTransform,
    BBox,
    DegeneratePoseError,
    HandPose2D,
    Point2,
    apply,
    apply_to_array,
    bbox_of_points,
    compose,
    compute_alignment,
    identity,
    rotation_about,
    scale_matrix,
    translation_matrix,
    union_bbox,
)
from .meshproc import (
    BehindCameraError,
    Camera,
    EmptyGuidanceError,
    HandMesh,
    component_boxes,
    mask_from_map,
    merge_meshes,
    project,
    rasterize,
    rasterize_triangles,
    transform_mesh_2d,
)
from .metrics import (
    MMDTestResult,
    median_bandwidth,
    mmd2_permutation_test,
    mmd2_unbiased,
    moments,
)
from .pipeline import (
    JobEntry,
    JobReport,
    OffFrameError,
    RefineResult,
    per_image_seed,
    refine,
    run_manifest,
    run_single,
    transform_pose,
)

__version__ = "0.1.0"
