import json
from pathlib import Path

import numpy as np
import pytest

from handmend.config import config_from_mapping
from handmend.geometry import HandPose2D, Point2
from handmend.imgio import save_mesh, save_png, save_pose
from handmend.meshproc import HandMesh

FAST_CONFIG = {
    "seed": 3,
    "schedule": {"steps": 60, "tau_count": 6},
    "denoiser": {"kind": "gmm", "means": [0.4], "variances": [0.1], "weights": [1.0]},
}


@pytest.fixture
def fast_config():
    return config_from_mapping(json.loads(json.dumps(FAST_CONFIG)))


def center_triangle_mesh(shift_x=0.0, shift_y=0.0, z=2.0):
    """One triangle that projects near the frame center of a 48x48 camera."""
    verts = np.array(
        [
            [-0.3 + shift_x, -0.3 + shift_y, z],
            [0.5 + shift_x, -0.2 + shift_y, z + 0.2],
            [0.0 + shift_x, 0.5 + shift_y, z + 0.1],
        ]
    )
    return HandMesh(verts, np.array([[0, 1, 2]]))


def write_scene(root: Path, size=48):
    """Input image, mesh, and a matching pose pair for identity transforms."""
    rng = np.random.default_rng(0)
    paths = {
        "image": root / "img.png",
        "mesh": root / "mesh.json",
        "pose": root / "pose.json",
        "reference_pose": root / "refpose.json",
    }
    save_png(paths["image"], rng.uniform(size=(size, size)))
    save_mesh(paths["mesh"], center_triangle_mesh())
    pose = HandPose2D(Point2(size / 2.0, size / 2.0 + 6), Point2(size / 2.0 + 4, size / 2.0 - 6))
    save_pose(paths["pose"], pose)
    save_pose(paths["reference_pose"], pose)
    return paths
