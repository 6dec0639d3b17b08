"""Serialization round trips and determinism."""

import json

import numpy as np
import pytest

from handmend.geometry import HandPose2D, Point2
from handmend.imgio import (
    load_float32,
    load_image,
    load_manifest,
    load_mesh,
    load_pose,
    save_float32,
    save_mask_pgm,
    save_mesh,
    save_pgm,
    save_png,
)
from handmend.meshproc import HandMesh


class TestImages:
    def test_png_gray_round_trip_on_grid(self, tmp_path):
        img = np.arange(16, dtype=np.float64).reshape(4, 4) / 255.0 * 16
        img = np.round(img * 255) / 255.0
        p = tmp_path / "g.png"
        save_png(p, img)
        assert np.allclose(load_image(p), img, atol=1e-12)

    def test_png_rgb_round_trip(self, tmp_path):
        rng = np.random.default_rng(1)
        img = np.round(rng.uniform(size=(5, 7, 3)) * 255) / 255.0
        p = tmp_path / "c.png"
        save_png(p, img)
        got = load_image(p)
        assert got.shape == (5, 7, 3)
        assert np.allclose(got, img, atol=1e-12)

    def test_png_clamps_out_of_range(self, tmp_path):
        p = tmp_path / "x.png"
        save_png(p, np.array([[-0.5, 2.0]]))
        assert np.array_equal(load_image(p), np.array([[0.0, 1.0]]))

    def test_quantization_is_round(self, tmp_path):
        # 0.5 maps to round(127.5) = 128 under numpy's even rounding
        p = tmp_path / "q.png"
        save_png(p, np.array([[0.5]]))
        assert load_image(p)[0, 0] == 128 / 255.0

    def test_pgm_round_trip(self, tmp_path):
        img = np.round(np.random.default_rng(2).uniform(size=(6, 4)) * 255) / 255.0
        p = tmp_path / "g.pgm"
        save_pgm(p, img)
        assert p.read_bytes().startswith(b"P5")
        assert np.allclose(load_image(p), img, atol=1e-12)

    def test_mask_pgm_uses_0_and_255(self, tmp_path):
        mask = np.array([[0, 1], [1, 0]], dtype=np.uint8)
        p = tmp_path / "m.pgm"
        save_mask_pgm(p, mask)
        got = load_image(p)
        assert set(np.unique(got)) == {0.0, 1.0}
        with pytest.raises(ValueError, match="0 or 1"):
            save_mask_pgm(p, np.array([[2]]))

    def test_save_png_shape_validation(self, tmp_path):
        with pytest.raises(ValueError, match="shape"):
            save_png(tmp_path / "bad.png", np.zeros((2, 2, 4)))
        with pytest.raises(ValueError, match="2-D"):
            save_pgm(tmp_path / "bad.pgm", np.zeros((2, 2, 3)))

    def test_writers_are_deterministic(self, tmp_path):
        img = np.random.default_rng(3).uniform(size=(9, 9))
        save_png(tmp_path / "a.png", img)
        save_png(tmp_path / "b.png", img)
        assert (tmp_path / "a.png").read_bytes() == (tmp_path / "b.png").read_bytes()

    def test_float32_sidecar_is_lossless(self, tmp_path):
        arr = np.random.default_rng(4).standard_normal((3, 5))
        p = tmp_path / "x.npy"
        save_float32(p, arr)
        assert np.array_equal(load_float32(p), arr.astype(np.float32))


class TestMeshAndPose:
    def test_mesh_round_trip(self, tmp_path):
        mesh = HandMesh(
            np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 2.0]]),
            np.array([[0, 1, 2]]),
        )
        p = tmp_path / "m.json"
        save_mesh(p, mesh)
        got = load_mesh(p)
        assert np.array_equal(got.vertices, mesh.vertices)
        assert np.array_equal(got.faces, mesh.faces)

    def test_pose_round_trip(self, tmp_path):
        pose = HandPose2D(Point2(3.5, 4.25), Point2(-1.0, 2.0))
        p = tmp_path / "p.json"
        from handmend.imgio import save_pose

        save_pose(p, pose)
        assert load_pose(p) == pose


class TestManifest:
    def test_parse(self, tmp_path):
        p = tmp_path / "jobs.json"
        p.write_text(
            json.dumps(
                [
                    {"image": "a.png", "mesh": "a.json", "detectors": None},
                    {
                        "image": "b.png",
                        "pose": "bp.json",
                        "reference_mesh": "rm.json",
                        "reference_pose": "rp.json",
                    },
                ]
            )
        )
        rows = load_manifest(p)
        assert rows[0].image == "a.png"
        assert rows[0].detectors is None
        assert rows[1].reference_mesh == "rm.json"

    def test_rejections(self, tmp_path):
        p = tmp_path / "jobs.json"
        p.write_text(json.dumps({"image": "a.png"}))
        with pytest.raises(ValueError, match="JSON list"):
            load_manifest(p)
        p.write_text(json.dumps([{"mesh": "m.json"}]))
        with pytest.raises(ValueError, match="'image'"):
            load_manifest(p)
        p.write_text(json.dumps([{"image": "a.png", "extra": 1}]))
        with pytest.raises(ValueError, match="unknown keys"):
            load_manifest(p)
        p.write_text(json.dumps([{"image": "a.png"}, {"image": "a.png"}]))
        with pytest.raises(ValueError, match="duplicate"):
            load_manifest(p)
