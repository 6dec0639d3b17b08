"""Config parsing and construction."""

import numpy as np
import pytest

from handmend.config import (
    CameraConfig,
    DenoiserConfig,
    RefineConfig,
    ScheduleConfig,
    config_from_mapping,
    load_config,
)
from handmend.diffusion import DenoiserInput, zero_denoiser
from handmend.geometry import Point2


class TestDefaults:
    def test_empty_mapping_gives_defaults(self):
        cfg = config_from_mapping({})
        assert cfg.schedule == ScheduleConfig(1000, 50, "linear-beta", 1e-4, 2e-2)
        assert cfg.mask_pad is None
        assert cfg.seed == 0
        assert cfg.eps_bg == 0.05

    def test_default_schedule_builds(self):
        sched = RefineConfig().schedule.build()
        assert sched.num_steps == 1000
        assert len(sched.tau) == 51


class TestTomlLoading:
    def test_full_file(self, tmp_path):
        path = tmp_path / "c.toml"
        path.write_text(
            "\n".join(
                [
                    "seed = 11",
                    "eps_bg = 0.02",
                    "[schedule]",
                    "steps = 200",
                    "tau_count = 10",
                    'schedule_kind = "cosine"',
                    "[camera]",
                    "focal = 80.0",
                    "principal = [16.0, 20.0]",
                    "[mask]",
                    "pad = 4.5",
                    "[denoiser]",
                    'kind = "gmm"',
                    "means = [0.2, 0.8]",
                    "variances = [0.1, 0.1]",
                    "weights = [0.5, 0.5]",
                ]
            )
        )
        cfg = load_config(path)
        assert cfg.seed == 11
        assert cfg.eps_bg == 0.02
        assert cfg.schedule.steps == 200
        assert cfg.schedule.schedule_kind == "cosine"
        assert cfg.camera.focal == 80.0
        assert cfg.camera.principal == (16.0, 20.0)
        assert cfg.mask_pad == 4.5
        assert cfg.denoiser.means == (0.2, 0.8)

    def test_unknown_keys_rejected(self):
        with pytest.raises(ValueError, match="unknown config keys"):
            config_from_mapping({"sedd": 1})
        with pytest.raises(ValueError, match=r"\[schedule\]"):
            config_from_mapping({"schedule": {"step": 10}})
        with pytest.raises(ValueError, match=r"\[camera\]"):
            config_from_mapping({"camera": {"fov": 1.0}})
        with pytest.raises(ValueError, match=r"\[mask\]"):
            config_from_mapping({"mask": {"padding": 1.0}})
        with pytest.raises(ValueError, match=r"\[denoiser\]"):
            config_from_mapping({"denoiser": {"sigma": 1.0}})

    def test_invalid_schedule_fails_at_load(self):
        with pytest.raises(ValueError, match="num_tau"):
            config_from_mapping({"schedule": {"steps": 10, "tau_count": 11}})
        with pytest.raises(ValueError, match="kind"):
            config_from_mapping({"schedule": {"schedule_kind": "exp"}})

    def test_invalid_scalars(self):
        with pytest.raises(ValueError, match="eps_bg"):
            config_from_mapping({"eps_bg": 0.0})
        with pytest.raises(ValueError, match="pad"):
            config_from_mapping({"mask": {"pad": -1.0}})
        with pytest.raises(ValueError, match="seed"):
            config_from_mapping({"seed": -4})


class TestCameraConfig:
    def test_derived_defaults(self):
        cam = CameraConfig().build(height=32, width=48)
        assert cam.focal == 32.0
        assert cam.principal == Point2(24.0, 16.0)
        assert (cam.height, cam.width) == (32, 48)

    def test_explicit_values(self):
        cam = CameraConfig(focal=100.0, principal=(1.0, 2.0)).build(8, 8)
        assert cam.focal == 100.0
        assert cam.principal == Point2(1.0, 2.0)


class TestDenoiserConfig:
    def test_zero_kind(self):
        den = DenoiserConfig(kind="zero").build((4, 4), RefineConfig().schedule.build())
        assert den is zero_denoiser

    def test_gmm_constant_components(self):
        sched = ScheduleConfig(steps=100, tau_count=10).build()
        den = DenoiserConfig(
            kind="gmm", means=(0.5,), variances=(0.0,), weights=(1.0,)
        ).build((3, 3), sched)
        # delta prior at the constant-0.5 image: prediction must point there
        x_t = np.zeros((3, 3))
        eps = den(DenoiserInput(noisy=x_t, step=50))
        ab = sched.alpha_bar[50]
        x0 = (x_t - np.sqrt(1 - ab) * eps) / np.sqrt(ab)
        assert np.allclose(x0, 0.5, atol=1e-12)

    def test_validation(self):
        with pytest.raises(ValueError, match="denoiser kind"):
            DenoiserConfig(kind="unet")
        with pytest.raises(ValueError, match="equally many"):
            DenoiserConfig(means=(0.1, 0.2), variances=(0.1,), weights=(1.0,))
