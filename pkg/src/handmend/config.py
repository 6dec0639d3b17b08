"""Run configuration: schedule, camera, mask pad, denoiser choice, seed.

Configs load from TOML. Every section is optional and falls back to the
defaults below; unknown keys are rejected so typos fail loudly instead of
silently running with defaults.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .diffusion import Denoiser, NoiseSchedule, gmm_denoiser, make_schedule, zero_denoiser
from .geometry import Point2
from .meshproc import Camera

DENOISER_KINDS = ("gmm", "zero")
DEFAULT_EPS_BG = 0.05


def _reject_unknown(section: dict, allowed: set[str], where: str) -> None:
    unknown = set(section) - allowed
    if unknown:
        raise ValueError(f"unknown {where} keys: {sorted(unknown)}")


@dataclass(frozen=True)
class ScheduleConfig:
    steps: int = 1000
    tau_count: int = 50
    schedule_kind: str = "linear-beta"
    beta_start: float = 1e-4
    beta_end: float = 2e-2

    def build(self) -> NoiseSchedule:
        return make_schedule(
            self.steps, self.schedule_kind, self.tau_count, self.beta_start, self.beta_end
        )


@dataclass(frozen=True)
class CameraConfig:
    """Pinhole intrinsics; unset fields derive from the image at run time.

    focal defaults to min(H, W); the principal point defaults to the
    image center.
    """

    focal: Optional[float] = None
    principal: Optional[tuple[float, float]] = None

    def build(self, height: int, width: int) -> Camera:
        focal = float(min(height, width)) if self.focal is None else self.focal
        if self.principal is None:
            principal = Point2(width / 2.0, height / 2.0)
        else:
            principal = Point2(self.principal[0], self.principal[1])
        return Camera(focal, principal, height, width)


@dataclass(frozen=True)
class DenoiserConfig:
    """Oracle denoiser selection.

    kind "gmm" builds the analytic mixture denoiser whose components are
    constant images at the listed means (the latent dimension comes from
    the image at run time); "zero" predicts zero noise. Trained denoisers
    plug in through the refine/transform denoiser argument instead.
    """

    kind: str = "gmm"
    means: tuple[float, ...] = (0.3, 0.7)
    variances: tuple[float, ...] = (0.05, 0.05)
    weights: tuple[float, ...] = (0.5, 0.5)

    def __post_init__(self):
        if self.kind not in DENOISER_KINDS:
            raise ValueError(f"unknown denoiser kind {self.kind!r}; expected one of {DENOISER_KINDS}")
        if self.kind == "gmm" and not (
            len(self.means) == len(self.variances) == len(self.weights) > 0
        ):
            raise ValueError("gmm denoiser needs equally many means, variances, and weights")

    def build(self, shape: tuple[int, ...], schedule: NoiseSchedule) -> Denoiser:
        if self.kind == "zero":
            return zero_denoiser
        d = int(np.prod(shape))
        means = np.outer(np.asarray(self.means, dtype=np.float64), np.ones(d))
        return gmm_denoiser(means, np.asarray(self.variances), np.asarray(self.weights), schedule)


@dataclass(frozen=True)
class RefineConfig:
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    camera: CameraConfig = field(default_factory=CameraConfig)
    denoiser: DenoiserConfig = field(default_factory=DenoiserConfig)
    mask_pad: Optional[float] = None
    seed: int = 0
    eps_bg: float = DEFAULT_EPS_BG

    def __post_init__(self):
        if self.mask_pad is not None and self.mask_pad < 0:
            raise ValueError(f"mask pad must be >= 0, got {self.mask_pad}")
        if self.eps_bg <= 0:
            raise ValueError(f"eps_bg must be positive, got {self.eps_bg}")
        if self.seed < 0:
            raise ValueError(f"seed must be a non-negative integer, got {self.seed}")


def config_from_mapping(raw: dict) -> RefineConfig:
    _reject_unknown(raw, {"schedule", "camera", "mask", "denoiser", "seed", "eps_bg"}, "config")
    sched_raw = dict(raw.get("schedule", {}))
    _reject_unknown(
        sched_raw,
        {"steps", "tau_count", "schedule_kind", "beta_start", "beta_end"},
        "[schedule]",
    )
    cam_raw = dict(raw.get("camera", {}))
    _reject_unknown(cam_raw, {"focal", "principal"}, "[camera]")
    mask_raw = dict(raw.get("mask", {}))
    _reject_unknown(mask_raw, {"pad"}, "[mask]")
    den_raw = dict(raw.get("denoiser", {}))
    _reject_unknown(den_raw, {"kind", "means", "variances", "weights"}, "[denoiser]")

    schedule = ScheduleConfig(**sched_raw)
    schedule.build()  # fail fast on invalid schedule parameters
    camera = CameraConfig(
        focal=cam_raw.get("focal"),
        principal=tuple(cam_raw["principal"]) if "principal" in cam_raw else None,
    )
    denoiser = DenoiserConfig(
        **{k: tuple(v) if isinstance(v, list) else v for k, v in den_raw.items()}
    )
    return RefineConfig(
        schedule=schedule,
        camera=camera,
        denoiser=denoiser,
        mask_pad=mask_raw.get("pad"),
        seed=int(raw.get("seed", 0)),
        eps_bg=float(raw.get("eps_bg", DEFAULT_EPS_BG)),
    )


def load_config(path) -> RefineConfig:
    with open(Path(path), "rb") as fh:
        return config_from_mapping(tomllib.load(fh))
