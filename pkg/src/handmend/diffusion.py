"""Noise schedules, deterministic DDIM sampling, and masked inpainting.

The sampler runs in pixel space over a strictly decreasing cumulative
signal-retention sequence alpha_bar. Inpainting follows the masked-blend
recipe: at each reverse step the generated content fills the masked
region while the unmasked region is replaced by a freshly noised copy
of the known image; the very last step runs unmasked over the full
frame to blend the two regions.

The DDIM update is fully deterministic (eta = 0); the only randomness is
the initial noise and the known-region noising, both drawn from the
caller's generator so runs are bit-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import logsumexp

SCHEDULE_KINDS = ("linear-beta", "cosine")


class EmptyMaskError(ValueError):
    """Raised when an inpainting mask selects no pixels."""


@dataclass(frozen=True)
class NoiseSchedule:
    """Cumulative schedule alpha_bar over steps 0..T plus the sampling subsequence tau.

    alpha_bar[0] == 1, strictly decreasing, all values in (0, 1].
    tau is strictly increasing with tau[0] == 0 and tau[-1] == T; sampling
    walks its adjacent pairs from the back.
    """

    alpha_bar: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        ab = np.asarray(self.alpha_bar, dtype=np.float64)
        tau = np.asarray(self.tau, dtype=np.intp)
        if ab.ndim != 1 or len(ab) < 2:
            raise ValueError("alpha_bar must be a 1-D sequence of length T+1 >= 2")
        if ab[0] != 1.0:
            raise ValueError(f"alpha_bar[0] must be exactly 1, got {ab[0]}")
        if np.any(np.diff(ab) >= 0):
            raise ValueError("alpha_bar must be strictly decreasing")
        if ab[-1] <= 0.0 or np.any(ab > 1.0):
            raise ValueError("alpha_bar values must lie in (0, 1]")
        if tau.ndim != 1 or len(tau) < 2 or np.any(np.diff(tau) <= 0):
            raise ValueError("tau must be strictly increasing with at least two entries")
        if tau[0] != 0 or tau[-1] != len(ab) - 1:
            raise ValueError("tau must start at 0 and end at T")
        ab.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "alpha_bar", ab)
        object.__setattr__(self, "tau", tau)

    @property
    def num_steps(self) -> int:
        return len(self.alpha_bar) - 1


@dataclass(frozen=True)
class DenoiserInput:
    """Everything a conditional denoiser sees for one prediction.

    masked_image is the background-only image (known pixels outside the
    mask, zeros inside); it is None on the final harmonization step, which
    conditions on the guidance map alone. cond is an opaque fixed-length
    vector standing in for prompt conditioning.
    """

    noisy: np.ndarray
    step: int
    masked_image: Optional[np.ndarray] = None
    guidance: Optional[np.ndarray] = None
    cond: Optional[np.ndarray] = None

    def __post_init__(self):
        spatial = self.noisy.shape[:2]
        if self.masked_image is not None and self.masked_image.shape != self.noisy.shape:
            raise ValueError("masked_image shape must match noisy latent")
        if self.guidance is not None and self.guidance.shape[:2] != spatial:
            raise ValueError("guidance spatial shape must match noisy latent")


Denoiser = Callable[[DenoiserInput], np.ndarray]


def make_schedule(
    num_steps: int,
    kind: str = "linear-beta",
    num_tau: int = 50,
    beta_start: float = 1e-4,
    beta_end: float = 2e-2,
) -> NoiseSchedule:
    """Build a schedule of ``num_steps`` diffusion steps with ``num_tau`` sampling steps.

    tau is evenly spaced over 0..num_steps with num_tau + 1 entries, so
    num_tau == num_steps recovers the complete step sequence.
    """
    if num_steps < 1:
        raise ValueError(f"num_steps must be >= 1, got {num_steps}")
    if not 1 <= num_tau <= num_steps:
        raise ValueError(f"num_tau must be in [1, {num_steps}], got {num_tau}")
    if kind == "linear-beta":
        if not 0 < beta_start <= beta_end < 1:
            raise ValueError(f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
        betas = np.linspace(beta_start, beta_end, num_steps)
        alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - betas)])
    elif kind == "cosine":
        s = 0.008
        t = np.arange(num_steps + 1, dtype=np.float64)
        f = np.cos((t / num_steps + s) / (1 + s) * math.pi / 2) ** 2
        # per-step retention, clipped so alpha_bar stays in (0, 1) and decreasing
        alphas = np.clip(f[1:] / f[:-1], 1e-3, 1.0 - 1e-12)
        alpha_bar = np.concatenate([[1.0], np.cumprod(alphas)])
    else:
        raise ValueError(f"unknown schedule kind {kind!r}; expected one of {SCHEDULE_KINDS}")
    tau = np.round(np.linspace(0, num_steps, num_tau + 1)).astype(np.intp)
    return NoiseSchedule(alpha_bar, tau)


def noise_known(
    x0: np.ndarray, step: int, schedule: NoiseSchedule, rng: np.random.Generator
) -> np.ndarray:
    """Draw from N(sqrt(ab)*x0, (1 - ab)*I) at the given step, i.i.d. per element."""
    ab = schedule.alpha_bar[step]
    eps = rng.standard_normal(x0.shape)
    return math.sqrt(ab) * x0 + math.sqrt(1.0 - ab) * eps


def ddim_step(
    denoiser: Denoiser,
    x_t: np.ndarray,
    from_step: int,
    to_step: int,
    schedule: NoiseSchedule,
    *,
    masked_image: Optional[np.ndarray] = None,
    guidance: Optional[np.ndarray] = None,
    cond: Optional[np.ndarray] = None,
) -> np.ndarray:
    """One deterministic DDIM update from from_step down to to_step.

    Predicts noise, inverts it to the clean estimate
    x0_hat = (x_t - sqrt(1 - ab_from) * eps) / sqrt(ab_from), and re-noises
    deterministically to sqrt(ab_to) * x0_hat + sqrt(1 - ab_to) * eps.
    """
    if from_step <= to_step:
        raise ValueError(f"from_step must exceed to_step, got {from_step} -> {to_step}")
    eps = denoiser(
        DenoiserInput(
            noisy=x_t, step=from_step, masked_image=masked_image, guidance=guidance, cond=cond
        )
    )
    ab_from = schedule.alpha_bar[from_step]
    ab_to = schedule.alpha_bar[to_step]
    x0_hat = (x_t - math.sqrt(1.0 - ab_from) * eps) / math.sqrt(ab_from)
    return math.sqrt(ab_to) * x0_hat + math.sqrt(1.0 - ab_to) * eps


def _expand_mask(mask: np.ndarray, like: np.ndarray) -> np.ndarray:
    mask_bool = np.asarray(mask) != 0
    if mask_bool.shape != like.shape[:2]:
        raise ValueError("mask spatial shape must match latent")
    if like.ndim == 3:
        return mask_bool[:, :, np.newaxis]
    return mask_bool


def masked_blend_step(
    denoiser: Denoiser,
    x_t: np.ndarray,
    from_step: int,
    to_step: int,
    x0_known: np.ndarray,
    mask: np.ndarray,
    guidance: Optional[np.ndarray],
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    cond: Optional[np.ndarray] = None,
) -> np.ndarray:
    """One masked reverse step: DDIM output inside the mask, noised known outside.

    Implements the Hadamard blend m * DDIM(...) + (1 - m) * noised_known for a
    {0,1} mask, so unmasked pixels equal the fresh known-image draw bit for bit.
    """
    if x0_known.shape != x_t.shape:
        raise ValueError("known image shape must match latent")
    m = _expand_mask(mask, x_t)
    masked_image = np.where(m, 0.0, x0_known)
    generated = ddim_step(
        denoiser,
        x_t,
        from_step,
        to_step,
        schedule,
        masked_image=masked_image,
        guidance=guidance,
        cond=cond,
    )
    known = noise_known(x0_known, to_step, schedule, rng)
    return np.where(m, generated, known)


def final_step(
    denoiser: Denoiser,
    x_t: np.ndarray,
    from_step: int,
    guidance: Optional[np.ndarray],
    cond: Optional[np.ndarray],
    schedule: NoiseSchedule,
) -> np.ndarray:
    """The last reverse step, run maskless over the full frame down to step 0.

    Harmonizes the generated region with the background; the denoiser sees
    the guidance map but no masked image.
    """
    smallest_positive = schedule.tau[1]
    if from_step != smallest_positive:
        raise ValueError(
            f"final step must start at the smallest positive tau {smallest_positive}, got {from_step}"
        )
    return ddim_step(denoiser, x_t, from_step, 0, schedule, guidance=guidance, cond=cond)


def inpaint(
    denoiser: Denoiser,
    image: np.ndarray,
    mask: np.ndarray,
    guidance: Optional[np.ndarray],
    schedule: NoiseSchedule,
    rng: np.random.Generator,
    cond: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Full masked inpainting chain over the schedule's tau subsequence.

    Starts from pure noise, applies masked blend steps for every tau pair
    down to the smallest positive tau, then one maskless final step to 0.
    """
    image = np.asarray(image, dtype=np.float64)
    if not np.asarray(mask).any():
        raise EmptyMaskError("inpainting mask selects no pixels")
    tau = schedule.tau
    x = rng.standard_normal(image.shape)
    for i in range(len(tau) - 1, 1, -1):
        x = masked_blend_step(
            denoiser, x, tau[i], tau[i - 1], image, mask, guidance, schedule, rng, cond=cond
        )
    x = final_step(denoiser, x, tau[1], guidance, cond, schedule)
    if not np.all(np.isfinite(x)):
        raise FloatingPointError("inpainting produced non-finite values")
    return x


def gmm_posterior_mean(
    x_t: np.ndarray,
    alpha_bar: float,
    means: np.ndarray,
    variances: np.ndarray,
    weights: np.ndarray,
) -> np.ndarray:
    """E[x0 | x_t] for an isotropic Gaussian mixture prior under the noising
    x_t = sqrt(ab) * x0 + sqrt(1 - ab) * eps.

    Given component k, (x0, x_t) are jointly Gaussian with
    Var(x_t|k) = ab * v_k + (1 - ab) and Cov(x0, x_t|k) = sqrt(ab) * v_k,
    so E[x0 | x_t, k] = mu_k + sqrt(ab) * v_k / Var(x_t|k) * (x_t - sqrt(ab) * mu_k).
    Components are mixed by their posterior responsibilities, evaluated in
    log space for stability.
    """
    x = np.asarray(x_t, dtype=np.float64).reshape(-1)
    d = x.shape[0]
    sqrt_ab = math.sqrt(alpha_bar)
    marginal_var = alpha_bar * variances + (1.0 - alpha_bar)
    resid = x[np.newaxis, :] - sqrt_ab * means
    log_lik = -0.5 * (resid**2).sum(axis=1) / marginal_var - 0.5 * d * np.log(
        2 * math.pi * marginal_var
    )
    log_resp = np.log(weights) + log_lik
    log_resp -= logsumexp(log_resp)
    resp = np.exp(log_resp)
    gains = sqrt_ab * variances / marginal_var
    per_component = means + gains[:, np.newaxis] * resid
    return (resp[:, np.newaxis] * per_component).sum(axis=0).reshape(np.shape(x_t))


def gmm_denoiser(
    means: np.ndarray,
    variances: np.ndarray,
    weights: np.ndarray,
    schedule: NoiseSchedule,
) -> Denoiser:
    """Analytic optimal denoiser for an isotropic Gaussian-mixture data prior.

    The latent is treated as one flattened vector of dimension d; the
    returned callable converts the exact posterior mean into a noise
    prediction eps_hat = (x_t - sqrt(ab) * E[x0|x_t]) / sqrt(1 - ab).
    Used as a verification oracle for the sampler.
    """
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    variances = np.asarray(variances, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    if len(variances) != len(means) or len(weights) != len(means):
        raise ValueError("means, variances, and weights must have matching lengths")
    if np.any(variances < 0):
        raise ValueError("component variances must be non-negative")
    if np.any(weights <= 0) or not math.isclose(weights.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("weights must be positive and sum to 1")
    weights = weights / weights.sum()

    def denoise(inp: DenoiserInput) -> np.ndarray:
        if inp.noisy.size != means.shape[1]:
            raise ValueError(
                f"latent has {inp.noisy.size} elements but the mixture is {means.shape[1]}-dimensional"
            )
        ab = schedule.alpha_bar[inp.step]
        if ab >= 1.0:
            return np.zeros_like(inp.noisy, dtype=np.float64)
        x0_mean = gmm_posterior_mean(inp.noisy, ab, means, variances, weights)
        return (inp.noisy - math.sqrt(ab) * x0_mean) / math.sqrt(1.0 - ab)

    return denoise


def zero_denoiser(inp: DenoiserInput) -> np.ndarray:
    """Predicts zero noise everywhere; the DDIM chain then just rescales."""
    return np.zeros_like(inp.noisy, dtype=np.float64)


def sample_gmm(
    means: np.ndarray,
    variances: np.ndarray,
    weights: np.ndarray,
    n: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Direct draws from the isotropic mixture, (n, d); the sampler's ground truth."""
    means = np.atleast_2d(np.asarray(means, dtype=np.float64))
    variances = np.asarray(variances, dtype=np.float64).reshape(-1)
    weights = np.asarray(weights, dtype=np.float64).reshape(-1)
    comps = rng.choice(len(means), size=n, p=weights / weights.sum())
    eps = rng.standard_normal((n, means.shape[1]))
    return means[comps] + np.sqrt(variances[comps])[:, np.newaxis] * eps
