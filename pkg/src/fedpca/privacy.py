"""Gaussian noise calibration and masked covariance blocks.

Covariance release works block-wise: the d x d sample covariance of a batch
is produced c columns at a time, each slab perturbed with an independent
iid Gaussian mask whose scale follows from the (epsilon, delta) budget, the
ambient dimension, and the batch width. Nothing here ever holds more than
one d x c slab at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from . import accounting
from .linalg import ensure_matrix

_SQRT_2PI = math.sqrt(2.0 * math.pi)

STREAMING_NONSYMMETRIC = "streaming_nonsymmetric"
SULQ_SYMMETRIC = "sulq_symmetric"
_FLAVORS = (STREAMING_NONSYMMETRIC, SULQ_SYMMETRIC)


class CalibrationError(ValueError):
    """The privacy parameters leave the noise scale undefined."""


class PrivacyInfeasibleError(RuntimeError):
    """A batch is too small to honor the requested noise floor."""


@dataclass(frozen=True)
class DpConfig:
    """Per-batch (epsilon, delta) budget.

    omega_floor, when set, is the largest acceptable noise scale; batches
    narrower than min_batch_size(dp, d, omega_floor) are rejected as
    privacy-infeasible.
    """

    epsilon: float
    delta: float
    omega_floor: Optional[float] = None

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.omega_floor is not None and not self.omega_floor > 0:
            raise ValueError("omega_floor must be positive when given")


@dataclass(frozen=True)
class NoiseScale:
    """Standard deviation of the covariance mask, tagged with its recipe.

    omega == 0 is permitted as the noiseless probe setting used by tests
    and by runs that disable masking while keeping the block plumbing.
    """

    omega: float
    flavor: str

    def __post_init__(self):
        if not self.omega >= 0 or not math.isfinite(self.omega):
            raise ValueError(f"omega must be finite and >= 0, got {self.omega}")
        if self.flavor not in _FLAVORS:
            raise ValueError(f"unknown flavor {self.flavor!r}")


@dataclass(frozen=True)
class MaskedCovBlock:
    """One perturbed slab of the batch covariance, columns [col_start, col_stop)."""

    data: np.ndarray
    col_start: int
    col_stop: int


def _checked_log(argument: float) -> float:
    if argument <= 1.0:
        raise CalibrationError(
            f"log argument {argument:.6g} <= 1; (epsilon, delta, d) admit no "
            "positive noise calibration"
        )
    return math.log(argument)


def _check_dims(d: int, n: int) -> None:
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if n < 1:
        raise ValueError(f"batch width must be positive, got {n}")


def omega_streaming(dp: DpConfig, d: int, n: int) -> NoiseScale:
    """Mask scale for non-symmetric per-batch covariance release.

    omega = (4 d / (eps n)) sqrt(2 ln(d^2 / (delta sqrt(2 pi))))
            + sqrt(2) / (sqrt(eps) n)
    """
    _check_dims(d, n)
    log_term = _checked_log(d * d / (dp.delta * _SQRT_2PI))
    omega = (4.0 * d / (dp.epsilon * n)) * math.sqrt(2.0 * log_term)
    omega += math.sqrt(2.0) / (math.sqrt(dp.epsilon) * n)
    return NoiseScale(omega, STREAMING_NONSYMMETRIC)


def omega_symmetric_sulq(dp: DpConfig, d: int, n: int) -> NoiseScale:
    """Mask scale for the symmetric one-shot covariance release.

    omega = ((d + 1) / (n eps)) sqrt(2 ln((d^2 + d) / (2 delta sqrt(2 pi))))
            + 1 / (n sqrt(eps))
    """
    _check_dims(d, n)
    log_term = _checked_log((d * d + d) / (2.0 * dp.delta * _SQRT_2PI))
    omega = ((d + 1.0) / (n * dp.epsilon)) * math.sqrt(2.0 * log_term)
    omega += 1.0 / (n * math.sqrt(dp.epsilon))
    return NoiseScale(omega, SULQ_SYMMETRIC)


def min_batch_size(dp: DpConfig, d: int, omega_floor: float) -> int:
    """Smallest batch width whose streaming noise scale stays <= omega_floor.

    Inverts the omega_streaming formula in n (both terms scale as 1/n):
    n >= (1 / omega_floor) [ (4 d / eps) sqrt(2 ln(d^2 / (delta sqrt(2 pi))))
                             + sqrt(2 / eps) ].
    """
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    if not omega_floor > 0:
        raise ValueError(f"omega_floor must be positive, got {omega_floor}")
    log_term = _checked_log(d * d / (dp.delta * _SQRT_2PI))
    numerator = (4.0 * d / dp.epsilon) * math.sqrt(2.0 * log_term)
    numerator += math.sqrt(2.0 / dp.epsilon)
    return max(1, math.ceil(numerator / omega_floor))


def derive_rng(root_seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (client, block, ...) coordinates.

    Streams derived from the same root with different keys never collide,
    so per-client noise is reproducible regardless of arrival interleaving.
    """
    ss = np.random.SeedSequence(root_seed, spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def gaussian_mask(
    d: int, c: int, scale: NoiseScale, rng: np.random.Generator
) -> np.ndarray:
    """iid N(0, omega^2) matrix of shape (d, c); all zeros when omega == 0."""
    if d < 1 or c < 1:
        raise ValueError(f"mask shape must be positive, got ({d}, {c})")
    accounting.note("privacy.mask", (d, c))
    if scale.omega == 0.0:
        return np.zeros((d, c))
    return rng.normal(0.0, scale.omega, size=(d, c))


def symmetric_gaussian_mask(
    d: int, scale: NoiseScale, rng: np.random.Generator
) -> np.ndarray:
    """Symmetric d x d mask: iid N(0, omega^2) on and above the diagonal."""
    if d < 1:
        raise ValueError(f"dimension must be positive, got {d}")
    accounting.note("privacy.mask", (d, d))
    upper = np.triu(rng.normal(0.0, scale.omega, size=(d, d)) if scale.omega else np.zeros((d, d)))
    return upper + np.triu(upper, 1).T


def masked_cov_blocks(
    batch, c: int, scale: NoiseScale, rng: np.random.Generator
) -> Iterator[MaskedCovBlock]:
    """Yield the perturbed batch covariance in column slabs of width c.

    For a batch B (d x b), slab k covers covariance columns
    [k c, min((k+1) c, d)) and equals (1/b) B (B^T)[:, cols] plus a fresh
    mask. Concatenating all slabs with omega == 0 rebuilds (1/b) B B^T
    exactly; only one slab is alive at a time.
    """
    m = ensure_matrix(batch, "batch")
    d, b = m.shape
    if c < 1:
        raise ValueError(f"block width must be positive, got {c}")
    inv_b = 1.0 / b
    for lo in range(0, d, c):
        hi = min(lo + c, d)
        slab = (m @ m[lo:hi, :].T) * inv_b
        accounting.note("privacy.cov_slab", slab.shape)
        slab += gaussian_mask(d, hi - lo, scale, rng)
        yield MaskedCovBlock(slab, lo, hi)
