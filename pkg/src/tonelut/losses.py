"""Training objective: content MSE, directional embedding loss, weight
L2, and the sampling-interval regularizer, with analytic gradients.

Total = lam_content * content + lam_clip * clip
        + lam_lut * (lam_weight * weight_l2 + lam_interval * interval)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, InvalidCoordinatesError
from .luts import BasisLutBank, SamplingCoordinates

DEGENERATE_NORM = 1e-8


@dataclass(frozen=True)
class LossWeights:
    lam_content: float = 1.0
    lam_clip: float = 1.0
    lam_lut: float = 1.0
    lam_weight: float = 1e-4
    lam_interval: float = 0.5
    alpha: float = 0.7

    def __post_init__(self):
        vals = (
            self.lam_content,
            self.lam_clip,
            self.lam_lut,
            self.lam_weight,
            self.lam_interval,
            self.alpha,
        )
        if not all(np.isfinite(v) and v >= 0 for v in vals):
            raise DimensionError("loss weights must be finite and non-negative")


@dataclass(frozen=True)
class LossReport:
    total: float
    content: float
    clip_directional: float
    weight_l2: float
    interval: float

    def as_dict(self):
        return {
            "total": self.total,
            "content": self.content,
            "clip": self.clip_directional,
            "weight": self.weight_l2,
            "interval": self.interval,
        }


def content_loss(source, adjusted) -> float:
    """Mean squared error over all pixel components."""
    a = np.asarray(source, dtype=np.float64)
    b = np.asarray(adjusted, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.mean((b - a) ** 2))


def content_loss_grad(source, adjusted) -> np.ndarray:
    """Gradient w.r.t. the adjusted image."""
    a = np.asarray(source, dtype=np.float64)
    b = np.asarray(adjusted, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return 2.0 * (b - a) / a.size


def clip_directional_loss(d_image, d_text) -> float:
    """One minus cosine between the image and text direction vectors.

    Degenerate directions (norm < 1e-8) contribute a flat loss of 1 so
    the remaining terms keep driving early training steps.
    """
    di = np.asarray(d_image, dtype=np.float64)
    dt = np.asarray(d_text, dtype=np.float64)
    if di.shape != dt.shape:
        raise DimensionError(f"shape mismatch {di.shape} vs {dt.shape}")
    ni, nt = np.linalg.norm(di), np.linalg.norm(dt)
    if ni < DEGENERATE_NORM or nt < DEGENERATE_NORM:
        return 1.0
    return float(1.0 - np.dot(di, dt) / (ni * nt))


def clip_directional_loss_grad(d_image, d_text) -> np.ndarray:
    """Gradient w.r.t. the image direction; zero in the degenerate case."""
    di = np.asarray(d_image, dtype=np.float64)
    dt = np.asarray(d_text, dtype=np.float64)
    if di.shape != dt.shape:
        raise DimensionError(f"shape mismatch {di.shape} vs {dt.shape}")
    ni, nt = np.linalg.norm(di), np.linalg.norm(dt)
    if ni < DEGENERATE_NORM or nt < DEGENERATE_NORM:
        return np.zeros_like(di)
    cos = np.dot(di, dt) / (ni * nt)
    return -(dt / (ni * nt) - cos * di / (ni * ni))


def weight_l2(w) -> float:
    w = np.asarray(w, dtype=np.float64)
    return float(np.sum(w * w))


def weight_l2_grad(w) -> np.ndarray:
    return 2.0 * np.asarray(w, dtype=np.float64)


def _interval_terms(bank: BasisLutBank, coords: SamplingCoordinates):
    """Per-axis squared forward-difference sums S_ax[i] (over l, c and the
    orthogonal indices) and the interval vectors."""
    if coords.size != bank.size:
        raise DimensionError(
            f"coords size {coords.size} does not match bank size {bank.size}"
        )
    gaps = np.diff(coords.x, axis=1)
    if np.any(gaps <= 1e-12):
        raise InvalidCoordinatesError("sampling intervals must exceed 1e-12")
    stack = bank.stacked()  # (L, N, N, N, 3)
    sums = []
    for ax in range(3):
        d = np.diff(stack, axis=1 + ax)
        reduce_axes = tuple(a for a in range(5) if a != 1 + ax)
        sums.append(np.sum(d * d, axis=reduce_axes))  # (N-1,)
    return np.stack(sums), gaps


def interval_loss(bank: BasisLutBank, coords: SamplingCoordinates, alpha: float) -> float:
    """Squared LUT forward differences over powered sampling intervals."""
    sums, gaps = _interval_terms(bank, coords)
    return float(np.sum(sums / gaps ** (2.0 * alpha)))


def interval_loss_grad_coords(
    bank: BasisLutBank, coords: SamplingCoordinates, alpha: float
) -> np.ndarray:
    """Gradient w.r.t. the (3, N) coordinate matrix."""
    sums, gaps = _interval_terms(bank, coords)
    # d/d gap of gap^(-2a) = -2a * gap^(-2a-1)
    d_gap = -2.0 * alpha * sums * gaps ** (-2.0 * alpha - 1.0)
    grad = np.zeros_like(coords.x)
    grad[:, 1:] += d_gap
    grad[:, :-1] -= d_gap
    return grad


@dataclass(frozen=True)
class TotalLossGrads:
    """Gradients of the weighted total, split by downstream consumer."""

    d_adjusted: np.ndarray  # content term, w.r.t. the adjusted image
    d_image_direction: np.ndarray  # clip term, w.r.t. the image direction
    d_weights: np.ndarray
    d_coords: np.ndarray


def total_loss(
    source,
    adjusted,
    d_image,
    d_text,
    w,
    bank: BasisLutBank,
    coords: SamplingCoordinates,
    weights: LossWeights,
) -> LossReport:
    c = content_loss(source, adjusted)
    cl = clip_directional_loss(d_image, d_text)
    wl = weight_l2(w)
    il = interval_loss(bank, coords, weights.alpha)
    total = (
        weights.lam_content * c
        + weights.lam_clip * cl
        + weights.lam_lut * (weights.lam_weight * wl + weights.lam_interval * il)
    )
    return LossReport(total, c, cl, wl, il)


def total_loss_grads(
    source,
    adjusted,
    d_image,
    d_text,
    w,
    bank: BasisLutBank,
    coords: SamplingCoordinates,
    weights: LossWeights,
) -> TotalLossGrads:
    return TotalLossGrads(
        d_adjusted=weights.lam_content * content_loss_grad(source, adjusted),
        d_image_direction=weights.lam_clip * clip_directional_loss_grad(d_image, d_text),
        d_weights=weights.lam_lut * weights.lam_weight * weight_l2_grad(w),
        d_coords=weights.lam_lut
        * weights.lam_interval
        * interval_loss_grad_coords(bank, coords, weights.alpha),
    )
