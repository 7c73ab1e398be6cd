"""Evaluation: grayscale SSIM, embedding similarity metrics, the
filter-assessment experiment, and the strength sweep.

The analytic filter registry stands in for hand-designed editing
presets; each entry is bound to a lexicon token so the toy embedder can
score it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embed import SOURCE_PROMPT, relative_similarity
from .errors import DimensionError, ToneLutError
from .luts import LUMA_WEIGHTS, validate_image
from .network import ModulationConfig, forward

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    ax = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(ax ** 2) / (2.0 * sigma ** 2))
    k = np.outer(g, g)
    return k / k.sum()


def _windowed_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Valid-mode weighted window means via sliding windows."""
    view = np.lib.stride_tricks.sliding_window_view(img, kernel.shape)
    return np.tensordot(view, kernel, axes=([2, 3], [0, 1]))


def grayscale_ssim(a, b) -> float:
    """SSIM between the Rec.601 luma planes, 11x11 Gaussian window."""
    ia = validate_image(a)
    ib = validate_image(b)
    if ia.shape != ib.shape:
        raise DimensionError(f"shape mismatch {ia.shape} vs {ib.shape}")
    if min(ia.shape[:2]) < SSIM_WINDOW:
        raise DimensionError(f"images must be at least {SSIM_WINDOW} pixels per side")
    ga = ia @ LUMA_WEIGHTS
    gb = ib @ LUMA_WEIGHTS
    k = _gaussian_kernel()
    mu_a = _windowed_mean(ga, k)
    mu_b = _windowed_mean(gb, k)
    var_a = _windowed_mean(ga * ga, k) - mu_a ** 2
    var_b = _windowed_mean(gb * gb, k) - mu_b ** 2
    cov = _windowed_mean(ga * gb, k) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def image_similarity(e_a, e_b) -> float:
    """Cosine similarity of two unit-norm embeddings."""
    a = np.asarray(e_a, dtype=np.float64)
    b = np.asarray(e_b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("embedding dimensions must agree")
    return float(np.dot(a, b))


def directional_similarity(e_in, e_out, e_src, e_tgt) -> float:
    """Cosine between the image change and the text change directions."""
    d_img = np.asarray(e_out, dtype=np.float64) - np.asarray(e_in, dtype=np.float64)
    d_txt = np.asarray(e_tgt, dtype=np.float64) - np.asarray(e_src, dtype=np.float64)
    ni, nt = np.linalg.norm(d_img), np.linalg.norm(d_txt)
    if ni < 1e-8 or nt < 1e-8:
        raise ToneLutError("degenerate direction vector in directional similarity")
    return float(np.dot(d_img, d_txt) / (ni * nt))


# --- analytic filter registry ------------------------------------------------

def _apply_gamma(img, gamma):
    return np.clip(img, 0.0, 1.0) ** gamma


def _apply_gains(img, gains):
    return np.clip(img * np.asarray(gains), 0.0, 1.0)


def _apply_saturation(img, factor):
    luma = (img @ LUMA_WEIGHTS)[:, :, None]
    return np.clip(luma + factor * (img - luma), 0.0, 1.0)


def _apply_lift(img, lift):
    return np.clip(lift + (1.0 - lift) * img, 0.0, 1.0)


def _apply_contrast(img, k):
    lo = 1.0 / (1.0 + np.exp(k / 2.0))
    hi = 1.0 / (1.0 + np.exp(-k / 2.0))
    return (1.0 / (1.0 + np.exp(-k * (img - 0.5))) - lo) / (hi - lo)


@dataclass(frozen=True)
class FilterSpec:
    """Named analytic tone filter; maps [0,1] images to [0,1] images."""

    name: str
    transform: callable

    def __call__(self, image) -> np.ndarray:
        out = self.transform(validate_image(image))
        return np.clip(out, 0.0, 1.0)


def default_filters() -> tuple:
    """Nine analytic presets, each named by a toy-lexicon token."""
    return (
        FilterSpec("bright", lambda im: _apply_gamma(im, 0.6)),
        FilterSpec("dark", lambda im: _apply_gamma(im, 1.8)),
        FilterSpec("warm", lambda im: _apply_gains(im, (1.18, 1.0, 0.82))),
        FilterSpec("cold", lambda im: _apply_gains(im, (0.82, 1.0, 1.18))),
        FilterSpec("saturated", lambda im: _apply_saturation(im, 1.7)),
        FilterSpec("faded", lambda im: _apply_lift(_apply_saturation(im, 0.5), 0.2)),
        FilterSpec("vivid", lambda im: _apply_saturation(_apply_contrast(im, 5.0), 1.3)),
        FilterSpec(
            "cinematic",
            lambda im: _apply_gains(_apply_contrast(im, 4.0), (0.9, 1.0, 1.1)),
        ),
        FilterSpec(
            "aged",
            lambda im: _apply_gains(_apply_saturation(im, 0.55), (1.12, 1.0, 0.8)),
        ),
    )


@dataclass(frozen=True)
class FilterAssessmentRow:
    filter_name: str
    mean_source: float
    mean_filtered: float


def assess_filters(corpus, filters, provider, temperature: float = 1.0) -> list:
    """Mean relative similarity of source vs filtered images per filter."""
    anchor = provider.embed_text(SOURCE_PROMPT)
    rows = []
    for spec in filters:
        target = provider.embed_text(f"{spec.name} photo")
        src_scores, flt_scores = [], []
        for image in corpus:
            e_src = provider.embed_image(image)
            e_flt = provider.embed_image(spec(image))
            src_scores.append(relative_similarity(e_src, target, anchor, temperature))
            flt_scores.append(relative_similarity(e_flt, target, anchor, temperature))
        rows.append(
            FilterAssessmentRow(spec.name, float(np.mean(src_scores)), float(np.mean(flt_scores)))
        )
    return rows


@dataclass(frozen=True)
class SweepPoint:
    s: float
    output: np.ndarray
    grayscale_ssim: float
    image_similarity: float
    relative_similarity: float
    max_delta_prev: float  # max per-pixel change vs. the previous s


def strength_sweep(bundle, provider, image, text: str, s_values) -> list:
    """Forward passes across modulation strengths with per-step metrics."""
    img = validate_image(image)
    e_target = provider.embed_text(text)
    anchor = provider.embed_text(SOURCE_PROMPT)
    e_in = provider.embed_image(img)
    points = []
    prev = None
    for s in s_values:
        if not np.isfinite(s):
            raise DimensionError(f"strength value must be finite, got {s}")
        result = forward(bundle, img, e_target, ModulationConfig(float(s)))
        out = result.output
        e_out = provider.embed_image(out)
        delta = 0.0 if prev is None else float(np.max(np.abs(out - prev)))
        points.append(
            SweepPoint(
                s=float(s),
                output=out,
                grayscale_ssim=grayscale_ssim(img, out) if min(img.shape[:2]) >= SSIM_WINDOW else float("nan"),
                image_similarity=image_similarity(e_in, e_out),
                relative_similarity=relative_similarity(e_out, e_target, anchor),
                max_delta_prev=delta,
            )
        )
        prev = out
    return points
