"""Procedurally generated desk-scale image corpus.

Deterministic per seed so tests and the training acceptance runs need
no external dataset. Images mix smooth gradients, soft blobs and light
texture to give the color statistics some variety while staying in a
natural mid-tone range.
"""

from __future__ import annotations

import numpy as np


def make_image(rng: np.random.Generator, size: int = 32) -> np.ndarray:
    """One synthetic RGB image in [0, 1]."""
    yy, xx = np.meshgrid(np.linspace(0, 1, size), np.linspace(0, 1, size), indexing="ij")
    base = rng.uniform(0.5, 0.7, size=3)
    gx = rng.uniform(-0.25, 0.25, size=3)
    gy = rng.uniform(-0.25, 0.25, size=3)
    img = base + gx * (xx[:, :, None] - 0.5) + gy * (yy[:, :, None] - 0.5)

    for _ in range(rng.integers(2, 5)):
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        radius = rng.uniform(0.1, 0.35)
        tint = rng.uniform(-0.2, 0.2, size=3)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * radius ** 2))
        img += blob[:, :, None] * tint

    img += rng.normal(0.0, 0.015, size=img.shape)
    return np.clip(img, 0.0, 1.0)


def make_corpus(count: int = 24, size: int = 32, seed: int = 7) -> list:
    rng = np.random.default_rng(seed)
    return [make_image(rng, size) for _ in range(count)]
