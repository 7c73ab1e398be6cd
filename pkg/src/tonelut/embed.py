"""Shared image/text embedding space.

Two providers implement the same surface:

  - ToyEmbeddingProvider: deterministic, differentiable color-statistics
    embeddings (the only mode usable for training). Text tokens map to
    small two-tone swatch images; the embedding of a text is the image
    embedding of its swatch.
  - FileEmbeddingProvider: a read-only store of externally computed
    vectors (e.g. CLIP text embeddings) for inference and evaluation.

Relative similarity scores an image against a target description versus
a neutral anchor via a two-way softmax over cosine similarities.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ToneLutError, UnknownTextError
from .network import FEATURE_DIM, extract_features, extract_features_grad

SOURCE_PROMPT = "normal photo"
SWATCH_SIZE = 8
SWATCH_CONTRAST = 0.1

# Token -> canonical RGB swatch. Covers primaries/secondaries, common
# color names, and the tone adjectives bound to the analytic filter
# registry in the eval module.
DEFAULT_LEXICON = {
    "normal": (0.5, 0.5, 0.5),
    "red": (0.85, 0.15, 0.15),
    "green": (0.15, 0.8, 0.2),
    "blue": (0.15, 0.25, 0.85),
    "yellow": (0.9, 0.85, 0.15),
    "cyan": (0.15, 0.8, 0.8),
    "magenta": (0.85, 0.2, 0.8),
    "orange": (0.9, 0.55, 0.15),
    "purple": (0.55, 0.2, 0.7),
    "pink": (0.95, 0.6, 0.7),
    "brown": (0.55, 0.35, 0.2),
    "white": (0.95, 0.95, 0.95),
    "black": (0.08, 0.08, 0.08),
    "gray": (0.45, 0.45, 0.45),
    "silver": (0.7, 0.72, 0.75),
    "gold": (0.85, 0.68, 0.2),
    "beige": (0.8, 0.75, 0.62),
    "ivory": (0.92, 0.9, 0.82),
    "teal": (0.15, 0.55, 0.55),
    "navy": (0.1, 0.15, 0.45),
    "maroon": (0.45, 0.1, 0.15),
    "olive": (0.45, 0.48, 0.15),
    "lime": (0.6, 0.9, 0.15),
    "indigo": (0.3, 0.15, 0.6),
    "violet": (0.6, 0.35, 0.85),
    "turquoise": (0.2, 0.8, 0.75),
    "salmon": (0.95, 0.55, 0.45),
    "coral": (0.95, 0.45, 0.35),
    "crimson": (0.8, 0.1, 0.25),
    "scarlet": (0.9, 0.15, 0.1),
    "ruby": (0.75, 0.1, 0.3),
    "emerald": (0.1, 0.7, 0.4),
    "jade": (0.2, 0.65, 0.45),
    "sapphire": (0.1, 0.3, 0.7),
    "azure": (0.25, 0.55, 0.9),
    "sky": (0.5, 0.75, 0.95),
    "rose": (0.9, 0.45, 0.55),
    "lavender": (0.75, 0.7, 0.9),
    "mint": (0.6, 0.95, 0.75),
    "peach": (0.95, 0.75, 0.6),
    "apricot": (0.95, 0.7, 0.5),
    "mustard": (0.8, 0.65, 0.2),
    "rust": (0.65, 0.3, 0.15),
    "copper": (0.72, 0.45, 0.2),
    "bronze": (0.6, 0.45, 0.25),
    "charcoal": (0.2, 0.2, 0.22),
    "slate": (0.35, 0.4, 0.45),
    "sand": (0.82, 0.72, 0.55),
    "khaki": (0.7, 0.65, 0.45),
    "plum": (0.55, 0.3, 0.5),
    "burgundy": (0.5, 0.15, 0.25),
    "forest": (0.15, 0.4, 0.2),
    "sea": (0.2, 0.5, 0.6),
    "midnight": (0.1, 0.1, 0.25),
    # tone adjectives (filter registry tokens among them)
    "bright": (0.88, 0.88, 0.86),
    "dark": (0.14, 0.14, 0.16),
    "warm": (0.8, 0.55, 0.35),
    "cold": (0.35, 0.55, 0.8),
    "saturated": (0.9, 0.2, 0.55),
    "faded": (0.68, 0.66, 0.64),
    "vivid": (0.9, 0.35, 0.2),
    "cinematic": (0.3, 0.42, 0.5),
    "aged": (0.68, 0.58, 0.42),
    "soft": (0.75, 0.72, 0.7),
    "muted": (0.5, 0.48, 0.46),
    "pastel": (0.85, 0.8, 0.85),
}


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n < 1e-12:
        raise ToneLutError("cannot normalize a (near-)zero vector")
    return v / n


def normalize_grad(v, upstream) -> np.ndarray:
    """VJP of v -> v/|v|."""
    v = np.asarray(v, dtype=np.float64)
    up = np.asarray(upstream, dtype=np.float64)
    n = np.linalg.norm(v)
    e = v / n
    return (up - np.dot(up, e) * e) / n


def embed_image_toy(image) -> np.ndarray:
    """Unit-norm color-statistics embedding of an image."""
    return normalize(extract_features(image))


def embed_image_toy_grad(image, upstream) -> np.ndarray:
    """Per-pixel gradient of embed_image_toy for an upstream vector."""
    f = extract_features(image)
    return extract_features_grad(image, normalize_grad(f, upstream))


def strip_suffix(text: str) -> str:
    return text[: -len(" photo")] if text.endswith(" photo") else text


def make_swatch(color, size: int = SWATCH_SIZE) -> np.ndarray:
    """Two-tone checker around the swatch color, so stds are nonzero."""
    c = np.asarray(color, dtype=np.float64)
    img = np.tile(c, (size, size, 1))
    checker = (np.add.outer(np.arange(size), np.arange(size)) % 2).astype(np.float64)
    img += SWATCH_CONTRAST * (2.0 * checker - 1.0)[:, :, None]
    return np.clip(img, 0.0, 1.0)


@dataclass(frozen=True)
class ToyEmbeddingProvider:
    """Differentiable desk-scale embedder over a color-word lexicon."""

    lexicon: dict = field(default_factory=lambda: dict(DEFAULT_LEXICON))
    dim: int = FEATURE_DIM
    supports_training: bool = True

    def __post_init__(self):
        if not self.lexicon:
            raise ToneLutError("toy lexicon must be nonempty")
        if "normal" not in self.lexicon:
            raise ToneLutError('toy lexicon must contain "normal"')

    def texts(self):
        return sorted(f"{token} photo" for token in self.lexicon)

    def embed_text(self, text: str) -> np.ndarray:
        token = strip_suffix(text)
        if token not in self.lexicon:
            raise UnknownTextError(text, self.texts())
        return embed_image_toy(make_swatch(self.lexicon[token]))

    def embed_image(self, image) -> np.ndarray:
        return embed_image_toy(image)


@dataclass(frozen=True)
class FileEmbeddingProvider:
    """Read-only store of precomputed embeddings; inference/eval only."""

    store: dict
    dim: int
    supports_training: bool = False

    def __post_init__(self):
        for key, vec in self.store.items():
            v = np.asarray(vec, dtype=np.float64)
            if v.shape != (self.dim,):
                raise DimensionError(
                    f"stored vector {key!r} has dim {v.shape}, expected ({self.dim},)"
                )

    def texts(self):
        return sorted(self.store)

    def embed_text(self, text: str) -> np.ndarray:
        if text not in self.store:
            raise UnknownTextError(text, self.texts())
        return normalize(self.store[text])


def relative_similarity(e_image, e_target, e_anchor, temperature: float = 1.0) -> float:
    """Two-way softmax of cosine similarities: target vs neutral anchor."""
    ei = np.asarray(e_image, dtype=np.float64)
    et = np.asarray(e_target, dtype=np.float64)
    ea = np.asarray(e_anchor, dtype=np.float64)
    if not (ei.shape == et.shape == ea.shape):
        raise DimensionError("embedding dimensions must agree")
    a = float(np.dot(ei, et)) * temperature
    b = float(np.dot(ei, ea)) * temperature
    # numerically stable two-way softmax
    m = max(a, b)
    ea_, eb_ = np.exp(a - m), np.exp(b - m)
    return float(ea_ / (ea_ + eb_))
