"""Unsupervised training loop: sample a (text, image) pair, augment,
forward through the adaptive-LUT pipeline, backprop the full objective
into the adapter only, and take a bias-corrected Adam step.

Everything outside the adapter (backbone heads, basis LUTs, feature
extraction) is frozen.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .embed import ToyEmbeddingProvider, embed_image_toy, embed_image_toy_grad
from .errors import DimensionError, TrainingError
from .losses import LossReport, LossWeights, total_loss, total_loss_grads
from .luts import LUMA_WEIGHTS, default_bank, validate_image
from .network import (
    FEATURE_DIM,
    AdapterNetwork,
    BackboneParams,
    ModelBundle,
    ModulationConfig,
    backward,
    forward,
)

log = logging.getLogger(__name__)

DEFAULT_HIDDEN = 64


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    steps: int = 300
    batch_size: int = 1
    seed: int = 0
    crop_fraction: float = 0.9
    brightness_jitter_range: tuple = (0.8, 1.2)
    saturation_jitter_range: tuple = (0.8, 1.2)
    s: float = 1.0
    loss_weights: LossWeights = field(default_factory=LossWeights)
    checkpoint_every: int = 0  # 0 disables periodic checkpoints

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise TrainingError("learning rate must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise TrainingError("Adam betas must lie in [0, 1)")
        if not (0 < self.crop_fraction <= 1):
            raise TrainingError("crop fraction must lie in (0, 1]")
        for lo, hi in (self.brightness_jitter_range, self.saturation_jitter_range):
            if not (0 <= lo <= hi):
                raise TrainingError("jitter range must satisfy 0 <= lo <= hi")
        if self.steps < 0 or self.batch_size < 1:
            raise TrainingError("steps must be >= 0 and batch size >= 1")


@dataclass(frozen=True)
class CorpusSpec:
    """Training corpus: in-memory images plus text descriptions."""

    images: tuple
    texts: tuple

    def __post_init__(self):
        if not self.images or not self.texts:
            raise TrainingError("corpus needs at least one image and one text")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(
            self,
            "texts",
            tuple(t if t.endswith(" photo") else f"{t} photo" for t in self.texts),
        )


def init_adapter(
    seed: int,
    embed_dim: int = FEATURE_DIM,
    hidden_dim: int = DEFAULT_HIDDEN,
    out_dim: int = None,
    source_prompt: str = "normal photo",
) -> AdapterNetwork:
    """Adapter init: matrices ~ U(0, 0.01), biases zero."""
    if out_dim is None:
        raise DimensionError("out_dim (backbone scalar count) is required")
    rng = np.random.default_rng(seed)
    return AdapterNetwork(
        w1=rng.uniform(0.0, 0.01, size=(hidden_dim, embed_dim)),
        b1=np.zeros(hidden_dim),
        w2=rng.uniform(0.0, 0.01, size=(out_dim, hidden_dim)),
        b2=np.zeros(out_dim),
        source_prompt=source_prompt,
    )


def new_bundle(
    seed: int = 0,
    grid_size: int = 17,
    hidden_dim: int = DEFAULT_HIDDEN,
    provider: ToyEmbeddingProvider = None,
) -> ModelBundle:
    """Fresh bundle at the neutral operating point with a seeded adapter."""
    provider = provider or ToyEmbeddingProvider()
    bank = default_bank(grid_size)
    backbone = BackboneParams.neutral(provider.dim, len(bank), grid_size)
    adapter = init_adapter(
        seed, embed_dim=provider.dim, hidden_dim=hidden_dim, out_dim=backbone.param_count
    )
    return ModelBundle(backbone, bank, adapter, provider.embed_text(adapter.source_prompt))


def augment(image, rng: np.random.Generator, cfg: TrainConfig) -> np.ndarray:
    """Random crop, horizontal flip, brightness and saturation jitter."""
    img = validate_image(image)
    h, w = img.shape[:2]
    ch = max(1, int(round(h * cfg.crop_fraction)))
    cw = max(1, int(round(w * cfg.crop_fraction)))
    if ch > h or cw > w:
        raise DimensionError("crop target exceeds image size")
    top = int(rng.integers(0, h - ch + 1))
    left = int(rng.integers(0, w - cw + 1))
    img = img[top : top + ch, left : left + cw]
    if rng.random() < 0.5:
        img = img[:, ::-1]
    bright = rng.uniform(*cfg.brightness_jitter_range)
    img = img * bright
    sat = rng.uniform(*cfg.saturation_jitter_range)
    luma = (img @ LUMA_WEIGHTS)[:, :, None]
    img = luma + sat * (img - luma)
    return np.clip(img, 0.0, 1.0)


@dataclass(frozen=True)
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @staticmethod
    def for_adapter(adapter: AdapterNetwork) -> "AdamState":
        zeros = {
            "w1": np.zeros_like(adapter.w1),
            "b1": np.zeros_like(adapter.b1),
            "w2": np.zeros_like(adapter.w2),
            "b2": np.zeros_like(adapter.b2),
        }
        return AdamState({k: v.copy() for k, v in zeros.items()}, zeros, 0)


def adam_step(state: AdamState, adapter: AdapterNetwork, grads, cfg: TrainConfig):
    """One bias-corrected Adam update; returns (state', adapter')."""
    gdict = grads.as_dict() if hasattr(grads, "as_dict") else dict(grads)
    params = {"w1": adapter.w1, "b1": adapter.b1, "w2": adapter.w2, "b2": adapter.b2}
    if set(gdict) != set(params):
        raise DimensionError("gradient keys do not match adapter parameters")
    t = state.t + 1
    new_m, new_v, new_p = {}, {}, {}
    for key, g in gdict.items():
        g = np.asarray(g, dtype=np.float64)
        if g.shape != params[key].shape:
            raise DimensionError(f"gradient shape mismatch for {key}")
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient for {key} at step {t}")
        m = cfg.beta1 * state.m[key] + (1 - cfg.beta1) * g
        v = cfg.beta2 * state.v[key] + (1 - cfg.beta2) * g * g
        m_hat = m / (1 - cfg.beta1 ** t)
        v_hat = v / (1 - cfg.beta2 ** t)
        new_m[key], new_v[key] = m, v
        new_p[key] = params[key] - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_epsilon)
    adapter = AdapterNetwork(
        new_p["w1"], new_p["b1"], new_p["w2"], new_p["b2"], adapter.source_prompt
    )
    return AdamState(new_m, new_v, t), adapter


def train_step(
    bundle: ModelBundle,
    provider: ToyEmbeddingProvider,
    image,
    text: str,
    cfg: TrainConfig,
):
    """Loss report and adapter gradients for one (image, text) sample."""
    e_target = provider.embed_text(text)
    mod_cfg = ModulationConfig(cfg.s)
    result = forward(bundle, image, e_target, mod_cfg)

    e_in = embed_image_toy(image)
    e_out = embed_image_toy(result.output)
    d_text = e_target - bundle.source_embedding
    d_image = e_out - e_in

    lw = cfg.loss_weights
    report = total_loss(
        image, result.output, d_image, d_text, result.weights, bundle.bank, result.coords, lw
    )
    grads = total_loss_grads(
        image, result.output, d_image, d_text, result.weights, bundle.bank, result.coords, lw
    )
    d_adjusted = grads.d_adjusted + embed_image_toy_grad(result.output, grads.d_image_direction)
    adapter_grads = backward(
        bundle, image, mod_cfg, result, d_adjusted, grads.d_weights, grads.d_coords
    )
    return report, adapter_grads


def train_loop(
    corpus: CorpusSpec,
    cfg: TrainConfig,
    bundle: ModelBundle,
    provider: ToyEmbeddingProvider = None,
    rng: np.random.Generator = None,
    optimizer: AdamState = None,
    checkpoint_callback=None,
):
    """Run cfg.steps updates; returns (bundle', optimizer', rng, history)."""
    provider = provider or ToyEmbeddingProvider()
    if not provider.supports_training:
        raise TrainingError("training requires a differentiable (toy) provider")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    state = optimizer or AdamState.for_adapter(bundle.adapter)
    history = []

    for step in range(1, cfg.steps + 1):
        reports = []
        acc = None
        for _ in range(cfg.batch_size):
            text = corpus.texts[rng.integers(0, len(corpus.texts))]
            image = corpus.images[rng.integers(0, len(corpus.images))]
            image = augment(image, rng, cfg)
            report, grads = train_step(bundle, provider, image, text, cfg)
            reports.append(report)
            gd = grads.as_dict()
            acc = gd if acc is None else {k: acc[k] + gd[k] for k in acc}
        mean = {
            k: float(np.mean([getattr(r, k) for r in reports]))
            for k in ("total", "content", "clip_directional", "weight_l2", "interval")
        }
        if not np.isfinite(mean["total"]):
            raise TrainingError(f"non-finite loss at step {step}: {mean}")
        history.append(LossReport(**mean))
        acc = {k: v / cfg.batch_size for k, v in acc.items()}
        state, adapter = adam_step(state, bundle.adapter, acc, cfg)
        bundle = bundle.with_adapter(adapter)
        log.info(
            "step=%d total=%.6f content=%.6f clip=%.6f weight=%.6f interval=%.6f",
            step,
            mean["total"],
            mean["content"],
            mean["clip_directional"],
            mean["weight_l2"],
            mean["interval"],
        )
        if checkpoint_callback and cfg.checkpoint_every and step % cfg.checkpoint_every == 0:
            checkpoint_callback(step, bundle, state, rng)

    return bundle, state, rng, history
