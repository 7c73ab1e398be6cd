"""Backbone (feature stats -> LUT weights + sampling coords) and the
text adapter hyper-network with multiplicative parameter modulation.

The backbone replaces a pretrained CNN with deterministic differentiable
color statistics: per-channel mean, population std, and an 8-bin soft
(triangular-kernel) histogram, 30 features total. Two affine heads map
the features to LUT weights and to per-channel interval logits; interval
logits go through a softmax + prefix sum, which makes the sampling
coordinates monotone with exact endpoints by construction.

The adapter is a two-layer ReLU MLP on the embedding direction
(target - source). Its output modulates the two heads elementwise:

    theta_hat = theta * (1 + s * delta_theta)

under a fixed flattening order: weight-predictor matrix (row-major),
its bias, coordinate-head matrix (row-major), its bias.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import DimensionError
from .luts import (
    BasisLutBank,
    Lut3D,
    SamplingCoordinates,
    fuse,
    lookup,
    lookup_grad,
    validate_image,
)

HIST_BINS = 8
FEATURE_DIM = 3 + 3 + 3 * HIST_BINS  # means, stds, soft histograms


def extract_features(image) -> np.ndarray:
    """30-dim color statistics vector; differentiable w.r.t. pixels."""
    img = validate_image(image)
    flat = img.reshape(-1, 3)
    means = flat.mean(axis=0)
    stds = flat.std(axis=0)
    centers = np.arange(HIST_BINS) / (HIST_BINS - 1)
    # Triangular kernels with bandwidth 1/7 partition unity on [0, 1].
    weights = np.clip(1.0 - (HIST_BINS - 1) * np.abs(flat[:, :, None] - centers), 0.0, None)
    hists = weights.mean(axis=0)  # (3, 8), each row sums to 1
    return np.concatenate([means, stds, hists.reshape(-1)])


def extract_features_grad(image, upstream) -> np.ndarray:
    """Backprop an upstream feature gradient to per-pixel gradients."""
    img = validate_image(image)
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != (FEATURE_DIM,):
        raise DimensionError(f"upstream must be ({FEATURE_DIM},), got {up.shape}")
    flat = img.reshape(-1, 3)
    p = len(flat)
    means = flat.mean(axis=0)
    stds = flat.std(axis=0)

    d_flat = np.tile(up[0:3] / p, (p, 1))
    # d std / d v = (v - mean) / (P * std); zero for a constant channel.
    safe = np.where(stds > 0.0, stds, 1.0)
    d_flat += up[3:6] * np.where(stds > 0.0, (flat - means) / (p * safe), 0.0)

    centers = np.arange(HIST_BINS) / (HIST_BINS - 1)
    diff = flat[:, :, None] - centers  # (P, 3, 8)
    inside = np.abs(diff) * (HIST_BINS - 1) < 1.0
    slope = np.where(inside, -np.sign(diff) * (HIST_BINS - 1) / p, 0.0)
    d_flat += np.einsum("pcb,cb->pc", slope, up[6:].reshape(3, HIST_BINS))
    return d_flat.reshape(img.shape)


@dataclass(frozen=True)
class BackboneParams:
    """Affine heads: features -> LUT weights, features -> interval logits."""

    weight_matrix: np.ndarray  # (L, F)
    weight_bias: np.ndarray  # (L,)
    coord_matrix: np.ndarray  # (3*(N-1), F)
    coord_bias: np.ndarray  # (3*(N-1),)

    def __post_init__(self):
        wm = np.asarray(self.weight_matrix, dtype=np.float64)
        wb = np.asarray(self.weight_bias, dtype=np.float64)
        cm = np.asarray(self.coord_matrix, dtype=np.float64)
        cb = np.asarray(self.coord_bias, dtype=np.float64)
        if wm.ndim != 2 or wb.shape != (wm.shape[0],):
            raise DimensionError("weight head shapes inconsistent")
        if cm.ndim != 2 or cb.shape != (cm.shape[0],):
            raise DimensionError("coord head shapes inconsistent")
        if cm.shape[1] != wm.shape[1]:
            raise DimensionError("heads disagree on feature dimension")
        if cm.shape[0] % 3 != 0:
            raise DimensionError("coord head rows must be divisible by 3")
        for a in (wm, wb, cm, cb):
            if not np.all(np.isfinite(a)):
                raise DimensionError("backbone parameters must be finite")
        object.__setattr__(self, "weight_matrix", wm)
        object.__setattr__(self, "weight_bias", wb)
        object.__setattr__(self, "coord_matrix", cm)
        object.__setattr__(self, "coord_bias", cb)

    @property
    def n_weights(self) -> int:
        return self.weight_matrix.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weight_matrix.shape[1]

    @property
    def grid_size(self) -> int:
        return self.coord_matrix.shape[0] // 3 + 1

    @property
    def param_count(self) -> int:
        return (
            self.weight_matrix.size
            + self.weight_bias.size
            + self.coord_matrix.size
            + self.coord_bias.size
        )

    def flatten(self) -> np.ndarray:
        return np.concatenate(
            [
                self.weight_matrix.reshape(-1),
                self.weight_bias,
                self.coord_matrix.reshape(-1),
                self.coord_bias,
            ]
        )

    def unflatten(self, flat) -> "BackboneParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.param_count,):
            raise DimensionError(
                f"expected {self.param_count} scalars, got shape {flat.shape}"
            )
        sizes = [
            self.weight_matrix.size,
            self.weight_bias.size,
            self.coord_matrix.size,
            self.coord_bias.size,
        ]
        parts = np.split(flat, np.cumsum(sizes)[:-1])
        return BackboneParams(
            parts[0].reshape(self.weight_matrix.shape),
            parts[1],
            parts[2].reshape(self.coord_matrix.shape),
            parts[3],
        )

    @staticmethod
    def neutral(feature_dim: int, n_weights: int, grid_size: int) -> "BackboneParams":
        """Neutral operating point: weights (1, 0, ..), uniform coords."""
        bias = np.zeros(n_weights)
        bias[0] = 1.0
        return BackboneParams(
            np.zeros((n_weights, feature_dim)),
            bias,
            np.zeros((3 * (grid_size - 1), feature_dim)),
            np.zeros(3 * (grid_size - 1)),
        )


@dataclass(frozen=True)
class AdapterNetwork:
    """Two-layer ReLU MLP: embedding direction -> modulation offsets."""

    w1: np.ndarray  # (H, D)
    b1: np.ndarray  # (H,)
    w2: np.ndarray  # (P, H)
    b2: np.ndarray  # (P,)
    source_prompt: str = "normal photo"

    def __post_init__(self):
        w1 = np.asarray(self.w1, dtype=np.float64)
        b1 = np.asarray(self.b1, dtype=np.float64)
        w2 = np.asarray(self.w2, dtype=np.float64)
        b2 = np.asarray(self.b2, dtype=np.float64)
        if w1.ndim != 2 or b1.shape != (w1.shape[0],):
            raise DimensionError("adapter layer 1 shapes inconsistent")
        if w2.ndim != 2 or w2.shape[1] != w1.shape[0] or b2.shape != (w2.shape[0],):
            raise DimensionError("adapter layer 2 shapes inconsistent")
        for a in (w1, b1, w2, b2):
            if not np.all(np.isfinite(a)):
                raise DimensionError("adapter parameters must be finite")
        object.__setattr__(self, "w1", w1)
        object.__setattr__(self, "b1", b1)
        object.__setattr__(self, "w2", w2)
        object.__setattr__(self, "b2", b2)

    @property
    def embed_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def out_dim(self) -> int:
        return self.w2.shape[0]


@dataclass(frozen=True)
class AdapterGrads:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def as_dict(self):
        return {"w1": self.w1, "b1": self.b1, "w2": self.w2, "b2": self.b2}


@dataclass(frozen=True)
class ModulationConfig:
    s: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.s):
            raise DimensionError(f"scaling factor must be finite, got {self.s}")


def predict_weights(params: BackboneParams, features) -> np.ndarray:
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (params.feature_dim,):
        raise DimensionError(
            f"features must be ({params.feature_dim},), got {f.shape}"
        )
    return params.weight_matrix @ f + params.weight_bias


def predict_coords(params: BackboneParams, features) -> SamplingCoordinates:
    """Interval logits -> softmax -> prefix sum; monotone by construction."""
    f = np.asarray(features, dtype=np.float64)
    if f.shape != (params.feature_dim,):
        raise DimensionError(
            f"features must be ({params.feature_dim},), got {f.shape}"
        )
    n = params.grid_size
    logits = (params.coord_matrix @ f + params.coord_bias).reshape(3, n - 1)
    intervals = _intervals_from_logits(logits)
    x = np.zeros((3, n))
    x[:, 1:] = np.cumsum(intervals, axis=1)
    x[:, -1] = 1.0
    return SamplingCoordinates(x)


INTERVAL_FLOOR = 1e-14


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _intervals_from_logits(z: np.ndarray) -> np.ndarray:
    """Softmax rows with a tiny floor so coords stay strictly increasing
    even for extreme logits (floating-point underflow guard)."""
    sm = _softmax_rows(z)
    return (sm + INTERVAL_FLOOR) / (1.0 + sm.shape[1] * INTERVAL_FLOOR)


def adapter_forward(adapter: AdapterNetwork, e_target, e_source) -> np.ndarray:
    """Modulation offsets for the direction e_target - e_source."""
    et = np.asarray(e_target, dtype=np.float64)
    es = np.asarray(e_source, dtype=np.float64)
    if et.shape != (adapter.embed_dim,) or es.shape != (adapter.embed_dim,):
        raise DimensionError(
            f"embeddings must be ({adapter.embed_dim},), got {et.shape}/{es.shape}"
        )
    hidden = np.maximum(adapter.w1 @ (et - es) + adapter.b1, 0.0)
    return adapter.w2 @ hidden + adapter.b2


def modulate(params: BackboneParams, delta, cfg: ModulationConfig) -> BackboneParams:
    """Elementwise theta * (1 + s * delta) under the fixed flattening."""
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (params.param_count,):
        raise DimensionError(
            f"expected {params.param_count} offsets, got shape {delta.shape}"
        )
    if cfg.s == 0.0:
        return params
    return params.unflatten(params.flatten() * (1.0 + cfg.s * delta))


@dataclass(frozen=True)
class ModelBundle:
    """Immutable inference/training snapshot."""

    backbone: BackboneParams
    bank: BasisLutBank
    adapter: AdapterNetwork
    source_embedding: np.ndarray  # embedding of adapter.source_prompt

    def __post_init__(self):
        e = np.asarray(self.source_embedding, dtype=np.float64)
        if e.shape != (self.adapter.embed_dim,):
            raise DimensionError("source embedding dimension mismatch")
        if self.adapter.out_dim != self.backbone.param_count:
            raise DimensionError("adapter output does not match backbone layout")
        if self.backbone.n_weights != len(self.bank):
            raise DimensionError("weight head size does not match bank")
        if self.backbone.grid_size != self.bank.size:
            raise DimensionError("coord head size does not match bank grid")
        object.__setattr__(self, "source_embedding", e)

    def with_adapter(self, adapter: AdapterNetwork) -> "ModelBundle":
        return replace(self, adapter=adapter)


@dataclass(frozen=True)
class ForwardResult:
    output: np.ndarray  # adjusted image, clamped
    weights: np.ndarray
    coords: SamplingCoordinates
    fused: Lut3D
    # cached intermediates for backward
    features: np.ndarray
    direction: np.ndarray
    hidden_pre: np.ndarray
    delta: np.ndarray
    modulated: BackboneParams
    intervals: np.ndarray  # (3, N-1) softmax outputs


def forward(bundle: ModelBundle, image, e_target, cfg: ModulationConfig) -> ForwardResult:
    """Full pipeline: stats -> adapter -> modulated heads -> fused LUT -> lookup."""
    img = validate_image(image)
    f = extract_features(img)
    direction = np.asarray(e_target, dtype=np.float64) - bundle.source_embedding
    if direction.shape != (bundle.adapter.embed_dim,):
        raise DimensionError("target embedding dimension mismatch")
    hidden_pre = bundle.adapter.w1 @ direction + bundle.adapter.b1
    delta = bundle.adapter.w2 @ np.maximum(hidden_pre, 0.0) + bundle.adapter.b2
    mod = modulate(bundle.backbone, delta, cfg)
    w = predict_weights(mod, f)
    coords = predict_coords(mod, f)
    n = mod.grid_size
    intervals = _intervals_from_logits((mod.coord_matrix @ f + mod.coord_bias).reshape(3, n - 1))
    fused = fuse(bundle.bank, w)
    out = lookup(fused, coords, img)
    return ForwardResult(out, w, coords, fused, f, direction, hidden_pre, delta, mod, intervals)


def backward(
    bundle: ModelBundle,
    image,
    cfg: ModulationConfig,
    result: ForwardResult,
    d_output,
    d_weights=None,
    d_coords=None,
) -> AdapterGrads:
    """Accumulate gradients into the adapter parameters only.

    d_output is the upstream gradient on the clamped output image;
    d_weights / d_coords inject direct gradients on the predicted LUT
    weights and sampling coordinates (used by the regularizers).
    """
    img = validate_image(image)
    d_lut, d_x, _ = lookup_grad(result.fused, result.coords, img, d_output)

    dw = np.tensordot(bundle.bank.stacked(), d_lut, axes=4)
    if d_weights is not None:
        dw = dw + np.asarray(d_weights, dtype=np.float64)
    if d_coords is not None:
        d_x = d_x + np.asarray(d_coords, dtype=np.float64)

    # coords -> interval logits: x_i = sum_{j<i} d_j, then softmax rows.
    # dL/dd_j = sum_{i >= j+1} dL/dx_i (reverse cumulative sum).
    dd = np.cumsum(d_x[:, :0:-1], axis=1)[:, ::-1]
    sm = result.intervals
    dz = sm * (dd - np.sum(dd * sm, axis=1, keepdims=True))

    # Heads are affine in the (frozen) features.
    f = result.features
    d_mod = BackboneParams(
        np.outer(dw, f),
        dw,
        np.outer(dz.reshape(-1), f),
        dz.reshape(-1),
    )
    # theta_hat = theta * (1 + s*delta)  =>  d delta = d theta_hat * theta * s
    d_delta = d_mod.flatten() * bundle.backbone.flatten() * cfg.s

    hidden = np.maximum(result.hidden_pre, 0.0)
    d_hidden = bundle.adapter.w2.T @ d_delta
    d_pre = d_hidden * (result.hidden_pre > 0.0)
    return AdapterGrads(
        w1=np.outer(d_pre, result.direction),
        b1=d_pre,
        w2=np.outer(d_delta, hidden),
        b2=d_delta,
    )


def forward_grad(bundle: ModelBundle, image, e_target, cfg: ModulationConfig, upstream):
    """Forward pass plus adapter-parameter gradients for an upstream on the output."""
    result = forward(bundle, image, e_target, cfg)
    grads = backward(bundle, image, cfg, result, upstream)
    return result, grads
