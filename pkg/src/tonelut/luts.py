"""Differentiable 3D LUTs: fusion, non-uniform trilinear lookup, builders.

Conventions used throughout:
  - a LUT stores values[i, j, k, c] where axis i follows the red input,
    j the green input, k the blue input, and c is the output channel;
  - sampling coordinates are per-channel knot vectors x_c(i) with
    x_c(0) = 0, x_c(N-1) = 1, strictly increasing;
  - an input value sitting exactly on a knot belongs to the lower cell
    (offset t = 0), except the upper domain endpoint which belongs to
    the last cell with t = 1;
  - lookup output is clamped to [0, 1]; the clamp backpropagates zero
    where the pre-clamp value left [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InvalidCoordinatesError

# Rec.601 luma coefficients, shared by the saturation builder, the
# augmentation pipeline and grayscale SSIM.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])


def validate_image(image) -> np.ndarray:
    """Check an (H, W, 3) float array with components in [0, 1]."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DimensionError(f"image must be (H, W, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"image dimensions must be positive, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DimensionError("image contains non-finite components")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DimensionError("image components must lie in [0, 1]")
    return arr


@dataclass(frozen=True)
class Lut3D:
    """Cubic grid of output RGB triples; values[i, j, k, c]."""

    size: int
    values: np.ndarray

    def __post_init__(self):
        if self.size < 2:
            raise DimensionError(f"LUT size must be >= 2, got {self.size}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != (self.size,) * 3 + (3,):
            raise DimensionError(
                f"LUT values must be {(self.size,) * 3 + (3,)}, got {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise DimensionError("LUT values must be finite")
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class BasisLutBank:
    """Ordered bank of basis LUTs sharing one grid size."""

    luts: tuple

    def __post_init__(self):
        luts = tuple(self.luts)
        if not luts:
            raise DimensionError("basis bank must contain at least one LUT")
        n = luts[0].size
        if any(l.size != n for l in luts):
            raise DimensionError("all basis LUTs must share one grid size")
        object.__setattr__(self, "luts", luts)

    def __len__(self):
        return len(self.luts)

    @property
    def size(self) -> int:
        return self.luts[0].size

    def stacked(self) -> np.ndarray:
        """(L, N, N, N, 3) view of the bank."""
        return np.stack([l.values for l in self.luts])


@dataclass(frozen=True)
class SamplingCoordinates:
    """Per-channel monotone knot vectors, shape (3, N); rows r, g, b."""

    x: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != 3 or x.shape[1] < 2:
            raise DimensionError(f"coords must be (3, N>=2), got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise InvalidCoordinatesError("coords must be finite")
        if np.any(x[:, 0] != 0.0) or np.any(x[:, -1] != 1.0):
            raise InvalidCoordinatesError("coords must start at 0 and end at 1")
        if np.any(np.diff(x, axis=1) <= 0.0):
            raise InvalidCoordinatesError("coords must be strictly increasing")
        object.__setattr__(self, "x", x)

    @property
    def size(self) -> int:
        return self.x.shape[1]

    @staticmethod
    def uniform(n: int) -> "SamplingCoordinates":
        row = np.linspace(0.0, 1.0, n)
        row[-1] = 1.0
        return SamplingCoordinates(np.tile(row, (3, 1)))


def fuse(bank: BasisLutBank, w) -> Lut3D:
    """Linear combination of the basis LUTs with weights w."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (len(bank),):
        raise DimensionError(f"expected {len(bank)} weights, got shape {w.shape}")
    vals = np.tensordot(w, bank.stacked(), axes=1)
    return Lut3D(bank.size, vals)


def _locate(xs: np.ndarray, v: np.ndarray):
    """Cell index and offset for values v against knots xs.

    Knot hits map to the lower cell (t = 0); v = 1 maps to the last
    cell with t = 1.
    """
    idx = np.searchsorted(xs, v, side="right") - 1
    idx = np.clip(idx, 0, len(xs) - 2)
    gap = xs[idx + 1] - xs[idx]
    t = (v - xs[idx]) / gap
    return idx, t, gap


def _lookup_raw(lut: Lut3D, coords: SamplingCoordinates, colors: np.ndarray):
    """Unclamped trilinear lookup of (P, 3) colors; returns internals."""
    idx = np.empty((3, len(colors)), dtype=np.intp)
    t = np.empty((3, len(colors)))
    gap = np.empty((3, len(colors)))
    for c in range(3):
        idx[c], t[c], gap[c] = _locate(coords.x[c], colors[:, c])

    v = lut.values
    tr, tg, tb = t
    out = np.zeros_like(colors)
    for di in (0, 1):
        wr = tr if di else 1.0 - tr
        for dj in (0, 1):
            wg = tg if dj else 1.0 - tg
            for dk in (0, 1):
                wb = tb if dk else 1.0 - tb
                corner = v[idx[0] + di, idx[1] + dj, idx[2] + dk]
                out += (wr * wg * wb)[:, None] * corner
    return out, idx, t, gap


def apply_lut(lut: Lut3D, coords: SamplingCoordinates, colors, clamp=True) -> np.ndarray:
    """Trilinear lookup of a flat (P, 3) color array."""
    if coords.size != lut.size:
        raise DimensionError(
            f"coords size {coords.size} does not match LUT size {lut.size}"
        )
    colors = np.asarray(colors, dtype=np.float64)
    if colors.ndim != 2 or colors.shape[1] != 3:
        raise DimensionError(f"colors must be (P, 3), got {colors.shape}")
    out, _, _, _ = _lookup_raw(lut, coords, colors)
    return np.clip(out, 0.0, 1.0) if clamp else out


def lookup(lut: Lut3D, coords: SamplingCoordinates, image, clamp=True) -> np.ndarray:
    """Apply (lut, coords) to an image; output clamped to [0, 1]."""
    img = validate_image(image)
    flat = apply_lut(lut, coords, img.reshape(-1, 3), clamp=clamp)
    return flat.reshape(img.shape)


def lookup_grad(lut: Lut3D, coords: SamplingCoordinates, image, upstream):
    """Reverse-mode gradients of clamped lookup.

    Returns (d_lut (N,N,N,3), d_coords (3,N), d_image (H,W,3)) for an
    upstream gradient on the clamped output.
    """
    img = validate_image(image)
    if coords.size != lut.size:
        raise DimensionError(
            f"coords size {coords.size} does not match LUT size {lut.size}"
        )
    up = np.asarray(upstream, dtype=np.float64)
    if up.shape != img.shape:
        raise DimensionError(f"upstream shape {up.shape} != image shape {img.shape}")

    colors = img.reshape(-1, 3)
    out, idx, t, gap = _lookup_raw(lut, coords, colors)
    up = up.reshape(-1, 3) * ((out >= 0.0) & (out <= 1.0))

    v = lut.values
    n = lut.size
    d_lut = np.zeros_like(v)
    # d out / d t per axis: blend difference across that axis.
    d_t = np.zeros((3, len(colors), 3))  # (axis, pixel, out channel)
    tr, tg, tb = t
    w_ax = [(1.0 - tr, tr), (1.0 - tg, tg), (1.0 - tb, tb)]
    flat = v.reshape(-1, 3)
    for di in (0, 1):
        for dj in (0, 1):
            for dk in (0, 1):
                wprod = w_ax[0][di] * w_ax[1][dj] * w_ax[2][dk]
                lin = ((idx[0] + di) * n + (idx[1] + dj)) * n + (idx[2] + dk)
                np.add.at(d_lut.reshape(-1, 3), lin, wprod[:, None] * up)
                corner = flat[lin]
                sign_r = 1.0 if di else -1.0
                sign_g = 1.0 if dj else -1.0
                sign_b = 1.0 if dk else -1.0
                d_t[0] += (sign_r * w_ax[1][dj] * w_ax[2][dk])[:, None] * corner
                d_t[1] += (sign_g * w_ax[0][di] * w_ax[2][dk])[:, None] * corner
                d_t[2] += (sign_b * w_ax[0][di] * w_ax[1][dj])[:, None] * corner

    # Chain upstream into t, then t into knots and input components.
    d_coords = np.zeros((3, n))
    d_image = np.empty_like(colors)
    for ax in range(3):
        g_t = np.sum(d_t[ax] * up, axis=1)  # dL/dt_ax per pixel
        d_image[:, ax] = g_t / gap[ax]
        # t = (v - x_i) / (x_{i+1} - x_i)
        np.add.at(d_coords[ax], idx[ax], g_t * (t[ax] - 1.0) / gap[ax])
        np.add.at(d_coords[ax], idx[ax] + 1, g_t * (-t[ax]) / gap[ax])

    return d_lut, d_coords, d_image.reshape(img.shape)


def _grid(n: int) -> np.ndarray:
    """Identity grid entries, shape (N, N, N, 3): entry = (u_i, u_j, u_k)."""
    u = np.linspace(0.0, 1.0, n)
    r, g, b = np.meshgrid(u, u, u, indexing="ij")
    return np.stack([r, g, b], axis=-1)


def make_identity(n: int) -> Lut3D:
    """LUT mapping every grid color to itself."""
    return Lut3D(n, _grid(n))


def make_gamma(n: int, gamma: float) -> Lut3D:
    """Per-channel power curve v**gamma."""
    if not (np.isfinite(gamma) and gamma > 0):
        raise DimensionError(f"gamma must be finite and positive, got {gamma}")
    return Lut3D(n, _grid(n) ** gamma)


def make_contrast_scurve(n: int, k: float) -> Lut3D:
    """Logistic contrast curve centered at 0.5, rescaled to hit 0 and 1."""
    if not (np.isfinite(k) and k > 0):
        raise DimensionError(f"steepness must be finite and positive, got {k}")
    g = _grid(n)
    lo = 1.0 / (1.0 + np.exp(k / 2.0))
    hi = 1.0 / (1.0 + np.exp(-k / 2.0))
    return Lut3D(n, (1.0 / (1.0 + np.exp(-k * (g - 0.5))) - lo) / (hi - lo))


def make_saturation(n: int, s_sat: float) -> Lut3D:
    """Move each entry toward (s<1) or away from (s>1) its Rec.601 luma."""
    if not np.isfinite(s_sat):
        raise DimensionError(f"saturation factor must be finite, got {s_sat}")
    g = _grid(n)
    luma = g @ LUMA_WEIGHTS
    vals = luma[..., None] + s_sat * (g - luma[..., None])
    return Lut3D(n, np.clip(vals, 0.0, 1.0))


def default_bank(n: int = 17) -> BasisLutBank:
    """Analytic stand-in bank: identity, gamma 0.7, contrast s-curve k=6."""
    return BasisLutBank(
        (make_identity(n), make_gamma(n, 0.7), make_contrast_scurve(n, 6.0))
    )
