"""Serialization: images (PNG / ASCII PPM), `.cube` LUT interchange,
the embedding store (JSONL) and full-precision checkpoints.

Checkpoints are JSON with Python's shortest-round-trip float repr, so a
save -> load -> save cycle is byte-identical and training can resume on
the exact trajectory (RNG state included).
"""

from __future__ import annotations

import json

import numpy as np
from PIL import Image

from .embed import FileEmbeddingProvider
from .errors import DimensionError, FormatError
from .luts import BasisLutBank, Lut3D, SamplingCoordinates, apply_lut, validate_image
from .network import AdapterNetwork, BackboneParams, ModelBundle
from .train import AdamState

CHECKPOINT_VERSION = "tonelut-checkpoint-1"


# --- .cube ---------------------------------------------------------------

def write_cube(lut: Lut3D, coords: SamplingCoordinates, path, title: str = None):
    """Write a uniform-grid .cube file, red index varying fastest.

    Non-uniform coords are rebaked: the written table samples the
    (lut, coords) transform at uniform inputs.
    """
    n = lut.size
    if coords.size != n:
        raise DimensionError("coords size does not match LUT size")
    u = np.linspace(0.0, 1.0, n)
    rr, gg, bb = np.meshgrid(u, u, u, indexing="ij")
    # .cube rows run red-fastest; our grid axes are (r, g, b).
    grid = np.stack(
        [rr.transpose(2, 1, 0).reshape(-1), gg.transpose(2, 1, 0).reshape(-1), bb.transpose(2, 1, 0).reshape(-1)],
        axis=1,
    )
    baked = apply_lut(lut, coords, grid)
    lines = []
    if title:
        lines.append(f'TITLE "{title}"')
    lines.append(f"LUT_3D_SIZE {n}")
    lines.append("DOMAIN_MIN 0 0 0")
    lines.append("DOMAIN_MAX 1 1 1")
    for row in baked:
        lines.append(f"{row[0]:.6f} {row[1]:.6f} {row[2]:.6f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_cube(path):
    """Parse a .cube file; returns (Lut3D, uniform SamplingCoordinates)."""
    n = None
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("TITLE"):
                continue
            if line.startswith("LUT_3D_SIZE"):
                try:
                    n = int(line.split()[1])
                except (IndexError, ValueError):
                    raise FormatError("malformed LUT_3D_SIZE", line=lineno)
                if n < 2:
                    raise FormatError(f"LUT size must be >= 2, got {n}", line=lineno)
                continue
            if line.startswith("DOMAIN_MIN") or line.startswith("DOMAIN_MAX"):
                continue
            if line.startswith("LUT_1D_SIZE"):
                raise FormatError("1D LUTs are not supported", line=lineno)
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"expected 3 values, got {len(parts)}", line=lineno)
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                raise FormatError(f"non-numeric row {line!r}", line=lineno)
    if n is None:
        raise FormatError("missing LUT_3D_SIZE header")
    if len(rows) != n ** 3:
        raise FormatError(f"expected {n ** 3} rows for size {n}, got {len(rows)}")
    # rows are red-fastest: row index = r + g*N + b*N^2
    vals = np.asarray(rows).reshape(n, n, n, 3).transpose(2, 1, 0, 3)
    return Lut3D(n, vals), SamplingCoordinates.uniform(n)


# --- embedding store -------------------------------------------------------

def write_embedding_store(provider_or_store, path, model: str = None):
    """Write a JSONL embedding store; one record per key."""
    store = (
        provider_or_store.store
        if isinstance(provider_or_store, FileEmbeddingProvider)
        else dict(provider_or_store)
    )
    dims = {len(np.asarray(v).reshape(-1)) for v in store.values()}
    if len(dims) > 1:
        raise FormatError(f"inconsistent vector dims: {sorted(dims)}")
    dim = dims.pop() if dims else 0
    with open(path, "w") as fh:
        header = {"model": model or "unknown", "dim": dim}
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for key in sorted(store):
            vec = [float(x) for x in np.asarray(store[key]).reshape(-1)]
            rec = {"key": key, "dim": len(vec), "values": vec}
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_embedding_store(path) -> FileEmbeddingProvider:
    """Load a JSONL embedding store into a file-backed provider."""
    store = {}
    dim = None
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON: {exc.msg}", line=lineno)
            if "key" not in rec:
                if "dim" in rec:  # header record
                    dim = int(rec["dim"]) if dim is None else dim
                    continue
                raise FormatError("record missing 'key'", line=lineno)
            if "values" not in rec or "dim" not in rec:
                raise FormatError("record missing 'dim'/'values'", line=lineno)
            vec = np.asarray(rec["values"], dtype=np.float64)
            if vec.ndim != 1 or len(vec) != int(rec["dim"]):
                raise FormatError(
                    f"vector length {vec.size} != declared dim {rec['dim']}", line=lineno
                )
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise FormatError(
                    f"dim {len(vec)} inconsistent with store dim {dim}", line=lineno
                )
            if rec["key"] in store:
                raise FormatError(f"duplicate key {rec['key']!r}", line=lineno)
            store[rec["key"]] = vec
    return FileEmbeddingProvider(store=store, dim=dim or 0)


# --- checkpoints -----------------------------------------------------------

def _arr(a) -> list:
    return np.asarray(a, dtype=np.float64).reshape(-1).tolist()


def _json_default(obj):
    raise TypeError(f"not JSON serializable: {type(obj)}")


def save_checkpoint(bundle: ModelBundle, path, optimizer: AdamState = None, rng=None, config=None):
    """Full-precision JSON checkpoint; deterministic byte layout."""
    backbone = bundle.backbone
    doc = {
        "version": CHECKPOINT_VERSION,
        "config": config or {},
        "backbone": {
            "n_weights": backbone.n_weights,
            "feature_dim": backbone.feature_dim,
            "grid_size": backbone.grid_size,
            "weight_matrix": _arr(backbone.weight_matrix),
            "weight_bias": _arr(backbone.weight_bias),
            "coord_matrix": _arr(backbone.coord_matrix),
            "coord_bias": _arr(backbone.coord_bias),
        },
        "bank": {
            "size": bundle.bank.size,
            "luts": [_arr(l.values) for l in bundle.bank.luts],
        },
        "adapter": {
            "hidden_dim": bundle.adapter.hidden_dim,
            "embed_dim": bundle.adapter.embed_dim,
            "out_dim": bundle.adapter.out_dim,
            "source_prompt": bundle.adapter.source_prompt,
            "w1": _arr(bundle.adapter.w1),
            "b1": _arr(bundle.adapter.b1),
            "w2": _arr(bundle.adapter.w2),
            "b2": _arr(bundle.adapter.b2),
        },
        "source_embedding": _arr(bundle.source_embedding),
    }
    if optimizer is not None:
        doc["optimizer"] = {
            "t": optimizer.t,
            "m": {k: _arr(v) for k, v in sorted(optimizer.m.items())},
            "v": {k: _arr(v) for k, v in sorted(optimizer.v.items())},
        }
    if rng is not None:
        doc["rng_state"] = _rng_state_to_json(rng)
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, sort_keys=True, separators=(",", ":"), default=_json_default))
        fh.write("\n")


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    st = rng.bit_generator.state
    return json.loads(json.dumps(st, default=str))


def load_checkpoint(path):
    """Returns (bundle, optimizer or None, rng or None, config dict)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid checkpoint JSON: {exc.msg}")
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise FormatError(
            f"incompatible checkpoint version {version!r}, expected {CHECKPOINT_VERSION!r}"
        )
    bb = doc["backbone"]
    l, f, n = bb["n_weights"], bb["feature_dim"], bb["grid_size"]
    backbone = BackboneParams(
        np.asarray(bb["weight_matrix"]).reshape(l, f),
        np.asarray(bb["weight_bias"]),
        np.asarray(bb["coord_matrix"]).reshape(3 * (n - 1), f),
        np.asarray(bb["coord_bias"]),
    )
    bank = BasisLutBank(
        tuple(
            Lut3D(doc["bank"]["size"], np.asarray(v).reshape(n, n, n, 3))
            for v in doc["bank"]["luts"]
        )
    )
    ad = doc["adapter"]
    adapter = AdapterNetwork(
        np.asarray(ad["w1"]).reshape(ad["hidden_dim"], ad["embed_dim"]),
        np.asarray(ad["b1"]),
        np.asarray(ad["w2"]).reshape(ad["out_dim"], ad["hidden_dim"]),
        np.asarray(ad["b2"]),
        ad["source_prompt"],
    )
    bundle = ModelBundle(backbone, bank, adapter, np.asarray(doc["source_embedding"]))

    optimizer = None
    if "optimizer" in doc:
        opt = doc["optimizer"]
        shapes = {"w1": adapter.w1, "b1": adapter.b1, "w2": adapter.w2, "b2": adapter.b2}
        optimizer = AdamState(
            m={k: np.asarray(opt["m"][k]).reshape(shapes[k].shape) for k in shapes},
            v={k: np.asarray(opt["v"][k]).reshape(shapes[k].shape) for k in shapes},
            t=int(opt["t"]),
        )
    rng = None
    if "rng_state" in doc:
        rng = np.random.default_rng()
        rng.bit_generator.state = _rng_state_from_json(doc["rng_state"])
    return bundle, optimizer, rng, doc.get("config", {})


def _rng_state_from_json(state: dict) -> dict:
    def fix(obj):
        if isinstance(obj, dict):
            return {k: fix(v) for k, v in obj.items()}
        if isinstance(obj, str) and obj.isdigit():
            return int(obj)
        return obj

    return fix(state)


# --- images ----------------------------------------------------------------

def read_image(path) -> np.ndarray:
    """Load an 8-bit PNG (RGB/RGBA) or ASCII PPM (P3) as a [0,1] image."""
    with open(path, "rb") as fh:
        head = fh.read(2)
    if head == b"P3":
        return _read_ppm(path)
    try:
        img = Image.open(path)
    except Exception as exc:
        raise FormatError(f"cannot read image {path}: {exc}")
    if img.mode not in ("RGB", "RGBA", "L"):
        raise FormatError(f"unsupported image mode {img.mode}")
    arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return arr


def _read_ppm(path) -> np.ndarray:
    with open(path) as fh:
        tokens = []
        for raw in fh:
            line = raw.split("#", 1)[0]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P3":
        raise FormatError("not an ASCII PPM (P3) file", line=1)
    try:
        w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        vals = [int(t) for t in tokens[4:]]
    except (IndexError, ValueError):
        raise FormatError("malformed PPM header or sample data")
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    if len(vals) != w * h * 3:
        raise FormatError(f"expected {w * h * 3} samples, got {len(vals)}")
    arr = np.asarray(vals, dtype=np.float64).reshape(h, w, 3)
    if arr.min() < 0 or arr.max() > 255:
        raise FormatError("sample values out of range 0..255")
    return arr / 255.0


def write_image(image, path):
    """Write a PNG (by suffix .png) or ASCII PPM; round-half-up to 8 bit."""
    img = validate_image(image)
    q = np.floor(img * 255.0 + 0.5).astype(np.uint8)
    path = str(path)
    if path.lower().endswith(".ppm"):
        h, w = img.shape[:2]
        body = "\n".join(" ".join(str(v) for v in row) for row in q.reshape(h, -1))
        with open(path, "w") as fh:
            fh.write(f"P3\n{w} {h}\n255\n{body}\n")
    else:
        Image.fromarray(q, mode="RGB").save(path, format="PNG")
