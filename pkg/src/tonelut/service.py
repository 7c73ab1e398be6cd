"""HTTP facade over a loaded checkpoint: health, text listing, image
adjustment, LUT export and relative similarity scoring.

The model snapshot is immutable, so every handler is a pure function of
its request body and responses are deterministic.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
from dataclasses import dataclass

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, PlainTextResponse
from PIL import Image

from .embed import SOURCE_PROMPT, ToyEmbeddingProvider, relative_similarity
from .errors import UnknownTextError
from .formats import load_checkpoint, read_embedding_store
from .luts import fuse
from .network import ModulationConfig, forward
from .train import new_bundle

DEFAULT_MAX_DIM = 2048


@dataclass(frozen=True)
class ServiceConfig:
    checkpoint_path: str = None  # None: fresh neutral bundle (demo mode)
    embedding_mode: str = "toy"  # "toy" or a store file path
    max_image_dim: int = DEFAULT_MAX_DIM


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def _decode_image(payload: str, max_dim: int) -> np.ndarray:
    try:
        raw = base64.b64decode(payload, validate=True)
        img = Image.open(io.BytesIO(raw))
        img.load()
    except Exception:
        raise ApiError(400, "bad_image", "image must be valid base64-encoded PNG")
    if img.mode not in ("RGB", "RGBA", "L"):
        raise ApiError(400, "bad_image", f"unsupported image mode {img.mode}")
    if max(img.size) > max_dim:
        raise ApiError(
            413, "image_too_large", f"image exceeds max dimension {max_dim}"
        )
    return np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0


def _encode_image(image: np.ndarray) -> str:
    q = np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)
    buf = io.BytesIO()
    Image.fromarray(q, mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def _cube_text(lut, coords, title: str) -> str:
    from .formats import write_cube
    import tempfile, os

    with tempfile.NamedTemporaryFile(
        "r", suffix=".cube", delete=False
    ) as fh:
        path = fh.name
    try:
        write_cube(lut, coords, path, title=title)
        with open(path) as fh:
            return fh.read()
    finally:
        os.unlink(path)


def _checkpoint_hash(path) -> str:
    if path is None:
        return "none"
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


class _StoreWithToyImages:
    """Store-backed texts plus the toy image embedder.

    Only valid when the store was written in the toy embedding space
    (same dimensionality), e.g. by the export sidecar's 'toy' model;
    then /similarity can embed request images too.
    """

    def __init__(self, store_provider):
        self._store = store_provider
        self._toy = ToyEmbeddingProvider()
        self.dim = store_provider.dim
        self.supports_training = False

    def texts(self):
        return self._store.texts()

    def embed_text(self, text):
        return self._store.embed_text(text)

    def embed_image(self, image):
        return self._toy.embed_image(image)


def load_service_state(config: ServiceConfig):
    """Resolve (bundle, provider, checkpoint hash) from a config."""
    if config.embedding_mode == "toy":
        provider = ToyEmbeddingProvider()
    else:
        provider = read_embedding_store(config.embedding_mode)
        if provider.dim == ToyEmbeddingProvider().dim:
            provider = _StoreWithToyImages(provider)
    if config.checkpoint_path:
        bundle, _, _, _ = load_checkpoint(config.checkpoint_path)
    else:
        bundle = new_bundle(seed=0, provider=provider)
    return bundle, provider, _checkpoint_hash(config.checkpoint_path)


def create_app(config: ServiceConfig = None, bundle=None, provider=None) -> FastAPI:
    config = config or ServiceConfig()
    if bundle is None or provider is None:
        bundle, provider, ck_hash = load_service_state(config)
    else:
        ck_hash = _checkpoint_hash(config.checkpoint_path)

    app = FastAPI(title="tonelut")
    gray = np.full((8, 8, 3), 0.5)

    @app.exception_handler(ApiError)
    async def api_error_handler(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    async def _body(request: Request) -> dict:
        try:
            doc = json.loads(await request.body())
        except json.JSONDecodeError:
            raise ApiError(400, "bad_json", "request body must be a JSON object")
        if not isinstance(doc, dict):
            raise ApiError(400, "bad_json", "request body must be a JSON object")
        return doc

    def _target(text: str) -> np.ndarray:
        try:
            return provider.embed_text(text)
        except UnknownTextError as exc:
            raise ApiError(404, "unknown_text", str(exc))

    def _strength(doc) -> float:
        s = doc.get("s", 1.0)
        if not isinstance(s, (int, float)) or not np.isfinite(s):
            raise ApiError(400, "bad_strength", "s must be a finite number")
        return float(s)

    @app.get("/health")
    def health():
        return {
            "status": "ok",
            "checkpoint": ck_hash,
            "embedding_mode": "toy" if isinstance(provider, ToyEmbeddingProvider) else "store",
            "grid_size": bundle.backbone.grid_size,
        }

    @app.get("/texts")
    def texts():
        return {"texts": list(provider.texts())}

    @app.post("/adjust")
    async def adjust(request: Request):
        doc = await _body(request)
        if "image" not in doc or "text" not in doc:
            raise ApiError(400, "missing_field", "need 'image' and 'text'")
        image = _decode_image(doc["image"], config.max_image_dim)
        e_target = _target(doc["text"])
        result = forward(bundle, image, e_target, ModulationConfig(_strength(doc)))
        return {
            "image": _encode_image(result.output),
            "weights": [float(w) for w in result.weights],
            "coords": [[float(v) for v in row] for row in result.coords.x],
        }

    @app.post("/lut")
    async def lut(request: Request):
        doc = await _body(request)
        if "text" not in doc:
            raise ApiError(400, "missing_field", "need 'text'")
        image = (
            _decode_image(doc["image"], config.max_image_dim)
            if "image" in doc
            else gray
        )
        e_target = _target(doc["text"])
        result = forward(bundle, image, e_target, ModulationConfig(_strength(doc)))
        fused = fuse(bundle.bank, result.weights)
        text = _cube_text(fused, result.coords, title=doc["text"])
        return PlainTextResponse(text, media_type="text/plain")

    @app.post("/similarity")
    async def similarity(request: Request):
        doc = await _body(request)
        if "image" not in doc or "text" not in doc:
            raise ApiError(400, "missing_field", "need 'image' and 'text'")
        if not hasattr(provider, "embed_image"):
            raise ApiError(
                400, "unsupported", "store-backed provider cannot embed images"
            )
        image = _decode_image(doc["image"], config.max_image_dim)
        e_target = _target(doc["text"])
        anchor = _target(SOURCE_PROMPT)
        score = relative_similarity(provider.embed_image(image), e_target, anchor)
        return {"relative_similarity": score}

    return app
