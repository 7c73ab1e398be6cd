"""Export job: resolve an encoder, embed inputs, write the store file
atomically (temp file + rename in the destination directory)."""

from __future__ import annotations

import logging
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from tonelut.errors import ToneLutError
from tonelut.formats import read_image, write_embedding_store

log = logging.getLogger(__name__)

DEFAULT_MODEL = "openai/clip-vit-base-patch32"
TEXT_SUFFIX = " photo"
IMAGE_SUFFIXES = (".png", ".ppm")


@dataclass(frozen=True)
class ExportJob:
    texts: tuple
    output_path: str
    model: str = DEFAULT_MODEL
    image_dir: str = None
    batch_size: int = 16

    def __post_init__(self):
        if not self.texts and not self.image_dir:
            raise ToneLutError("export job needs texts and/or an image directory")
        object.__setattr__(self, "texts", tuple(self.texts))


class ToyTextEncoder:
    """The engine's deterministic 30-dim embedder; offline-friendly."""

    name = "toy"

    def __init__(self):
        from tonelut.embed import ToyEmbeddingProvider

        self._provider = ToyEmbeddingProvider()

    @property
    def dim(self):
        return self._provider.dim

    def encode_texts(self, texts):
        return [self._provider.embed_text(t) for t in texts]

    def encode_image(self, image):
        return self._provider.embed_image(image)


class ClipEncoder:
    """Real CLIP text/image encoder via transformers; loaded lazily."""

    def __init__(self, model_name: str):
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise ToneLutError(f"transformers/torch unavailable: {exc}")
        try:
            self._model = CLIPModel.from_pretrained(model_name)
            self._processor = CLIPProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise ToneLutError(f"cannot load model {model_name!r}: {exc}")
        self._model.eval()
        self._torch = torch
        self.name = model_name

    @property
    def dim(self):
        return int(self._model.config.projection_dim)

    def encode_texts(self, texts):
        inputs = self._processor(text=list(texts), return_tensors="pt", padding=True)
        with self._torch.no_grad():
            out = self._model.get_text_features(**inputs)
        return [v.numpy().astype(np.float64) for v in out]

    def encode_image(self, image):
        from PIL import Image

        pil = Image.fromarray((np.clip(image, 0, 1) * 255).astype(np.uint8))
        inputs = self._processor(images=pil, return_tensors="pt")
        with self._torch.no_grad():
            out = self._model.get_image_features(**inputs)
        return out[0].numpy().astype(np.float64)


def make_encoder(model: str):
    if model == "toy":
        return ToyTextEncoder()
    return ClipEncoder(model)


def normalize_texts(texts) -> list:
    """Apply the ' photo' suffix rule and deduplicate, warning on repeats."""
    seen = []
    for raw in texts:
        text = raw.strip()
        if not text:
            continue
        if not text.endswith(TEXT_SUFFIX):
            text = text + TEXT_SUFFIX
        if text in seen:
            log.warning("duplicate input %r skipped", raw)
            continue
        seen.append(text)
    return seen


def run_export(job: ExportJob) -> dict:
    """Run the job; returns the written store as a dict."""
    encoder = make_encoder(job.model)
    texts = normalize_texts(job.texts)
    store = {}
    for text, vec in zip(texts, encoder.encode_texts(texts) if texts else []):
        v = np.asarray(vec, dtype=np.float64)
        store[text] = v / np.linalg.norm(v)

    if job.image_dir:
        names = sorted(
            n for n in os.listdir(job.image_dir) if n.lower().endswith(IMAGE_SUFFIXES)
        )
        for name in names:
            key = f"image:{name}"
            if key in store:
                log.warning("duplicate image key %r skipped", key)
                continue
            v = np.asarray(
                encoder.encode_image(read_image(os.path.join(job.image_dir, name))),
                dtype=np.float64,
            )
            store[key] = v / np.linalg.norm(v)

    if not store:
        raise ToneLutError("nothing to export")

    out_dir = os.path.dirname(os.path.abspath(job.output_path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".store-", dir=out_dir)
    os.close(fd)
    try:
        write_embedding_store(store, tmp, model=encoder.name)
        os.replace(tmp, job.output_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    log.info("wrote %d records to %s", len(store), job.output_path)
    return store
