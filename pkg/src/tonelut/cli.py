"""Command line entry points: training, single-image adjustment, LUT
application, evaluation reports and the HTTP server."""

from __future__ import annotations

import argparse
import json
import logging
import os
import socket
import sys

import numpy as np

from .corpus import make_corpus
from .embed import SOURCE_PROMPT, ToyEmbeddingProvider, relative_similarity
from .errors import ToneLutError, UnknownTextError
from .evaluate import (
    assess_filters,
    default_filters,
    grayscale_ssim,
    image_similarity,
    strength_sweep,
)
from .formats import (
    load_checkpoint,
    read_cube,
    read_embedding_store,
    read_image,
    save_checkpoint,
    write_cube,
    write_image,
)
from .losses import LossWeights
from .luts import fuse, lookup
from .network import ModulationConfig, forward
from .train import CorpusSpec, TrainConfig, new_bundle, train_loop

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = (".png", ".ppm")


def _load_corpus_images(spec: str):
    """A directory of images, or 'toy' for the built-in synthetic set."""
    if spec == "toy":
        return make_corpus()
    if not os.path.isdir(spec):
        raise ToneLutError(f"corpus {spec!r} is not a directory (or 'toy')")
    paths = sorted(
        os.path.join(spec, name)
        for name in os.listdir(spec)
        if name.lower().endswith(IMAGE_SUFFIXES)
    )
    if not paths:
        raise ToneLutError(f"no .png/.ppm images found in {spec!r}")
    return [read_image(p) for p in paths]


def _provider_from_flag(store: str):
    return ToyEmbeddingProvider() if store is None else read_embedding_store(store)


def _load_bundle(path: str):
    if not os.path.exists(path):
        raise ToneLutError(f"checkpoint not found: {path}")
    return load_checkpoint(path)


def cmd_train(args) -> int:
    provider = ToyEmbeddingProvider()
    images = _load_corpus_images(args.corpus)
    corpus = CorpusSpec(tuple(images), tuple(args.texts.split(",")))
    weights = LossWeights(
        lam_content=args.lambda_content,
        lam_clip=args.lambda_clip,
        lam_lut=args.lambda_lut,
        lam_weight=args.lambda_weight,
        lam_interval=args.lambda_interval,
        alpha=args.alpha,
    )
    cfg = TrainConfig(
        learning_rate=args.lr,
        steps=args.steps,
        seed=args.seed,
        s=args.s,
        loss_weights=weights,
    )
    bundle = new_bundle(seed=args.seed, grid_size=args.grid_size, provider=provider)
    bundle, optimizer, rng, history = train_loop(corpus, cfg, bundle, provider)
    save_checkpoint(
        bundle,
        args.out,
        optimizer=optimizer,
        rng=rng,
        config={"steps": args.steps, "seed": args.seed, "grid_size": args.grid_size},
    )
    history_path = args.history or f"{args.out}.history.jsonl"
    with open(history_path, "w") as fh:
        for step, report in enumerate(history, start=1):
            fh.write(json.dumps({"step": step, **report.as_dict()}) + "\n")
    if history:
        print(f"trained {args.steps} steps, final total loss {history[-1].total:.6f}")
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_adjust(args) -> int:
    bundle, _, _, _ = _load_bundle(args.checkpoint)
    provider = _provider_from_flag(args.store)
    image = read_image(args.image)
    e_target = provider.embed_text(args.text)
    result = forward(bundle, image, e_target, ModulationConfig(args.s))
    write_image(result.output, args.out)
    print(f"adjusted image written to {args.out}")
    if args.export_cube:
        fused = fuse(bundle.bank, result.weights)
        write_cube(fused, result.coords, args.export_cube, title=args.text)
        print(f"LUT written to {args.export_cube}")
    return 0


def cmd_apply_lut(args) -> int:
    lut, coords = read_cube(args.cube)
    image = read_image(args.image)
    write_image(lookup(lut, coords, image), args.out)
    print(f"image written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    bundle, _, _, _ = _load_bundle(args.checkpoint)
    provider = _provider_from_flag(args.store)
    if not hasattr(provider, "embed_image"):
        raise ToneLutError("eval needs image embeddings; use the toy provider")
    images = _load_corpus_images(args.corpus)
    anchor = provider.embed_text(SOURCE_PROMPT)
    for text in args.texts.split(","):
        text = text if text.endswith(" photo") else f"{text} photo"
        e_target = provider.embed_text(text)
        for idx, image in enumerate(images):
            result = forward(bundle, image, e_target, ModulationConfig(args.s))
            e_in = provider.embed_image(image)
            e_out = provider.embed_image(result.output)
            print(
                f"image={idx} text={text!r} "
                f"ssim={grayscale_ssim(image, result.output):.4f} "
                f"image_sim={image_similarity(e_in, e_out):.4f} "
                f"rel_sim={relative_similarity(e_out, e_target, anchor):.4f}"
            )
    return 0


def cmd_assess_filters(args) -> int:
    provider = ToyEmbeddingProvider()
    images = _load_corpus_images(args.corpus)
    rows = assess_filters(images, default_filters(), provider)
    print(f"{'filter':>12} {'mean_source':>12} {'mean_filtered':>14}")
    for row in rows:
        print(f"{row.filter_name:>12} {row.mean_source:12.4f} {row.mean_filtered:14.4f}")
    return 0


def cmd_sweep(args) -> int:
    bundle, _, _, _ = _load_bundle(args.checkpoint)
    provider = ToyEmbeddingProvider()
    image = read_image(args.image)
    s_values = [float(v) for v in args.s_values.split(",")]
    points = strength_sweep(bundle, provider, image, args.text, s_values)
    for p in points:
        print(
            f"s={p.s:.3f} ssim={p.grayscale_ssim:.4f} "
            f"image_sim={p.image_similarity:.4f} rel_sim={p.relative_similarity:.4f} "
            f"max_delta={p.max_delta_prev:.4f}"
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        checkpoint_path=args.checkpoint,
        embedding_mode=args.store if args.store else "toy",
        max_image_dim=args.max_image_dim,
    )
    app = create_app(config)
    sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    sock.bind((args.host, args.port))
    print(f"listening on {args.host}:{sock.getsockname()[1]}", flush=True)
    uvicorn.run(app, fd=sock.fileno(), log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tonelut", description="text-conditioned 3D LUT tone adjustment"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train the text adapter")
    p.add_argument("--corpus", default="toy", help="image directory or 'toy'")
    p.add_argument("--texts", default="red,blue,warm,cold,bright,dark")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--grid-size", type=int, default=17)
    p.add_argument("--lambda-content", type=float, default=1.0)
    p.add_argument("--lambda-clip", type=float, default=1.0)
    p.add_argument("--lambda-lut", type=float, default=1.0)
    p.add_argument("--lambda-weight", type=float, default=1e-4)
    p.add_argument("--lambda-interval", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.7)
    p.add_argument("--out", required=True)
    p.add_argument("--history", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("adjust", help="adjust one image toward a text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.add_argument("--export-cube", default=None)
    p.add_argument("--store", default=None, help="embedding store file (default: toy)")
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("apply-lut", help="apply a .cube file to an image")
    p.add_argument("--cube", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_apply_lut)

    p = sub.add_parser("eval", help="metric report over a corpus")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--corpus", default="toy")
    p.add_argument("--texts", default="red,blue")
    p.add_argument("--s", type=float, default=1.0)
    p.add_argument("--store", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("assess-filters", help="filter assessment table")
    p.add_argument("--corpus", default="toy")
    p.set_defaults(func=cmd_assess_filters)

    p = sub.add_parser("sweep", help="strength sweep for one image/text")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--text", required=True)
    p.add_argument("--s-values", default="0.0,0.25,0.5,0.75,1.0")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--store", default=None)
    p.add_argument("--max-image-dim", type=int, default=2048)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnknownTextError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ToneLutError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
