"""Toy embedder, file-backed provider, and relative similarity."""

import numpy as np
import pytest

from tonelut import (
    DimensionError,
    FileEmbeddingProvider,
    ToyEmbeddingProvider,
    UnknownTextError,
    embed_image_toy,
    extract_features,
    relative_similarity,
)
from tonelut.embed import embed_image_toy_grad, make_swatch


class TestToyImageEmbedding:
    def test_unit_norm(self, rng):
        for _ in range(5):
            e = embed_image_toy(rng.uniform(0, 1, (5, 5, 3)))
            assert np.linalg.norm(e) == pytest.approx(1.0, abs=1e-6)

    def test_flip_invariance(self, rng):
        img = rng.uniform(0, 1, (6, 4, 3))
        np.testing.assert_allclose(embed_image_toy(img), embed_image_toy(img[:, ::-1]), atol=1e-12)

    def test_matches_normalized_features_oracle(self, rng):
        img = rng.uniform(0, 1, (7, 7, 3))
        f = extract_features(img)
        np.testing.assert_allclose(embed_image_toy(img), f / np.linalg.norm(f), atol=1e-12)

    def test_gradient_finite_difference(self, rng):
        img = rng.uniform(0.1, 0.9, (4, 4, 3))
        up = rng.normal(size=30)
        grad = embed_image_toy_grad(img, up)
        h = 1e-6
        for _ in range(10):
            ix = tuple(rng.integers(0, s) for s in img.shape)
            i1, i2 = img.copy(), img.copy()
            i1[ix] += h
            i2[ix] -= h
            fd = (np.dot(embed_image_toy(i1), up) - np.dot(embed_image_toy(i2), up)) / (2 * h)
            assert fd == pytest.approx(grad[ix], rel=1e-4, abs=1e-8)


class TestToyTextEmbedding:
    def test_normal_photo_is_gray_swatch(self, provider):
        expected = embed_image_toy(make_swatch((0.5, 0.5, 0.5)))
        np.testing.assert_array_equal(provider.embed_text("normal photo"), expected)

    def test_suffix_optional(self, provider):
        np.testing.assert_array_equal(
            provider.embed_text("red"), provider.embed_text("red photo")
        )

    def test_distinct_tokens_distinct_embeddings(self, provider):
        e_red = provider.embed_text("red photo")
        e_green = provider.embed_text("green photo")
        assert float(np.dot(e_red, e_green)) < 1.0 - 1e-6

    def test_unknown_token_lists_available(self, provider):
        with pytest.raises(UnknownTextError) as exc:
            provider.embed_text("zorp photo")
        assert "normal photo" in str(exc.value)

    def test_tinted_images_align_with_matching_token(self, provider, rng):
        e_red = provider.embed_text("red photo")
        base = rng.uniform(0.2, 0.5, (8, 8, 3))
        red_tinted = np.clip(base + np.array([0.35, 0.0, 0.0]), 0, 1)
        blue_tinted = np.clip(base + np.array([0.0, 0.0, 0.35]), 0, 1)
        cos_red = float(np.dot(e_red, embed_image_toy(red_tinted)))
        cos_blue = float(np.dot(e_red, embed_image_toy(blue_tinted)))
        assert cos_red > cos_blue

    def test_lexicon_must_contain_normal(self):
        with pytest.raises(Exception):
            ToyEmbeddingProvider(lexicon={"red": (1, 0, 0)})


class TestFileProvider:
    def test_lookup_returns_normalized(self):
        v = np.array([3.0, 4.0, 0.0, 0.0])
        p = FileEmbeddingProvider(store={"normal photo": v}, dim=4)
        np.testing.assert_allclose(p.embed_text("normal photo"), v / 5.0, atol=1e-12)

    def test_missing_key_names_it(self):
        p = FileEmbeddingProvider(store={"a": np.ones(2)}, dim=2)
        with pytest.raises(UnknownTextError, match="nope"):
            p.embed_text("nope")

    def test_dim_mismatch_rejected(self):
        with pytest.raises(DimensionError):
            FileEmbeddingProvider(store={"a": np.ones(3)}, dim=4)


class TestRelativeSimilarity:
    def test_equal_similarities_half(self, rng):
        e = rng.normal(size=8)
        e /= np.linalg.norm(e)
        t = rng.normal(size=8)
        t /= np.linalg.norm(t)
        assert relative_similarity(e, t, t) == pytest.approx(0.5, abs=1e-12)

    def test_sigmoid_point_one(self):
        # cosines 0.3 vs 0.2 -> sigmoid(0.1); frozen from 1/(1+exp(-0.1))
        ei = np.array([1.0, 0.0, 0.0])
        et = np.array([0.3, np.sqrt(1 - 0.09), 0.0])
        ea = np.array([0.2, 0.0, np.sqrt(1 - 0.04)])
        assert relative_similarity(ei, et, ea) == pytest.approx(0.52497918747894, abs=1e-10)

    def test_swap_complements(self, rng):
        for _ in range(5):
            ei, et, ea = (v / np.linalg.norm(v) for v in rng.normal(size=(3, 6)))
            s = relative_similarity(ei, et, ea)
            assert 0.0 < s < 1.0
            assert s + relative_similarity(ei, ea, et) == pytest.approx(1.0, abs=1e-12)

    def test_dim_mismatch(self):
        with pytest.raises(DimensionError):
            relative_similarity(np.ones(3), np.ones(4), np.ones(3))
