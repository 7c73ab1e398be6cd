"""Adapter init, augmentation, Adam, and the training loop contracts."""

import numpy as np
import pytest

from tonelut import (
    AdamState,
    CorpusSpec,
    DimensionError,
    TrainConfig,
    TrainingError,
    ToyEmbeddingProvider,
    adam_step,
    augment,
    init_adapter,
    new_bundle,
    train_loop,
)
from tonelut.corpus import make_corpus
from tonelut.network import AdapterGrads


def zero_grads(adapter):
    return AdapterGrads(
        np.zeros_like(adapter.w1),
        np.zeros_like(adapter.b1),
        np.zeros_like(adapter.w2),
        np.zeros_like(adapter.b2),
    )


class TestInitAdapter:
    def test_deterministic_per_seed(self):
        a = init_adapter(42, out_dim=50)
        b = init_adapter(42, out_dim=50)
        np.testing.assert_array_equal(a.w1, b.w1)
        np.testing.assert_array_equal(a.w2, b.w2)

    def test_biases_zero(self):
        a = init_adapter(1, out_dim=20)
        assert np.all(a.b1 == 0.0) and np.all(a.b2 == 0.0)

    def test_weights_in_uniform_range(self):
        a = init_adapter(2, out_dim=20)
        for m in (a.w1, a.w2):
            assert m.min() >= 0.0 and m.max() < 0.01


class TestAugment:
    def test_identity_when_collapsed(self, rng, small_image):
        cfg = TrainConfig(
            crop_fraction=1.0,
            brightness_jitter_range=(1.0, 1.0),
            saturation_jitter_range=(1.0, 1.0),
        )

        class NoFlip:
            def integers(self, *a, **k):
                return 0

            def random(self):
                return 0.9  # >= 0.5: no flip

            def uniform(self, lo, hi):
                return lo

        out = augment(small_image, NoFlip(), cfg)
        np.testing.assert_allclose(out, small_image, atol=1e-12)

    def test_brightness_scale(self):
        cfg = TrainConfig(
            crop_fraction=1.0,
            brightness_jitter_range=(1.2, 1.2),
            saturation_jitter_range=(1.0, 1.0),
        )

        class Fixed:
            def integers(self, *a, **k):
                return 0

            def random(self):
                return 0.9

            def uniform(self, lo, hi):
                return lo

        img = np.full((4, 4, 3), 0.5)
        np.testing.assert_allclose(augment(img, Fixed(), cfg), 0.6, atol=1e-12)

    def test_zero_saturation_gives_grayscale(self, rng, small_image):
        cfg = TrainConfig(
            crop_fraction=1.0,
            brightness_jitter_range=(1.0, 1.0),
            saturation_jitter_range=(0.0, 0.0),
        )

        class Fixed:
            def integers(self, *a, **k):
                return 0

            def random(self):
                return 0.9

            def uniform(self, lo, hi):
                return lo

        out = augment(small_image, Fixed(), cfg)
        assert np.allclose(out[..., 0], out[..., 1], atol=1e-12)
        assert np.allclose(out[..., 1], out[..., 2], atol=1e-12)

    def test_crop_changes_shape(self, rng):
        img = rng.uniform(0, 1, (20, 20, 3))
        out = augment(img, np.random.default_rng(0), TrainConfig(crop_fraction=0.5))
        assert out.shape == (10, 10, 3)


class TestAdamStep:
    def test_zero_gradient_keeps_params(self):
        adapter = init_adapter(0, out_dim=10)
        state = AdamState.for_adapter(adapter)
        state2, adapter2 = adam_step(state, adapter, zero_grads(adapter), TrainConfig())
        assert state2.t == 1
        np.testing.assert_array_equal(adapter2.w1, adapter.w1)

    def test_first_step_closed_form(self):
        # scalar parameter, g=1: m_hat=1, v_hat=1 -> step = lr/(1+eps)
        adapter = init_adapter(0, embed_dim=1, hidden_dim=1, out_dim=1)
        state = AdamState.for_adapter(adapter)
        grads = zero_grads(adapter)
        g = AdamState.for_adapter(adapter).m  # zeros template
        grads = AdapterGrads(np.ones_like(adapter.w1), g["b1"], g["w2"], g["b2"])
        cfg = TrainConfig(learning_rate=1e-3)
        _, adapter2 = adam_step(state, adapter, grads, cfg)
        expected = adapter.w1[0, 0] - 1e-3 * (1.0 / (1.0 + 1e-8))
        assert adapter2.w1[0, 0] == pytest.approx(expected, abs=1e-15)

    def test_non_finite_gradient_rejected(self):
        adapter = init_adapter(0, out_dim=10)
        state = AdamState.for_adapter(adapter)
        bad = zero_grads(adapter).as_dict()
        bad["w1"] = np.full_like(adapter.w1, np.nan)
        with pytest.raises(TrainingError):
            adam_step(state, adapter, bad, TrainConfig())

    def test_shape_mismatch_rejected(self):
        adapter = init_adapter(0, out_dim=10)
        state = AdamState.for_adapter(adapter)
        bad = zero_grads(adapter).as_dict()
        bad["b2"] = np.zeros(3)
        with pytest.raises(DimensionError):
            adam_step(state, adapter, bad, TrainConfig())


@pytest.fixture(scope="module")
def toy_corpus():
    return CorpusSpec(tuple(make_corpus(8, 24, seed=5)), ("red", "blue"))


class TestTrainLoop:
    def test_zero_steps_keeps_bundle(self, toy_corpus):
        provider = ToyEmbeddingProvider()
        bundle = new_bundle(seed=1, grid_size=5, provider=provider)
        out, _, _, history = train_loop(toy_corpus, TrainConfig(steps=0), bundle, provider)
        assert history == []
        np.testing.assert_array_equal(out.adapter.w1, bundle.adapter.w1)

    def test_deterministic_history(self, toy_corpus):
        provider = ToyEmbeddingProvider()
        cfg = TrainConfig(steps=15, seed=9)
        runs = []
        for _ in range(2):
            bundle = new_bundle(seed=9, grid_size=5, provider=provider)
            _, _, _, history = train_loop(toy_corpus, cfg, bundle, provider)
            runs.append([h.total for h in history])
        assert runs[0] == runs[1]

    def test_frozen_parameters_untouched(self, toy_corpus):
        provider = ToyEmbeddingProvider()
        bundle = new_bundle(seed=2, grid_size=5, provider=provider)
        backbone_before = bundle.backbone.flatten().copy()
        bank_before = bundle.bank.stacked().copy()
        out, _, _, _ = train_loop(toy_corpus, TrainConfig(steps=10), bundle, provider)
        np.testing.assert_array_equal(out.backbone.flatten(), backbone_before)
        np.testing.assert_array_equal(out.bank.stacked(), bank_before)
        assert np.any(out.adapter.w2 != bundle.adapter.w2)

    def test_history_finite(self, toy_corpus):
        provider = ToyEmbeddingProvider()
        bundle = new_bundle(seed=3, grid_size=5, provider=provider)
        _, _, _, history = train_loop(toy_corpus, TrainConfig(steps=20), bundle, provider)
        assert all(np.isfinite(h.total) for h in history)

    def test_file_provider_rejected(self, toy_corpus):
        from tonelut import FileEmbeddingProvider

        provider = ToyEmbeddingProvider()
        bundle = new_bundle(seed=1, grid_size=5, provider=provider)
        file_provider = FileEmbeddingProvider(store={"red photo": np.ones(30)}, dim=30)
        with pytest.raises(TrainingError):
            train_loop(toy_corpus, TrainConfig(steps=1), bundle, file_provider)

    def test_text_suffix_rule(self):
        corpus = CorpusSpec((np.full((4, 4, 3), 0.5),), ("red", "blue photo"))
        assert corpus.texts == ("red photo", "blue photo")
