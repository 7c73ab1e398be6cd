import numpy as np
import pytest

from tonelut import (
    BackboneParams,
    ModelBundle,
    SamplingCoordinates,
    ToyEmbeddingProvider,
    new_bundle,
)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def provider():
    return ToyEmbeddingProvider()


@pytest.fixture
def small_image(rng):
    return rng.uniform(0.05, 0.95, size=(6, 6, 3))


@pytest.fixture
def bundle(provider):
    return new_bundle(seed=11, grid_size=5, provider=provider)


def random_coords(rng, n):
    """Strictly monotone random coords with exact endpoints."""
    gaps = rng.uniform(0.2, 1.0, size=(3, n - 1))
    gaps /= gaps.sum(axis=1, keepdims=True)
    x = np.zeros((3, n))
    x[:, 1:] = np.cumsum(gaps, axis=1)
    x[:, -1] = 1.0
    return SamplingCoordinates(x)


def randomized_bundle(rng, provider, grid_size=5, scale=0.2):
    """Bundle with non-degenerate backbone heads for gradient tests."""
    base = new_bundle(seed=int(rng.integers(0, 2 ** 31)), grid_size=grid_size, provider=provider)
    bb = base.backbone
    bias = rng.normal(0, 0.3, bb.weight_bias.shape)
    bias[0] += 1.0
    backbone = BackboneParams(
        rng.normal(0, scale, bb.weight_matrix.shape),
        bias,
        rng.normal(0, scale, bb.coord_matrix.shape),
        rng.normal(0, scale, bb.coord_bias.shape),
    )
    return ModelBundle(backbone, base.bank, base.adapter, base.source_embedding)
