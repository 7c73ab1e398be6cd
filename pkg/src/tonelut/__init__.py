"""Text-conditioned 3D LUT tone-adjustment engine."""

from .errors import (
    DimensionError,
    FormatError,
    InvalidCoordinatesError,
    ToneLutError,
    TrainingError,
    UnknownTextError,
)
from .luts import (
    BasisLutBank,
    Lut3D,
    SamplingCoordinates,
    apply_lut,
    default_bank,
    fuse,
    lookup,
    lookup_grad,
    make_contrast_scurve,
    make_gamma,
    make_identity,
    make_saturation,
)
from .network import (
    AdapterNetwork,
    BackboneParams,
    ModelBundle,
    ModulationConfig,
    adapter_forward,
    extract_features,
    forward,
    forward_grad,
    modulate,
    predict_coords,
    predict_weights,
)
from .embed import (
    FileEmbeddingProvider,
    ToyEmbeddingProvider,
    embed_image_toy,
    embed_image_toy_grad,
    relative_similarity,
)
from .losses import (
    LossReport,
    LossWeights,
    clip_directional_loss,
    clip_directional_loss_grad,
    content_loss,
    content_loss_grad,
    interval_loss,
    interval_loss_grad_coords,
    total_loss,
    weight_l2,
    weight_l2_grad,
)
from .train import AdamState, CorpusSpec, TrainConfig, adam_step, augment, init_adapter, new_bundle, train_loop

__version__ = "0.1.0"
