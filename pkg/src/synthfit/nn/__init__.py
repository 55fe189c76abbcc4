"""Minimal numpy tensor/layer stack: strided convolution, dense layers,
ReLU/sigmoid/dropout, binary cross-entropy, Adam, and a deterministic
training loop with early stopping."""

from .layers import (
    Conv2D,
    Dense,
    Dropout,
    Flatten,
    ReLU,
    Sigmoid,
    ToImage,
    bce_grad,
    bce_loss,
)
from .models import (
    ARCHITECTURE_NAMES,
    LayerSpec,
    ModelSpec,
    Network,
    build_model,
    input_shape,
    layer_summaries,
    param_count,
    prepare_input,
)
from .optim import Adam
from .train import TrainConfig, TrainResult, train

__all__ = [
    "ARCHITECTURE_NAMES", "Adam", "Conv2D", "Dense", "Dropout", "Flatten",
    "LayerSpec", "ModelSpec", "Network", "ReLU", "Sigmoid", "ToImage",
    "TrainConfig", "TrainResult", "bce_grad", "bce_loss", "build_model",
    "input_shape", "layer_summaries", "param_count", "prepare_input", "train",
]
