"""From-scratch neural-network engine: layers, losses, Adam, serialization."""

from linkforge.nn.adam import Adam, adam_step
from linkforge.nn.layers import (
    Conv2D,
    Dense,
    Flatten,
    GaussianNoise,
    InputLayer,
    Layer,
    MaxPoolV,
    UpsampleV,
)
from linkforge.nn.losses import metric_ber, mse_loss
from linkforge.nn.serialize import (
    ModelFormatError,
    dump_params,
    load_params,
    parse_params,
    save_params,
)

__all__ = [
    "Adam",
    "adam_step",
    "Conv2D",
    "Dense",
    "Flatten",
    "GaussianNoise",
    "InputLayer",
    "Layer",
    "MaxPoolV",
    "UpsampleV",
    "metric_ber",
    "mse_loss",
    "ModelFormatError",
    "dump_params",
    "load_params",
    "parse_params",
    "save_params",
]
