from .functional import (
    BatchNormState,
    batchnorm2d,
    bilinear_resize,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    pad2d,
    relu,
)
from .optim import Adam, AdamState, adam_step
from .tensor import Tensor, absolute, add, as_tensor, div, getitem, mean, mul, square, sub, tsum

__all__ = [
    "Adam",
    "AdamState",
    "BatchNormState",
    "Tensor",
    "absolute",
    "adam_step",
    "add",
    "as_tensor",
    "batchnorm2d",
    "bilinear_resize",
    "conv2d",
    "conv_transpose2d",
    "div",
    "getitem",
    "maxpool2d",
    "mean",
    "mul",
    "pad2d",
    "relu",
    "square",
    "sub",
    "tsum",
]
