# Tensor Engine Package
# Dense tensors, reverse-mode autodiff and the network operators

from .tensor import Tensor, tensor, no_grad, precision, get_default_dtype, set_default_dtype
from .functional import (
    conv2d,
    conv1d,
    maxpool2d,
    maxpool1d,
    global_avg_pool,
    batchnorm,
    relu,
    linear,
    softmax,
    log_softmax,
    pick,
)
from .optim import Adam, AdamState, adam_step
from .checkpoint import save_checkpoint, load_checkpoint
from .rng import make_rng

__all__ = [
    "Tensor",
    "tensor",
    "no_grad",
    "precision",
    "get_default_dtype",
    "set_default_dtype",
    "conv2d",
    "conv1d",
    "maxpool2d",
    "maxpool1d",
    "global_avg_pool",
    "batchnorm",
    "relu",
    "linear",
    "softmax",
    "log_softmax",
    "pick",
    "Adam",
    "AdamState",
    "adam_step",
    "save_checkpoint",
    "load_checkpoint",
    "make_rng",
]
