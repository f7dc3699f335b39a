from . import kernels
from .checkpoint import load_checkpoint, save_checkpoint
from .optim import Adam, adam_step, scheduled_lr
from .tensor import (
    BatchNormState,
    Tape,
    Tensor,
    add,
    as_tensor,
    batch_norm,
    broadcast_to,
    concat,
    conv1d_temporal,
    conv2d,
    div,
    dropout,
    exp,
    linear,
    log,
    matmul,
    mean,
    mul,
    narrow,
    neg,
    parameter,
    pow_scalar,
    prelu,
    relu,
    reshape,
    sigmoid,
    sub,
    tanh,
    tensor_sum,
    transpose,
    uniform_init,
)

__all__ = [
    "kernels",
    "load_checkpoint",
    "save_checkpoint",
    "Adam",
    "adam_step",
    "scheduled_lr",
    "BatchNormState",
    "Tape",
    "Tensor",
    "add",
    "as_tensor",
    "batch_norm",
    "broadcast_to",
    "concat",
    "conv1d_temporal",
    "conv2d",
    "div",
    "dropout",
    "exp",
    "linear",
    "log",
    "matmul",
    "mean",
    "mul",
    "narrow",
    "neg",
    "parameter",
    "pow_scalar",
    "prelu",
    "relu",
    "reshape",
    "sigmoid",
    "sub",
    "tanh",
    "tensor_sum",
    "transpose",
    "uniform_init",
]
