"""Minimal reverse-mode automatic differentiation on numpy arrays."""

from .gradcheck import GradCheckReport, grad_check
from .image_ops import bilinear_sample, gaussian_blur, gaussian_taps, spatial_grad
from .nn import conv2d, fully_connected, resize_bilinear, resize_matrix
from .ops import (
    abs,
    add,
    clamp,
    concat,
    div,
    exp,
    getitem,
    l1,
    log,
    matmul,
    mul,
    neg,
    pixel_matvec,
    power,
    reduce_mean,
    reduce_sum,
    relu,
    reshape,
    sigmoid,
    softmax,
    sqrt,
    square,
    stack,
    sub,
    transpose,
)
from .tensor import Tensor, as_tensor

__all__ = [
    "Tensor", "as_tensor", "GradCheckReport", "grad_check",
    "abs", "add", "clamp", "concat", "div", "exp", "getitem", "l1", "log", "matmul", "mul", "neg",
    "pixel_matvec", "power", "reduce_mean", "reduce_sum", "relu", "reshape", "sigmoid", "softmax",
    "sqrt", "square", "stack", "sub", "transpose",
    "conv2d", "fully_connected", "resize_bilinear", "resize_matrix",
    "bilinear_sample", "gaussian_blur", "gaussian_taps", "spatial_grad",
]
