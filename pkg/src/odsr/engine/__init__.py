"""Minimal NCHW tensor engine with reverse-mode autodiff."""
from .tensor import Tensor, Tape, backward, active_tape, flat_index, unflat_index
from .ops import (
    ConvParams,
    absolute,
    adaptive_max_pool,
    add,
    as_tensor,
    concat_channels,
    conv2d,
    conv_transpose2d,
    div,
    exp,
    fft2_rc,
    gelu,
    grn,
    ifft2_rc,
    leaky_relu,
    mul,
    neg,
    pixel_shuffle,
    pixel_unshuffle,
    relu,
    repeat_channels,
    slice_channels,
    sqrt,
    square,
    sub,
    tmean,
    tsum,
    upsample_nearest,
)
from .fft import fft2, ifft2

__all__ = [
    "Tensor", "Tape", "backward", "active_tape", "flat_index", "unflat_index",
    "ConvParams", "absolute", "adaptive_max_pool", "add", "as_tensor",
    "concat_channels", "conv2d", "conv_transpose2d", "div", "exp", "fft2_rc",
    "gelu", "grn", "ifft2_rc", "leaky_relu", "mul", "neg", "pixel_shuffle",
    "pixel_unshuffle", "relu", "repeat_channels", "slice_channels", "sqrt",
    "square", "sub", "tmean", "tsum", "upsample_nearest", "fft2", "ifft2",
]
