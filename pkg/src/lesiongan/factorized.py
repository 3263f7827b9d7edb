"""Rank-1 factorized convolution and the factorized-attention block.

A d x d convolution is replaced by a vertical d x 1 stage and a horizontal
1 x d stage, each followed by ReLU.  With the nonlinearity disabled the
pair is exactly a 2-D convolution with the outer-product kernel, which is
what the equivalence tests exercise.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .attention import ChannelAttention
from .nn import Module, Parameter, _init_weight
from .tensor import (
    ConfigurationError,
    DimensionError,
    Tensor,
    conv2d,
    record_op,
    relu,
)


class FactorizedConv(Module):
    """Vertical then horizontal 1-D convolution, ReLU after each stage.

    ``apply_nonlinearity`` exists for the rank-1 equivalence tests only;
    the production path always keeps it on.
    """

    def __init__(self, in_c: int, out_c: int, d: int = 3,
                 rng: Optional[np.random.Generator] = None, dtype=np.float64):
        super().__init__()
        if d < 1 or d % 2 == 0:
            raise ConfigurationError(f"factorized kernel extent must be odd, got {d}")
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_c, self.out_c, self.d = in_c, out_c, d
        self.vert_weight = Parameter(_init_weight((out_c, in_c, d, 1), rng, dtype))
        self.vert_bias = Parameter(Tensor(np.zeros(out_c, dtype=dtype)))
        self.horz_weight = Parameter(_init_weight((out_c, out_c, 1, d), rng, dtype))
        self.horz_bias = Parameter(Tensor(np.zeros(out_c, dtype=dtype)))
        self.apply_nonlinearity = True

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != self.in_c:
            raise DimensionError(
                f"factorized layer built for {self.in_c} input channels, "
                f"got shape {x.shape}")
        pad = (self.d - 1) // 2
        y = _pad_rows(x, pad) if pad else x
        y = conv2d(y, self.vert_weight.value, self.vert_bias.value)
        if self.apply_nonlinearity:
            y = relu(y)
        y = _pad_cols(y, pad) if pad else y
        y = conv2d(y, self.horz_weight.value, self.horz_bias.value)
        if self.apply_nonlinearity:
            y = relu(y)
        return y


def _pad_rows(x: Tensor, pad: int) -> Tensor:
    data = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (0, 0)))
    return record_op(data, (x,), lambda g: (g[:, :, pad:-pad, :],))


def _pad_cols(x: Tensor, pad: int) -> Tensor:
    data = np.pad(x.data, ((0, 0), (0, 0), (0, 0), (pad, pad)))
    return record_op(data, (x,), lambda g: (g[:, :, :, pad:-pad],))


class FactorizedAttentionBlock(Module):
    """Factorized convolution followed by channel attention, optionally residual."""

    def __init__(self, channels: int, d: int = 3, residual: bool = True,
                 rng: Optional[np.random.Generator] = None, dtype=np.float64):
        super().__init__()
        self.residual = residual
        self.factorized = FactorizedConv(channels, channels, d, rng, dtype)
        self.cam = ChannelAttention(dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        y = self.cam(self.factorized(x))
        if self.residual:
            y = y + x
        return y


def factorized_param_counts(in_c: int, out_c: int, d: int) -> tuple[int, int]:
    """Parameter counts: (two 1-D stages with biases, full 2-D conv with bias)."""
    if in_c < 1 or out_c < 1 or d < 1:
        raise ConfigurationError("channel counts and kernel extent must be positive")
    factorized = in_c * out_c * d + out_c + out_c * out_c * d + out_c
    full2d = in_c * out_c * d * d + out_c
    return factorized, full2d
