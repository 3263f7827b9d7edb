"""Channel and position attention.

Both modules rescale features by a learned scalar that starts at zero, so
at initialization each is exactly the identity map.  Channel attention
weights channels by a softmax over the channel Gram matrix; position
attention weights spatial positions by a softmax over pairwise position
affinities computed from three 1x1 conv+bn+relu branches.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .nn import ConvBnRelu, Module, Parameter
from .tensor import (
    ConfigurationError,
    Tensor,
    matmul,
    reshape,
    softmax_rows,
    transpose_last2,
)

# Densely materialized position-affinity matrices are quadratic in h*w;
# refuse anything past the largest legal full-scale feature map (128x128).
MAX_ATTENTION_POSITIONS = 128 * 128


class ChannelAttention(Module):
    """Reweights channels via softmax over the channel Gram matrix.

    Output per channel j is gamma * sum_i x_ji * A_i + A_j where x is the
    row-stochastic attention map over source channels i.
    """

    def __init__(self, dtype=np.float64):
        super().__init__()
        self.gamma = Parameter(Tensor(np.zeros((), dtype=dtype)))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise ConfigurationError("channel attention expects a 4-axis tensor")
        n, c, h, w = x.shape
        flat = reshape(x, (n, c, h * w))
        logits = matmul(flat, transpose_last2(flat))      # (n, c, c); [j, i] = A_j . A_i
        attn = softmax_rows(logits)                       # rows j sum to 1 over i
        mixed = matmul(attn, flat)                        # sum_i x_ji A_i
        return self.gamma.value * reshape(mixed, (n, c, h, w)) + x

    def attention_map(self, x: Tensor) -> Tensor:
        """The (n, c, c) row-stochastic map, for tests and inspection."""
        n, c, h, w = x.shape
        flat = reshape(x, (n, c, h * w))
        return softmax_rows(matmul(flat, transpose_last2(flat)))


class PositionAttention(Module):
    """Reweights spatial positions via pairwise affinities.

    Three 1x1 conv+bn+relu branches map the input to query/key/value
    features; the affinity between positions is the dot product of key
    column i with query column j, softmax-normalized over i.
    """

    def __init__(self, channels: int, rng: Optional[np.random.Generator] = None,
                 dtype=np.float64):
        super().__init__()
        self.channels = channels
        self.eta = Parameter(Tensor(np.zeros((), dtype=dtype)))
        self.key_branch = ConvBnRelu(channels, channels, 1, rng=rng, dtype=dtype)
        self.query_branch = ConvBnRelu(channels, channels, 1, rng=rng, dtype=dtype)
        self.value_branch = ConvBnRelu(channels, channels, 1, rng=rng, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise ConfigurationError("position attention expects a 4-axis tensor")
        n, c, h, w = x.shape
        if c != self.channels:
            raise ConfigurationError(
                f"position attention built for {self.channels} channels, got {c}")
        npos = h * w
        if npos > MAX_ATTENTION_POSITIONS:
            raise ConfigurationError(
                f"position attention over {npos} positions exceeds the "
                f"dense limit of {MAX_ATTENTION_POSITIONS}")
        key = reshape(self.key_branch(x), (n, c, npos))
        query = reshape(self.query_branch(x), (n, c, npos))
        value = reshape(self.value_branch(x), (n, c, npos))
        # [j, i] = key_i . query_j, normalized over source positions i
        logits = matmul(transpose_last2(query), key)      # (n, npos, npos)
        attn = softmax_rows(logits)
        mixed = matmul(value, transpose_last2(attn))      # [:, j] = sum_i s_ji value_i
        return self.eta.value * reshape(mixed, (n, c, h, w)) + x
