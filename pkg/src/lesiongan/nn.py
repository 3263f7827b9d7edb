"""Module/parameter machinery and the standard trainable layers."""

from __future__ import annotations

from typing import Iterator, Optional

import numpy as np

from .tensor import (
    ConfigurationError,
    Tensor,
    conv2d,
    conv_transpose2d,
    dropout,
    relu,
    tsqrt,
)


class Parameter:
    """A named trainable tensor carrying Adam moment buffers."""

    def __init__(self, value: Tensor, name: str = ""):
        value.requires_grad = True
        self.value = value
        self.name = name
        self.m = np.zeros_like(value.data)
        self.v = np.zeros_like(value.data)

    @property
    def data(self) -> np.ndarray:
        return self.value.data

    @data.setter
    def data(self, arr: np.ndarray) -> None:
        self.value.data = arr

    @property
    def grad(self):
        return self.value.grad

    def zero_grad(self) -> None:
        self.value.grad = None

    def numel(self) -> int:
        return int(self.value.data.size)

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.value.shape})"


class RngSource:
    """Mutable holder so one generator can be swapped under every dropout."""

    def __init__(self, generator: Optional[np.random.Generator] = None):
        self.generator = generator if generator is not None else np.random.default_rng(0)

    def reseed(self, seed: int) -> None:
        self.generator = np.random.default_rng(seed)


class Module:
    """Base class tracking parameters, buffers, and submodules by name."""

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_modules", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "training", True)

    def __setattr__(self, key, value):
        if isinstance(value, Parameter):
            self._params[key] = value
        elif isinstance(value, Module):
            self._modules[key] = value
        object.__setattr__(self, key, value)

    def register_buffer(self, key: str, arr: np.ndarray) -> None:
        self._buffers[key] = arr
        object.__setattr__(self, key, arr)

    def set_buffer(self, key: str, arr: np.ndarray) -> None:
        if key not in self._buffers:
            raise KeyError(f"unknown buffer {key!r}")
        self._buffers[key] = arr
        object.__setattr__(self, key, arr)

    # -- traversal -------------------------------------------------------

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Parameter]]:
        for key, p in self._params.items():
            yield (f"{prefix}{key}", p)
        for key, mod in self._modules.items():
            yield from mod.named_parameters(f"{prefix}{key}.")

    def parameters(self) -> list[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[tuple[str, np.ndarray]]:
        for key, b in self._buffers.items():
            yield (f"{prefix}{key}", b)
        for key, mod in self._modules.items():
            yield from mod.named_buffers(f"{prefix}{key}.")

    def modules(self) -> Iterator["Module"]:
        yield self
        for mod in self._modules.values():
            yield from mod.modules()

    def bind_names(self, prefix: str = "") -> None:
        """Assign dotted-path names to every parameter; names must be unique."""
        seen = set()
        for name, p in self.named_parameters(prefix):
            if name in seen:
                raise ConfigurationError(f"duplicate parameter name {name!r}")
            seen.add(name)
            p.name = name

    def train(self, flag: bool = True) -> "Module":
        object.__setattr__(self, "training", flag)
        for mod in self._modules.values():
            mod.train(flag)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def count_parameters(self) -> int:
        return sum(p.numel() for p in self.parameters())

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError


class ModuleList(Module):
    """Indexed container so repeated blocks register under numeric names."""

    def __init__(self, mods):
        super().__init__()
        mods = list(mods)
        for i, m in enumerate(mods):
            setattr(self, str(i), m)
        object.__setattr__(self, "_items", mods)

    def __iter__(self):
        return iter(self._items)

    def __len__(self):
        return len(self._items)

    def __getitem__(self, i):
        return self._items[i]


def _init_weight(shape, rng: np.random.Generator, dtype, std: float = 0.02) -> Tensor:
    return Tensor(rng.normal(0.0, std, size=shape).astype(dtype))


class Conv2d(Module):
    """3x3/4x4/1x1 convolution layer with bias."""

    def __init__(self, in_c: int, out_c: int, kernel: int, stride: int = 1,
                 padding: int = 0, rng: Optional[np.random.Generator] = None,
                 dtype=np.float64):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_c, self.out_c = in_c, out_c
        self.kernel, self.stride, self.padding = kernel, stride, padding
        self.weight = Parameter(_init_weight((out_c, in_c, kernel, kernel), rng, dtype))
        self.bias = Parameter(Tensor(np.zeros(out_c, dtype=dtype)))

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.weight.value, self.bias.value,
                      stride=self.stride, padding=self.padding)


class ConvTranspose2d(Module):
    """Transposed convolution; doubles extents at kernel 3, stride 2, pad 1."""

    def __init__(self, in_c: int, out_c: int, kernel: int, stride: int = 1,
                 padding: int = 0, output_padding: int = 0,
                 rng: Optional[np.random.Generator] = None, dtype=np.float64):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.in_c, self.out_c = in_c, out_c
        self.kernel, self.stride = kernel, stride
        self.padding, self.output_padding = padding, output_padding
        self.weight = Parameter(_init_weight((in_c, out_c, kernel, kernel), rng, dtype))
        self.bias = Parameter(Tensor(np.zeros(out_c, dtype=dtype)))

    def forward(self, x: Tensor) -> Tensor:
        return conv_transpose2d(x, self.weight.value, self.bias.value,
                                stride=self.stride, padding=self.padding,
                                output_padding=self.output_padding)


class BatchNorm2d(Module):
    """Per-channel normalization with learned scale/shift and running stats.

    Training mode normalizes with biased batch statistics and updates the
    running buffers as running = momentum * running + (1 - momentum) * batch.
    """

    def __init__(self, channels: int, momentum: float = 0.9, eps: float = 1e-5,
                 dtype=np.float64):
        super().__init__()
        self.channels = channels
        self.momentum = momentum
        self.eps = eps
        self.scale = Parameter(Tensor(np.ones(channels, dtype=dtype)))
        self.shift = Parameter(Tensor(np.zeros(channels, dtype=dtype)))
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4:
            raise ConfigurationError("batchnorm expects a 4-axis tensor")
        if x.shape[1] != self.channels:
            raise ConfigurationError(
                f"batchnorm built for {self.channels} channels, got {x.shape[1]}")
        if self.training:
            mu = x.mean(axis=(0, 2, 3), keepdims=True)
            centered = x - mu
            var = (centered * centered).mean(axis=(0, 2, 3), keepdims=True)
            m = self.momentum
            self.set_buffer("running_mean",
                            m * self.running_mean + (1 - m) * mu.data.reshape(-1))
            self.set_buffer("running_var",
                            m * self.running_var + (1 - m) * var.data.reshape(-1))
            xhat = centered / tsqrt(var + self.eps)
        else:
            mu = Tensor(self.running_mean.reshape(1, -1, 1, 1))
            var = Tensor(self.running_var.reshape(1, -1, 1, 1))
            xhat = (x - mu) / tsqrt(var + self.eps)
        scale = self.scale.value.reshape(1, self.channels, 1, 1)
        shift = self.shift.value.reshape(1, self.channels, 1, 1)
        return xhat * scale + shift


class Dropout(Module):
    """Inverted dropout; identity in eval mode."""

    def __init__(self, rate: float, rng_source: RngSource):
        super().__init__()
        if not (0.0 <= rate < 1.0):
            raise ConfigurationError(f"dropout rate must be in [0,1), got {rate}")
        self.rate = rate
        self.rng_source = rng_source

    def forward(self, x: Tensor) -> Tensor:
        return dropout(x, self.rate, self.rng_source.generator, self.training)


class ConvBnRelu(Module):
    """conv -> batchnorm -> relu, the unit used by the attention branches."""

    def __init__(self, in_c: int, out_c: int, kernel: int, stride: int = 1,
                 padding: int = 0, rng: Optional[np.random.Generator] = None,
                 dtype=np.float64):
        super().__init__()
        self.conv = Conv2d(in_c, out_c, kernel, stride, padding, rng, dtype)
        self.bn = BatchNorm2d(out_c, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return relu(self.bn(self.conv(x)))
