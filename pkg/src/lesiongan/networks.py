"""Generator and discriminator assembly.

The generator is an encoder/decoder: a multiscale aggregation block over an
image pyramid, three downsampling-attention stages interleaved with stacks
of factorized-attention blocks, a bottleneck with parallel channel and
position attention, and a two-stage transposed-convolution decoder ending
in a sigmoid mask head.  The discriminator is a four-layer patch classifier
over the image/mask pair.

Channel widths the source text does not pin (the transition width between
the fused multiscale features and the first 64-map stage, the decoder
widths, and the discriminator ladder) are chosen so the combined trainable
parameter count lands at 2.36 M at full scale.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .attention import ChannelAttention, PositionAttention
from .factorized import FactorizedAttentionBlock, FactorizedConv
from .nn import (
    Conv2d,
    ConvTranspose2d,
    Dropout,
    Module,
    ModuleList,
    RngSource,
)
from .tensor import (
    ConfigurationError,
    DimensionError,
    Tensor,
    bilinear_resize,
    bilinear_upsample,
    concat_channels,
    leaky_relu,
    maxpool2,
    sigmoid,
)

# Densest legal bottleneck: 32x32 positions at input size 256.
MAX_BOTTLENECK_POSITIONS = 1024


@dataclass
class ModelConfig:
    """Architectural truth: widths, block counts, resolution, loss weights."""

    input_size: int = 128
    base_channels: int = 16
    stage1_channels: int = 64
    stage2_channels: int = 128
    n_fcm_stage1: int = 4
    n_fcm_stage2: int = 8
    dropout_rate: float = 0.5
    loss_lambda: float = 0.1
    loss_alpha: float = 0.5
    scale_factor: float = 1.0
    dtype: str = "float64"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.input_size % 8 != 0:
            raise ConfigurationError(
                f"input_size must be divisible by 8, got {self.input_size}")
        if (self.input_size // 8) ** 2 > MAX_BOTTLENECK_POSITIONS:
            raise ConfigurationError(
                f"input_size {self.input_size} yields a bottleneck over "
                f"{MAX_BOTTLENECK_POSITIONS} attention positions")
        if self.scale_factor <= 0:
            raise ConfigurationError("scale_factor must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigurationError("dropout_rate must be in [0,1)")
        if self.loss_lambda < 0 or self.loss_alpha < 0:
            raise ConfigurationError("loss weights must be nonnegative")
        if self.dtype not in ("float32", "float64"):
            raise ConfigurationError(f"dtype must be float32 or float64, got {self.dtype}")
        for w in (self.base_channels, self.stage1_channels, self.stage2_channels):
            if self.width(w) < 1:
                raise ConfigurationError("channel widths must stay positive after scaling")

    def width(self, w: int) -> int:
        return int(round(w * self.scale_factor))

    @property
    def np_dtype(self):
        return np.float64 if self.dtype == "float64" else np.float32

    # Derived widths that the text leaves open.
    @property
    def down1_channels(self) -> int:
        return self.width(self.base_channels * 2)

    @property
    def up1_channels(self) -> int:
        return self.width(self.stage2_channels)

    @property
    def up2_channels(self) -> int:
        return self.width(self.base_channels * 2)

    @property
    def disc_channels(self) -> tuple[int, int, int]:
        return (self.width(self.stage1_channels),
                self.width(self.stage2_channels),
                self.width(self.stage2_channels * 2))


def _check_input_extents(s: int) -> None:
    if s % 8 != 0:
        raise ConfigurationError(f"input extent must be divisible by 8, got {s}")
    if (s // 8) ** 2 > MAX_BOTTLENECK_POSITIONS:
        raise ConfigurationError(
            f"input extent {s} yields a bottleneck over "
            f"{MAX_BOTTLENECK_POSITIONS} attention positions")


class ScaleBranch(Module):
    """One pyramid scale: 3x3 convolution followed by channel attention."""

    def __init__(self, in_c, out_c, rng, dtype):
        super().__init__()
        self.conv = Conv2d(in_c, out_c, 3, 1, 1, rng, dtype)
        self.cam = ChannelAttention(dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.cam(self.conv(x))


class DownBlock(Module):
    """Stride-1 convolution, 2x max-pool, then position attention."""

    def __init__(self, in_c, out_c, rng, dtype):
        super().__init__()
        self.conv = Conv2d(in_c, out_c, 3, 1, 1, rng, dtype)
        self.pam = PositionAttention(out_c, rng, dtype)

    def forward(self, x: Tensor) -> Tensor:
        return self.pam(maxpool2(self.conv(x)))


class UpBlock(Module):
    """Transposed convolution doubling extents, position attention, two
    factorized-attention blocks with dropout."""

    def __init__(self, in_c, out_c, dropout_rate, rng_source, rng, dtype):
        super().__init__()
        self.deconv = ConvTranspose2d(in_c, out_c, 3, 2, 1, 1, rng, dtype)
        self.pam = PositionAttention(out_c, rng, dtype)
        self.blocks = ModuleList(
            [FactorizedAttentionBlock(out_c, rng=rng, dtype=dtype) for _ in range(2)])
        self.drops = ModuleList(
            [Dropout(dropout_rate, rng_source) for _ in range(2)])

    def forward(self, x: Tensor) -> Tensor:
        y = self.pam(self.deconv(x))
        for block, drop in zip(self.blocks, self.drops):
            y = drop(block(y))
        return y


class Generator(Module):
    """Maps an RGB image (n,3,s,s) to a soft lesion mask (n,1,s,s)."""

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator,
                 rng_source: RngSource | None = None):
        super().__init__()
        self.cfg = cfg
        self.rng_source = rng_source if rng_source is not None else RngSource()
        dt = cfg.np_dtype
        base = cfg.width(cfg.base_channels)
        stage1 = cfg.width(cfg.stage1_channels)
        stage2 = cfg.width(cfg.stage2_channels)

        self.scales = ModuleList(
            [ScaleBranch(3, base, rng, dt) for _ in range(4)])
        self.down1 = DownBlock(base, cfg.down1_channels, rng, dt)
        self.down2 = DownBlock(cfg.down1_channels, stage1, rng, dt)
        self.stage1_blocks = ModuleList(
            [FactorizedAttentionBlock(stage1, rng=rng, dtype=dt)
             for _ in range(cfg.n_fcm_stage1)])
        self.down3 = DownBlock(stage1, stage2, rng, dt)
        self.stage2_blocks = ModuleList(
            [FactorizedAttentionBlock(stage2, rng=rng, dtype=dt)
             for _ in range(cfg.n_fcm_stage2)])
        self.bottleneck = FactorizedConv(stage2, stage2, rng=rng, dtype=dt)
        self.bottleneck_cam = ChannelAttention(dtype=dt)
        self.bottleneck_pam = PositionAttention(stage2, rng, dt)
        self.up1 = UpBlock(stage2, cfg.up1_channels, cfg.dropout_rate,
                           self.rng_source, rng, dt)
        self.up2 = UpBlock(cfg.up1_channels, cfg.up2_channels, cfg.dropout_rate,
                           self.rng_source, rng, dt)
        self.head = Conv2d(cfg.up2_channels, 1, 3, 1, 1, rng, dt)

    def forward(self, x: Tensor, training: bool | None = None) -> Tensor:
        if training is not None and training != self.training:
            prev = self.training
            self.train(training)
            try:
                return self._forward(x)
            finally:
                self.train(prev)
        return self._forward(x)

    def _forward(self, x: Tensor) -> Tensor:
        if x.ndim != 4 or x.shape[1] != 3:
            raise ConfigurationError(
                f"generator expects (n,3,s,s) input, got {x.shape}")
        n, _, h, w = x.shape
        if h != w:
            raise ConfigurationError(f"generator expects square input, got {h}x{w}")
        _check_input_extents(h)
        s = h

        fused = None
        for k, branch in enumerate(self.scales):
            step = 2 ** k
            xi = x if k == 0 else bilinear_resize(x, s // step, s // step)
            fi = branch(xi)
            if k:
                fi = bilinear_upsample(fi, s, s)
            fused = fi if fused is None else fused + fi
        y = fused * 0.25

        y = self.down1(y)
        y = self.down2(y)
        for block in self.stage1_blocks:
            y = block(y)
        y = self.down3(y)
        for block in self.stage2_blocks:
            y = block(y)
        f = self.bottleneck(y)
        # Recorded for shape inspection: the coarsest feature map extents.
        self.last_bottleneck_extents = (f.shape[2], f.shape[3])
        y = self.bottleneck_cam(f) + self.bottleneck_pam(f)
        y = self.up1(y)
        y = self.up2(y)
        y = bilinear_upsample(y, s, s)
        return sigmoid(self.head(y))


class Discriminator(Module):
    """Patch discriminator over a channel-concatenated (image, mask) pair.

    """

    INIT_STD = 0.02

    def __init__(self, cfg: ModelConfig, rng: np.random.Generator):
        super().__init__()
        self.cfg = cfg
        dt = cfg.np_dtype
        c1, c2, c3 = cfg.disc_channels
        self.conv1 = Conv2d(4, c1, 4, 2, 1, rng, dt)
        self.conv2 = Conv2d(c1, c2, 4, 2, 1, rng, dt)
        self.pam = PositionAttention(c2, rng, dt)
        self.conv3 = Conv2d(c2, c3, 4, 2, 1, rng, dt)
        self.cam = ChannelAttention(dtype=dt)
        self.conv4 = Conv2d(c3, 1, 4, 2, 1, rng, dt)
        for conv in (self.conv1, self.conv2, self.conv3, self.conv4):
            conv.weight.value.data *= self.INIT_STD / 0.02

    def forward(self, image: Tensor, mask: Tensor) -> Tensor:
        if image.ndim != 4 or mask.ndim != 4:
            raise DimensionError("discriminator expects 4-axis tensors")
        if image.shape[0] != mask.shape[0] or image.shape[2:] != mask.shape[2:]:
            raise DimensionError(
                f"image {image.shape} and mask {mask.shape} extents disagree")
        if mask.shape[1] != 1:
            raise DimensionError(f"mask must be single-channel, got {mask.shape[1]}")
        y = concat_channels([image, mask])
        y = leaky_relu(self.conv1(y))
        y = self.pam(leaky_relu(self.conv2(y)))
        y = self.cam(leaky_relu(self.conv3(y)))
        return sigmoid(self.conv4(y))


def count_parameters(net: Module) -> int:
    """Exact number of trainable scalars in a network."""
    return net.count_parameters()


def parameter_breakdown(net: Module) -> list[tuple[str, int]]:
    """Per-parameter (name, count) pairs in registration order."""
    return [(name, p.numel()) for name, p in net.named_parameters()]


def binarize(mask: Tensor, threshold: float = 0.5) -> Tensor:
    """Hard mask: pixel >= threshold becomes 1, else 0 (boundary included)."""
    if not (0.0 < threshold < 1.0):
        raise ConfigurationError(f"threshold must lie in (0,1), got {threshold}")
    return Tensor((mask.data >= threshold).astype(mask.data.dtype))


def build_models(cfg: ModelConfig, seed: int = 0) -> tuple[Generator, Discriminator, RngSource]:
    """Construct both networks deterministically from one seed."""
    init_rng = np.random.default_rng([seed, 0])
    rng_source = RngSource(np.random.default_rng([seed, 1]))
    gen = Generator(cfg, init_rng, rng_source)
    disc = Discriminator(cfg, init_rng)
    gen.bind_names("gen.")
    disc.bind_names("disc.")
    return gen, disc, rng_source


def config_to_dict(cfg: ModelConfig) -> dict:
    return {f.name: getattr(cfg, f.name) for f in fields(ModelConfig)}


def config_from_dict(d: dict) -> ModelConfig:
    return ModelConfig(**d)
