"""Lightweight adversarial skin-lesion segmentation.

A from-scratch differentiable tensor core, channel/position attention,
rank-1 factorized convolution blocks, a compact encoder/decoder GAN, and
everything needed to train, evaluate, and benchmark it.
"""

from .tensor import (
    ConfigurationError,
    DimensionError,
    DomainError,
    NumericError,
    Tensor,
    UsageError,
    no_grad,
)
from .nn import Module, Parameter, RngSource
from .attention import ChannelAttention, PositionAttention
from .factorized import FactorizedAttentionBlock, FactorizedConv, factorized_param_counts
from .networks import (
    Discriminator,
    Generator,
    ModelConfig,
    binarize,
    build_models,
    count_parameters,
)
from .losses import (
    LossWeights,
    bce,
    discriminator_loss,
    generator_loss,
    jaccard_distance,
    soft_jaccard_grad,
    soft_jaccard_loss,
)
from .metrics import ConfusionCounts, MetricsReport, compute_metrics, confusion, thresholded_jsc
from .data import Sample, load_sample, synthesize_disk_dataset
from .optim import OptimizerConfig, adam_step
from .train import BenchReport, TrainState, bench, evaluate, train, train_step
from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_run_config

__version__ = "0.1.0"
