"""Bias-corrected Adam over parameter collections."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nn import Parameter
from .tensor import ConfigurationError, NumericError


@dataclass
class OptimizerConfig:
    lr: float = 0.0002
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.lr <= 0:
            raise ConfigurationError(f"learning rate must be positive, got {self.lr}")
        for name, b in (("beta1", self.beta1), ("beta2", self.beta2)):
            if not (0.0 <= b < 1.0):
                raise ConfigurationError(f"{name} must lie in [0,1), got {b}")
        if self.eps <= 0:
            raise ConfigurationError(f"eps must be positive, got {self.eps}")


def adam_step(params: Sequence[Parameter], cfg: OptimizerConfig, t: int) -> None:
    """Apply one bias-corrected update in place, then zero the grads.

    Parameters with no accumulated gradient are left untouched.
    """
    if t < 1:
        raise ConfigurationError(f"step index must be >= 1, got {t}")
    bc1 = 1.0 - cfg.beta1 ** t
    bc2 = 1.0 - cfg.beta2 ** t
    for p in params:
        g = p.value.grad
        if g is None:
            continue
        if not np.isfinite(g).all():
            raise NumericError(f"non-finite gradient in parameter {p.name!r}")
        p.m *= cfg.beta1
        p.m += (1.0 - cfg.beta1) * g
        p.v *= cfg.beta2
        p.v += (1.0 - cfg.beta2) * (g * g)
        m_hat = p.m / bc1
        v_hat = p.v / bc2
        p.value.data = p.value.data - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
        p.value.grad = None
