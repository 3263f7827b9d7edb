"""Adversarial, L1, and soft-Jaccard objectives.

The generator objective is the non-saturating adversarial term plus a
lambda-weighted mean absolute error and an alpha-weighted soft Jaccard
loss.  The soft Jaccard loss 1 - sum(g*p) / (sum(g^2) + sum(p^2) - sum(g*p))
is registered as an autodiff primitive whose backward pass is the analytic
per-pixel derivative, which the tests cross-check against finite
differences.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import (
    DimensionError,
    DomainError,
    Tensor,
    clamp,
    record_op,
    tabs,
    tlog,
    tmean,
)

# Keeps the Jaccard denominator finite when both masks are empty.
SMOOTH_EPS = 1e-7

# Default cross-entropy probability clamp: just enough to keep the logs
# finite.
CLAMP_EPS = 1e-7

# Wider clamp for the generator's adversarial term only.  Once the
# discriminator is more than 99% sure a mask is fake, the term goes flat,
# which stops a saturated discriminator from swamping the segmentation
# gradients; it re-engages when generated masks become confusable.
ADVERSARIAL_GATE_EPS = 1e-2


@dataclass
class LossWeights:
    """Empirical weights for the L1 and Jaccard terms."""

    lam: float = 0.1
    alpha: float = 0.5

    def __post_init__(self):
        if self.lam < 0 or self.alpha < 0:
            raise DomainError("loss weights must be nonnegative")


def _check_same_shape(a: Tensor, b: Tensor, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"{what}: shapes {a.shape} and {b.shape} disagree")


def jaccard_distance(gt: Tensor, pred: Tensor) -> float:
    """1 - |intersection| / |union| over strictly binary masks."""
    _check_same_shape(gt, pred, "jaccard_distance")
    for name, t in (("gt", gt), ("pred", pred)):
        vals = t.data
        if not np.all((vals == 0.0) | (vals == 1.0)):
            raise DomainError(f"jaccard_distance requires binary {name} values")
    inter = float((gt.data * pred.data).sum())
    union = float(gt.data.sum() + pred.data.sum() - inter)
    if union == 0.0:
        return 0.0  # both masks empty: perfect agreement by convention
    return 1.0 - inter / union


def _soft_jaccard_parts(g: np.ndarray, p: np.ndarray) -> tuple[float, float]:
    inter = float((g * p).sum())
    denom = float((g * g).sum() + (p * p).sum() - inter)
    return inter, denom


def _check_unit_range(t: Tensor, name: str) -> None:
    if t.data.size and (t.data.min() < 0.0 or t.data.max() > 1.0):
        raise DomainError(f"{name} values must lie in [0,1]")


def soft_jaccard_loss(gt: Tensor, pred: Tensor) -> Tensor:
    """Differentiable Jaccard surrogate; backward uses the analytic rule."""
    _check_same_shape(gt, pred, "soft_jaccard_loss")
    _check_unit_range(gt, "gt")
    _check_unit_range(pred, "pred")
    g, p = gt.data, pred.data
    inter, denom = _soft_jaccard_parts(g, p)
    if denom == 0.0:
        # Both masks identically zero: zero loss, zero gradient.
        out = np.zeros((), dtype=p.dtype)
        return record_op(out, (gt, pred), lambda up: (None, np.zeros_like(p)))
    u = denom + SMOOTH_EPS
    loss = np.asarray(1.0 - inter / u, dtype=p.dtype)

    def vjp(up):
        upstream = float(up.reshape(-1)[0])
        dp = (-g * u + (2.0 * p - g) * inter) / (u * u)
        return (None, upstream * dp.astype(p.dtype))

    return record_op(loss, (gt, pred), vjp)


def soft_jaccard_grad(gt: Tensor, pred: Tensor) -> Tensor:
    """Stand-alone analytic per-pixel derivative of soft_jaccard_loss."""
    _check_same_shape(gt, pred, "soft_jaccard_grad")
    _check_unit_range(gt, "gt")
    _check_unit_range(pred, "pred")
    g, p = gt.data, pred.data
    inter, denom = _soft_jaccard_parts(g, p)
    if denom == 0.0:
        return Tensor(np.zeros_like(p))
    u = denom + SMOOTH_EPS
    return Tensor((-g * u + (2.0 * p - g) * inter) / (u * u))


def bce(pred: Tensor, target: Tensor, eps: float = CLAMP_EPS) -> Tensor:
    """Mean binary cross-entropy with probability clamping."""
    _check_same_shape(pred, target, "bce")
    p = clamp(pred, eps, 1.0 - eps)
    loss = -(target * tlog(p) + (1.0 - target) * tlog(1.0 - p))
    return tmean(loss)


def l1_loss(a: Tensor, b: Tensor) -> Tensor:
    """Mean absolute difference (resolution-independent)."""
    _check_same_shape(a, b, "l1_loss")
    return tmean(tabs(a - b))


def generator_loss(disc_out_on_fake: Tensor, fake_mask: Tensor,
                   gt_mask: Tensor, w: LossWeights) -> Tensor:
    """Adversarial BCE against ones + lam * L1 + alpha * soft Jaccard."""
    ones = Tensor(np.ones(disc_out_on_fake.shape, dtype=disc_out_on_fake.data.dtype))
    total = bce(disc_out_on_fake, ones, eps=ADVERSARIAL_GATE_EPS)
    if w.lam:
        total = total + w.lam * l1_loss(gt_mask, fake_mask)
    if w.alpha:
        total = total + w.alpha * soft_jaccard_loss(gt_mask, fake_mask)
    return total


def discriminator_loss(disc_out_on_real: Tensor, disc_out_on_fake: Tensor) -> Tensor:
    """BCE pushing real pairs toward 1 and generated pairs toward 0."""
    ones = Tensor(np.ones(disc_out_on_real.shape, dtype=disc_out_on_real.data.dtype))
    zeros = Tensor(np.zeros(disc_out_on_fake.shape, dtype=disc_out_on_fake.data.dtype))
    return bce(disc_out_on_real, ones) + bce(disc_out_on_fake, zeros)
