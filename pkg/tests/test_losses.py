"""Loss functions: frozen scalar examples, the analytic Jaccard gradient
against finite differences, and the documented invariants."""

import numpy as np
import pytest

from lesiongan.losses import (
    LossWeights,
    bce,
    discriminator_loss,
    generator_loss,
    jaccard_distance,
    l1_loss,
    soft_jaccard_grad,
    soft_jaccard_loss,
)
from lesiongan.tensor import DomainError, Tensor


def t(arr):
    return Tensor(np.asarray(arr, dtype=np.float64))


def fd_soft_jaccard(g, p, i, step=1e-4):
    pp, pm = p.copy(), p.copy()
    pp.reshape(-1)[i] += step
    pm.reshape(-1)[i] -= step
    lp = soft_jaccard_loss(t(g), t(pp)).item()
    lm = soft_jaccard_loss(t(g), t(pm)).item()
    return (lp - lm) / (2 * step)


class TestJaccardDistance:
    def test_identical_masks(self):
        m = np.zeros((1, 1, 4, 4))
        m[0, 0, :2] = 1.0
        assert jaccard_distance(t(m), t(m)) == 0.0

    def test_disjoint_masks(self):
        a = np.zeros((1, 1, 2, 2))
        b = np.zeros((1, 1, 2, 2))
        a[0, 0, 0, 0] = 1.0
        b[0, 0, 1, 1] = 1.0
        assert jaccard_distance(t(a), t(b)) == 1.0

    def test_partial_overlap(self):
        gt = np.array([1.0, 1.0, 1.0, 0.0, 0.0])
        pd = np.array([1.0, 0.0, 0.0, 1.0, 0.0])
        assert jaccard_distance(t(gt), t(pd)) == pytest.approx(0.75)

    def test_both_empty(self):
        z = np.zeros((2, 2))
        assert jaccard_distance(t(z), t(z)) == 0.0

    def test_non_binary_rejected(self):
        with pytest.raises(DomainError):
            jaccard_distance(t([0.5, 1.0]), t([0.0, 1.0]))


class TestSoftJaccardLoss:
    def test_perfect_binary_prediction(self):
        m = np.zeros((1, 1, 3, 3))
        m[0, 0, 1] = 1.0
        assert soft_jaccard_loss(t(m), t(m)).item() == pytest.approx(0.0, abs=1e-6)

    def test_zero_prediction(self):
        gt = np.zeros((1, 1, 3, 3))
        gt[0, 0, 0, 0] = 1.0
        assert soft_jaccard_loss(t(gt), t(np.zeros_like(gt))).item() == pytest.approx(1.0, abs=1e-6)

    def test_reference_arithmetic(self):
        loss = soft_jaccard_loss(t([1.0, 0.0]), t([0.5, 0.5]))
        assert loss.item() == pytest.approx(0.5, abs=1e-6)

    def test_both_empty_is_zero(self):
        z = np.zeros((2, 3))
        assert soft_jaccard_loss(t(z), t(z)).item() == 0.0

    def test_range_and_binary_agreement(self, rng):
        for _ in range(50):
            g = (rng.random((1, 1, 5, 5)) > 0.5).astype(np.float64)
            p_soft = rng.random((1, 1, 5, 5))
            p_bin = (p_soft > 0.5).astype(np.float64)
            loss = soft_jaccard_loss(t(g), t(p_soft)).item()
            assert 0.0 <= loss <= 1.0
            np.testing.assert_allclose(
                soft_jaccard_loss(t(g), t(p_bin)).item(),
                jaccard_distance(t(g), t(p_bin)), atol=1e-6)

    def test_domain_enforced(self):
        with pytest.raises(DomainError):
            soft_jaccard_loss(t([1.2]), t([0.5]))
        with pytest.raises(DomainError):
            soft_jaccard_loss(t([1.0]), t([-0.1]))

    def test_permutation_invariance(self, rng):
        g = (rng.random(16) > 0.6).astype(np.float64)
        p = rng.random(16)
        perm = rng.permutation(16)
        a = soft_jaccard_loss(t(g), t(p)).item()
        b = soft_jaccard_loss(t(g[perm]), t(p[perm])).item()
        assert a == pytest.approx(b, abs=1e-12)


class TestSoftJaccardGrad:
    def test_zero_at_binary_optimum(self):
        m = np.zeros((1, 1, 3, 3))
        m[0, 0, 1] = 1.0
        grad = soft_jaccard_grad(t(m), t(m)).data
        np.testing.assert_allclose(grad, 0.0, atol=1e-6)

    def test_single_pixel_reference(self):
        grad = soft_jaccard_grad(t([1.0]), t([0.5])).data
        assert grad[0] == pytest.approx(-4.0 / 3.0, rel=1e-5)

    def test_matches_finite_differences(self, rng):
        worst = 0.0
        for _ in range(20):
            g = (rng.random((4, 4)) > 0.5).astype(np.float64)
            p = rng.uniform(1e-3, 1.0 - 1e-3, (4, 4))
            grad = soft_jaccard_grad(t(g), t(p)).data.reshape(-1)
            for i in rng.choice(16, size=4, replace=False):
                fd = fd_soft_jaccard(g, p, int(i))
                err = abs(grad[int(i)] - fd) / max(1.0, abs(fd))
                worst = max(worst, err)
        assert worst < 1e-4

    def test_matches_autodiff_backward(self, rng):
        g = (rng.random((3, 3)) > 0.5).astype(np.float64)
        p = rng.random((3, 3))
        pt = Tensor(p, requires_grad=True)
        soft_jaccard_loss(t(g), pt).backward()
        np.testing.assert_allclose(pt.grad, soft_jaccard_grad(t(g), t(p)).data,
                                   atol=1e-12)


class TestBce:
    def test_half_everywhere(self, rng):
        pred = t(np.full((2, 3), 0.5))
        target = t((rng.random((2, 3)) > 0.5).astype(np.float64))
        assert bce(pred, target).item() == pytest.approx(np.log(2.0), abs=1e-9)

    def test_perfect_prediction_near_zero(self):
        target = t([0.0, 1.0])
        assert bce(target, target).item() == pytest.approx(0.0, abs=1e-6)

    def test_wide_clamp_gates_gradient(self):
        # With the adversarial gate width, confident predictions sit on the
        # flat region of the clamp and contribute no gradient.
        pred = Tensor(np.full(4, 0.001), requires_grad=True)
        target = t(np.ones(4))
        bce(pred, target, eps=1e-2).backward()
        np.testing.assert_array_equal(pred.grad, 0.0)

    def test_scalar_reference(self):
        assert bce(t([0.9]), t([1.0])).item() == pytest.approx(-np.log(0.9), abs=1e-9)

    def test_extreme_predictions_finite(self):
        loss = bce(t([0.0, 1.0]), t([1.0, 0.0]))
        assert np.isfinite(loss.item())


class TestCompositeLosses:
    def test_generator_loss_reduces_to_bce(self, rng):
        d_out = Tensor(rng.uniform(0.2, 0.8, (2, 1, 2, 2)))
        fake = Tensor(rng.random((2, 1, 4, 4)))
        gt = Tensor((rng.random((2, 1, 4, 4)) > 0.5).astype(np.float64))
        w0 = LossWeights(0.0, 0.0)
        ones = Tensor(np.ones(d_out.shape))
        assert generator_loss(d_out, fake, gt, w0).item() == pytest.approx(
            bce(d_out, ones).item(), abs=1e-12)

    def test_generator_loss_at_optimum(self):
        gt = np.zeros((1, 1, 4, 4))
        gt[0, 0, :2] = 1.0
        d_out = Tensor(np.full((1, 1, 1, 1), 1.0 - 1e-9))
        loss = generator_loss(d_out, t(gt), t(gt), LossWeights(0.1, 0.5))
        assert loss.item() == pytest.approx(0.0, abs=0.02)

    def test_generator_loss_component_sum(self, rng):
        d_out = Tensor(rng.uniform(0.2, 0.8, (1, 1, 2, 2)))
        fake = Tensor(rng.random((1, 1, 4, 4)))
        gt = Tensor((rng.random((1, 1, 4, 4)) > 0.5).astype(np.float64))
        w = LossWeights(0.3, 0.7)
        ones = Tensor(np.ones(d_out.shape))
        expected = (bce(d_out, ones).item()
                    + 0.3 * l1_loss(gt, fake).item()
                    + 0.7 * soft_jaccard_loss(gt, fake).item())
        assert generator_loss(d_out, fake, gt, w).item() == pytest.approx(
            expected, abs=1e-6)

    def test_generator_loss_l1_monotonicity(self, rng):
        # Holding the other terms fixed, worse pixel agreement -> larger loss.
        gt = Tensor((rng.random((1, 1, 4, 4)) > 0.5).astype(np.float64))
        d_out = Tensor(np.full((1, 1, 1, 1), 0.5))
        w = LossWeights(1.0, 0.0)
        near = Tensor(np.clip(gt.data * 0.9 + 0.05, 0, 1))
        far = Tensor(np.clip(gt.data * 0.6 + 0.2, 0, 1))
        assert generator_loss(d_out, near, gt.detach(), w).item() < \
            generator_loss(d_out, far, gt.detach(), w).item()

    def test_discriminator_loss_values(self):
        half = Tensor(np.full((1, 1, 1, 1), 0.5))
        assert discriminator_loss(half, half).item() == pytest.approx(
            2 * np.log(2.0), abs=1e-9)
        good_real = Tensor(np.full((1, 1, 1, 1), 1.0 - 1e-9))
        good_fake = Tensor(np.full((1, 1, 1, 1), 1e-9))
        assert discriminator_loss(good_real, good_fake).item() == pytest.approx(
            0.0, abs=1e-6)
        assert discriminator_loss(
            Tensor(np.full((1, 1, 1, 1), 0.8)),
            Tensor(np.full((1, 1, 1, 1), 0.3))).item() == pytest.approx(
            -np.log(0.8) - np.log(0.7), abs=1e-9)

    def test_weights_validated(self):
        with pytest.raises(DomainError):
            LossWeights(-0.1, 0.5)
