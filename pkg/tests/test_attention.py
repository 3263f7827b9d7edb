"""Channel and position attention against direct loop oracles."""

import numpy as np
import pytest

from lesiongan.attention import ChannelAttention, PositionAttention
from lesiongan.tensor import ConfigurationError, Tensor, tsum

from oracles import channel_attention_oracle, check_gradients, position_attention_oracle


def make_cam(gamma=0.0):
    cam = ChannelAttention()
    cam.gamma.value.data = np.asarray(gamma, dtype=np.float64)
    return cam


def make_pam(channels, eta=0.0, rng=None):
    pam = PositionAttention(channels, rng=rng or np.random.default_rng(0))
    pam.eta.value.data = np.asarray(eta, dtype=np.float64)
    pam.eval()  # running stats: deterministic branch outputs
    return pam


class TestChannelAttention:
    def test_identity_at_initialization(self, rng):
        cam = ChannelAttention()
        x = Tensor(rng.standard_normal((2, 5, 3, 4)))
        out = cam(x)
        np.testing.assert_array_equal(out.data, x.data)

    def test_single_channel(self, rng):
        cam = make_cam(gamma=0.7)
        x = Tensor(rng.standard_normal((1, 1, 3, 3)))
        amap = cam.attention_map(x)
        np.testing.assert_allclose(amap.data, 1.0)
        np.testing.assert_allclose(cam(x).data, (1 + 0.7) * x.data, atol=1e-12)

    def test_matches_loop_oracle(self, rng):
        cam = make_cam(gamma=0.5)
        x = rng.standard_normal((1, 3, 2, 2))
        out = cam(Tensor(x))
        expected = channel_attention_oracle(x[0].reshape(3, 4), 0.5).reshape(1, 3, 2, 2)
        np.testing.assert_allclose(out.data, expected, atol=1e-6)

    def test_matches_loop_oracle_random(self, rng):
        for _ in range(20):
            c = int(rng.integers(1, 5))
            h, w = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            gamma = float(rng.normal())
            x = rng.standard_normal((1, c, h, w))
            out = make_cam(gamma)(Tensor(x))
            expected = channel_attention_oracle(
                x[0].reshape(c, h * w), gamma).reshape(1, c, h, w)
            np.testing.assert_allclose(out.data, expected, atol=1e-6)

    def test_attention_rows_stochastic(self, rng):
        cam = make_cam(0.3)
        amap = cam.attention_map(Tensor(rng.standard_normal((2, 4, 3, 3))))
        np.testing.assert_allclose(amap.data.sum(axis=-1), 1.0, atol=1e-6)

    def test_shape_preserved(self, rng):
        for shape in [(1, 1, 1, 1), (2, 3, 4, 5), (1, 7, 2, 6)]:
            x = Tensor(rng.standard_normal(shape))
            assert make_cam(0.2)(x).shape == shape

    def test_permutation_equivariant_over_positions(self, rng):
        cam = make_cam(0.4)
        x = rng.standard_normal((1, 3, 2, 3))
        perm = rng.permutation(6)
        flat = x.reshape(1, 3, 6)
        out = cam(Tensor(x)).data.reshape(1, 3, 6)
        out_perm = cam(Tensor(flat[:, :, perm].reshape(1, 3, 2, 3))).data.reshape(1, 3, 6)
        np.testing.assert_allclose(out_perm, out[:, :, perm], atol=1e-10)

    def test_gamma_gradient(self, rng):
        x = rng.standard_normal((1, 3, 2, 2))

        def forward(ts):
            cam = ChannelAttention()
            cam.gamma = type(cam.gamma)(ts[1])
            return tsum(cam(ts[0]) ** 2)

        check_gradients(forward, [x, np.asarray(0.3)], rng)


class TestPositionAttention:
    def test_identity_at_initialization(self, rng):
        pam = PositionAttention(4, rng=np.random.default_rng(3))
        x = Tensor(rng.standard_normal((2, 4, 3, 3)))
        np.testing.assert_array_equal(pam(x).data, x.data)
        pam.eval()
        np.testing.assert_array_equal(pam(x).data, x.data)

    def test_single_position(self, rng):
        pam = make_pam(3, eta=0.25)
        x = Tensor(rng.standard_normal((1, 3, 1, 1)))
        value = pam.value_branch(x)
        expected = 0.25 * value.data + x.data
        np.testing.assert_allclose(pam(x).data, expected, atol=1e-12)

    def test_matches_loop_oracle(self, rng):
        pam = make_pam(2, eta=0.3, rng=np.random.default_rng(11))
        x = rng.standard_normal((1, 2, 3, 3))
        xt = Tensor(x)
        key = pam.key_branch(xt).data[0].reshape(2, 9)
        query = pam.query_branch(xt).data[0].reshape(2, 9)
        value = pam.value_branch(xt).data[0].reshape(2, 9)
        expected = position_attention_oracle(
            x[0].reshape(2, 9), key, query, value, 0.3).reshape(1, 2, 3, 3)
        np.testing.assert_allclose(pam(xt).data, expected, atol=1e-6)

    def test_matches_loop_oracle_random(self, rng):
        for trial in range(10):
            c = int(rng.integers(1, 4))
            h, w = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            eta = float(rng.normal())
            pam = make_pam(c, eta=eta, rng=np.random.default_rng(trial))
            x = rng.standard_normal((1, c, h, w))
            xt = Tensor(x)
            key = pam.key_branch(xt).data[0].reshape(c, h * w)
            query = pam.query_branch(xt).data[0].reshape(c, h * w)
            value = pam.value_branch(xt).data[0].reshape(c, h * w)
            expected = position_attention_oracle(
                x[0].reshape(c, h * w), key, query, value, eta).reshape(1, c, h, w)
            np.testing.assert_allclose(pam(xt).data, expected, atol=1e-6)

    def test_shape_preserved(self, rng):
        pam = make_pam(3, eta=0.1)
        for shape in [(1, 3, 1, 1), (2, 3, 4, 2), (1, 3, 5, 5)]:
            assert pam(Tensor(rng.standard_normal(shape))).shape == shape

    def test_position_cap_enforced(self, rng):
        pam = make_pam(1, eta=0.1)
        with pytest.raises(ConfigurationError, match="positions"):
            pam(Tensor(np.zeros((1, 1, 256, 256))))

    def test_channel_mismatch(self, rng):
        pam = make_pam(3)
        with pytest.raises(ConfigurationError):
            pam(Tensor(rng.standard_normal((1, 2, 3, 3))))

    def test_eta_and_branch_gradients(self, rng):
        pam = PositionAttention(2, rng=np.random.default_rng(5))
        pam.eta.value.data = np.asarray(0.3)
        pam.eval()
        x = rng.standard_normal((1, 2, 2, 2))
        conv_w = pam.key_branch.conv.weight.data.copy()

        def forward(ts):
            pam.eta.value = ts[1]
            pam.eta.value.requires_grad = True
            pam.key_branch.conv.weight.value = ts[2]
            ts[2].requires_grad = True
            return tsum(pam(ts[0]) ** 2)

        check_gradients(forward, [x, np.asarray(0.3), conv_w], rng)
