"""Layer forward passes vs naive oracles plus finite-difference gradients."""

import numpy as np
import pytest

from linkforge import nn
from linkforge.rng import Rng
from oracles import (
    conv2d_naive,
    fd_gradient,
    maxpool_v_naive,
    rel_err,
    upsample_v_naive,
)

FD_TOL = 2e-5


def random_shape(rng, max_b=4, max_h=12, max_w=4, max_c=4):
    b = 1 + rng.uniform(1)[0] * (max_b - 1)
    h = 1 + rng.uniform(1)[0] * (max_h - 1)
    w = 1 + rng.uniform(1)[0] * (max_w - 1)
    c = 1 + rng.uniform(1)[0] * (max_c - 1)
    return int(b), int(h), int(w), int(c)


class TestInputLayer:
    def test_adds_channel_axis(self):
        layer = nn.InputLayer(5, 2)
        x = Rng(1).normal((3, 5, 2), 1.0)
        y = layer.forward(x)
        assert y.shape == (3, 5, 2, 1)
        np.testing.assert_array_equal(y[..., 0], x)

    def test_backward_strips_axis(self):
        layer = nn.InputLayer(5, 2)
        layer.forward(Rng(1).normal((3, 5, 2), 1.0))
        g = Rng(2).normal((3, 5, 2, 1), 1.0)
        np.testing.assert_array_equal(layer.backward(g), g[..., 0])

    def test_shape_validation(self):
        layer = nn.InputLayer(5, 2)
        with pytest.raises(ValueError):
            layer.forward(np.zeros((3, 4, 2)))
        with pytest.raises(ValueError):
            layer.forward(np.zeros((3, 5)))
        with pytest.raises(ValueError):
            nn.InputLayer(0, 2)


class TestGaussianNoise:
    def test_infer_is_identity(self):
        layer = nn.GaussianNoise(0.7, Rng(9))
        x = Rng(1).normal((4, 6, 2, 1), 1.0)
        np.testing.assert_array_equal(layer.forward(x, "infer"), x)

    def test_train_adds_noise_with_matching_variance(self):
        layer = nn.GaussianNoise(0.5, Rng(9))
        x = np.zeros((200, 50, 2, 1))
        y = layer.forward(x, "train")
        assert abs(y.var() - 0.25) / 0.25 < 0.05

    def test_two_train_calls_differ(self):
        layer = nn.GaussianNoise(0.5, Rng(9))
        x = np.zeros((2, 4, 2, 1))
        y1 = layer.forward(x, "train")
        y2 = layer.forward(x, "train")
        assert np.abs(y1 - y2).max() > 1e-9

    def test_zero_sigma_identity_in_train(self):
        layer = nn.GaussianNoise(0.0, Rng(9))
        x = Rng(1).normal((2, 4, 2, 1), 1.0)
        np.testing.assert_array_equal(layer.forward(x, "train"), x)

    def test_backward_passthrough(self):
        layer = nn.GaussianNoise(0.5, Rng(9))
        g = Rng(2).normal((2, 4, 2, 1), 1.0)
        np.testing.assert_array_equal(layer.backward(g), g)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            nn.GaussianNoise(-0.1, Rng(9))


class TestConv2DForward:
    def test_matches_naive_oracle_many_shapes(self):
        rng = Rng(100)
        for trial in range(120):
            b, h, w, c_in = random_shape(rng)
            c_out = 1 + int(rng.uniform(1)[0] * 3)
            z = (1, 3, 5)[int(rng.uniform(1)[0] * 3)]
            layer = nn.Conv2D(c_in, c_out, z, activation="linear")
            layer.kernels[...] = rng.normal(layer.kernels.shape, 1.0)
            layer.bias[...] = rng.normal((c_out,), 1.0)
            x = rng.normal((b, h, w, c_in), 1.0)
            got = layer.forward(x)
            want = conv2d_naive(x, layer.kernels, layer.bias)
            assert rel_err(got, want) < 1e-9, f"trial {trial}"

    def test_tanh_applied(self):
        rng = Rng(101)
        layer = nn.Conv2D(2, 3, 3, activation="tanh")
        layer.kernels[...] = rng.normal(layer.kernels.shape, 1.0)
        layer.bias[...] = rng.normal((3,), 1.0)
        x = rng.normal((2, 6, 2, 2), 1.0)
        got = layer.forward(x)
        want = np.tanh(conv2d_naive(x, layer.kernels, layer.bias))
        assert rel_err(got, want) < 1e-9

    def test_identity_kernel(self):
        # A 1x1 kernel of weight 1 with zero bias copies the input channel.
        layer = nn.Conv2D(1, 1, 1, activation="linear")
        layer.kernels[0, 0, 0, 0] = 1.0
        x = Rng(102).normal((2, 5, 2, 1), 1.0)
        np.testing.assert_allclose(layer.forward(x), x)

    def test_validation(self):
        with pytest.raises(ValueError):
            nn.Conv2D(1, 1, 2)  # even kernel
        with pytest.raises(ValueError):
            nn.Conv2D(0, 1, 3)
        with pytest.raises(ValueError):
            nn.Conv2D(1, 1, 3, activation="relu")
        layer = nn.Conv2D(2, 1, 3)
        with pytest.raises(ValueError):
            layer.forward(np.zeros((1, 4, 2, 3)))


class TestMaxPoolVForward:
    def test_matches_naive_oracle_many_shapes(self):
        rng = Rng(110)
        for trial in range(120):
            b, h, w, c = random_shape(rng)
            s = 1 + int(rng.uniform(1)[0] * 3)
            layer = nn.MaxPoolV(s)
            x = rng.normal((b, h, w, c), 1.0)
            got = layer.forward(x)
            want = maxpool_v_naive(x, s)
            assert got.shape == want.shape
            assert rel_err(got, want) < 1e-12, f"trial {trial} h={h} s={s}"

    def test_partial_window(self):
        layer = nn.MaxPoolV(2)
        x = np.arange(10.0).reshape(1, 5, 2, 1)
        got = layer.forward(x)
        want = np.array([[[[2.0], [3.0]], [[6.0], [7.0]], [[8.0], [9.0]]]])
        np.testing.assert_array_equal(got, want)

    def test_validation(self):
        with pytest.raises(ValueError):
            nn.MaxPoolV(0)


class TestUpsampleVForward:
    def test_matches_naive_oracle_many_shapes(self):
        rng = Rng(120)
        for trial in range(120):
            b, h, w, c = random_shape(rng)
            s = 1 + int(rng.uniform(1)[0] * 3)
            layer = nn.UpsampleV(s)
            x = rng.normal((b, h, w, c), 1.0)
            got = layer.forward(x)
            want = upsample_v_naive(x, s)
            assert got.shape == want.shape
            assert rel_err(got, want) < 1e-12, f"trial {trial}"

    def test_pool_then_upsample_heights_telescope(self):
        # The vertical shape contract the model relies on: pooling by S
        # then upsampling by S restores the height for multiples of S.
        x = Rng(121).normal((2, 8, 2, 3), 1.0)
        down = nn.MaxPoolV(2).forward(x)
        up = nn.UpsampleV(2).forward(down)
        assert up.shape == x.shape

    def test_validation(self):
        with pytest.raises(ValueError):
            nn.UpsampleV(0)


class TestFlatten:
    def test_row_major_order(self):
        x = np.arange(24.0).reshape(1, 3, 4, 2)
        layer = nn.Flatten()
        np.testing.assert_array_equal(layer.forward(x)[0], np.arange(24.0))

    def test_backward_restores_shape(self):
        layer = nn.Flatten()
        x = Rng(130).normal((2, 3, 2, 4), 1.0)
        layer.forward(x)
        g = Rng(131).normal((2, 24), 1.0)
        assert layer.backward(g).shape == x.shape


class TestDenseForward:
    def test_matches_matmul_many_shapes(self):
        rng = Rng(140)
        for trial in range(100):
            n_in = 1 + int(rng.uniform(1)[0] * 15)
            n_out = 1 + int(rng.uniform(1)[0] * 15)
            b = 1 + int(rng.uniform(1)[0] * 5)
            layer = nn.Dense(n_in, n_out, activation="linear")
            layer.weights[...] = rng.normal(layer.weights.shape, 1.0)
            layer.bias[...] = rng.normal((n_out,), 1.0)
            x = rng.normal((b, n_in), 1.0)
            want = x @ layer.weights.T + layer.bias
            assert rel_err(layer.forward(x), want) < 1e-12

    def test_tanh(self):
        layer = nn.Dense(3, 2, activation="tanh")
        layer.weights[...] = Rng(141).normal((2, 3), 1.0)
        x = Rng(142).normal((4, 3), 1.0)
        np.testing.assert_allclose(
            layer.forward(x), np.tanh(x @ layer.weights.T)
        )

    def test_validation(self):
        with pytest.raises(ValueError):
            nn.Dense(0, 3)
        layer = nn.Dense(3, 2)
        with pytest.raises(ValueError):
            layer.forward(np.zeros((2, 4)))


def scalar_loss_through(layer, x, mode="infer"):
    """Deterministic scalar functional: weighted sum of layer output."""
    y = layer.forward(x, mode)
    w = np.cos(np.arange(y.size, dtype=np.float64)).reshape(y.shape)
    return float((y * w).sum()), w


class TestGradients:
    """Backward passes checked against central finite differences."""

    def check_input_grad(self, layer, x, tol=FD_TOL):
        _, w = scalar_loss_through(layer, x)
        layer.forward(x)
        got = layer.backward(w)

        def f(xv):
            return scalar_loss_through(layer, xv)[0]

        want = fd_gradient(f, x)
        assert rel_err(got, want) < tol

    def test_conv2d_input_and_param_grads(self):
        rng = Rng(200)
        for trial in range(100):
            b, h, w_, c_in = random_shape(rng, max_b=2, max_h=6, max_w=3, max_c=2)
            c_out = 1 + int(rng.uniform(1)[0] * 2)
            z = (1, 3)[int(rng.uniform(1)[0] * 2)]
            act = ("linear", "tanh")[int(rng.uniform(1)[0] * 2)]
            layer = nn.Conv2D(c_in, c_out, z, activation=act)
            layer.kernels[...] = rng.normal(layer.kernels.shape, 0.5)
            layer.bias[...] = rng.normal((c_out,), 0.5)
            x = rng.normal((b, h, w_, c_in), 1.0)

            _, wts = scalar_loss_through(layer, x)
            layer.zero_grads()
            layer.forward(x)
            got_dx = layer.backward(wts)

            def loss_of_x(xv):
                return scalar_loss_through(layer, xv)[0]

            assert rel_err(got_dx, fd_gradient(loss_of_x, x)) < FD_TOL

            def loss_of_k(kv):
                saved = layer.kernels.copy()
                layer.kernels[...] = kv
                out = scalar_loss_through(layer, x)[0]
                layer.kernels[...] = saved
                return out

            assert rel_err(
                layer.grads[0], fd_gradient(loss_of_k, layer.kernels)
            ) < FD_TOL

            def loss_of_b(bv):
                saved = layer.bias.copy()
                layer.bias[...] = bv
                out = scalar_loss_through(layer, x)[0]
                layer.bias[...] = saved
                return out

            assert rel_err(
                layer.grads[1], fd_gradient(loss_of_b, layer.bias)
            ) < FD_TOL

    def test_dense_input_and_param_grads(self):
        rng = Rng(210)
        for trial in range(100):
            n_in = 1 + int(rng.uniform(1)[0] * 7)
            n_out = 1 + int(rng.uniform(1)[0] * 7)
            b = 1 + int(rng.uniform(1)[0] * 3)
            act = ("linear", "tanh")[int(rng.uniform(1)[0] * 2)]
            layer = nn.Dense(n_in, n_out, activation=act)
            layer.weights[...] = rng.normal(layer.weights.shape, 0.5)
            layer.bias[...] = rng.normal((n_out,), 0.5)
            x = rng.normal((b, n_in), 1.0)

            _, wts = scalar_loss_through(layer, x)
            layer.zero_grads()
            layer.forward(x)
            got_dx = layer.backward(wts)

            def loss_of_x(xv):
                return scalar_loss_through(layer, xv)[0]

            assert rel_err(got_dx, fd_gradient(loss_of_x, x)) < FD_TOL

            def loss_of_w(wv):
                saved = layer.weights.copy()
                layer.weights[...] = wv
                out = scalar_loss_through(layer, x)[0]
                layer.weights[...] = saved
                return out

            assert rel_err(
                layer.grads[0], fd_gradient(loss_of_w, layer.weights)
            ) < FD_TOL

            def loss_of_b(bv):
                saved = layer.bias.copy()
                layer.bias[...] = bv
                out = scalar_loss_through(layer, x)[0]
                layer.bias[...] = saved
                return out

            assert rel_err(
                layer.grads[1], fd_gradient(loss_of_b, layer.bias)
            ) < FD_TOL

    def test_maxpool_grad(self):
        rng = Rng(220)
        for trial in range(100):
            b, h, w, c = random_shape(rng, max_b=2, max_h=8, max_w=3, max_c=2)
            s = 1 + int(rng.uniform(1)[0] * 3)
            layer = nn.MaxPoolV(s)
            # distinct values keep the argmax stable under FD perturbations
            x = rng.permutation(b * h * w * c).astype(np.float64)
            x = x.reshape(b, h, w, c) * 0.1
            self.check_input_grad(layer, x)

    def test_upsample_grad(self):
        rng = Rng(230)
        for trial in range(100):
            b, h, w, c = random_shape(rng, max_b=2, max_h=8, max_w=3, max_c=2)
            s = 1 + int(rng.uniform(1)[0] * 3)
            layer = nn.UpsampleV(s)
            x = rng.normal((b, h, w, c), 1.0)
            self.check_input_grad(layer, x)

    def test_flatten_grad(self):
        layer = nn.Flatten()
        x = Rng(240).normal((2, 4, 2, 3), 1.0)
        self.check_input_grad(layer, x)

    def test_grad_accumulation_until_zeroed(self):
        # two backward passes accumulate; zero_grads resets
        layer = nn.Dense(3, 2, activation="linear")
        layer.weights[...] = Rng(250).normal((2, 3), 1.0)
        x = Rng(251).normal((4, 3), 1.0)
        g = Rng(252).normal((4, 2), 1.0)
        layer.forward(x)
        layer.backward(g)
        once = layer.grads[0].copy()
        layer.forward(x)
        layer.backward(g)
        np.testing.assert_allclose(layer.grads[0], 2.0 * once)
        layer.zero_grads()
        assert not layer.grads[0].any()