import numpy as np
import pytest

from songseg import layers
from songseg.oracles import finite_difference, relative_error

GRAD_TOL = 1e-4


class TestConv2d:
    def test_identity_1x1(self):
        x = np.arange(24, dtype=np.float64).reshape(1, 1, 4, 6)
        w = np.ones((1, 1, 1, 1))
        b = np.zeros(1)
        y, _ = layers.conv2d_forward(x, w, b)
        np.testing.assert_array_equal(y, x)

    def test_shape_preserving_first_layer(self):
        # kernel 5x7, stride 1, padding 2x3 keeps both dimensions
        x = np.zeros((1, 1, 180, 37))
        w = np.zeros((32, 1, 5, 7))
        y, _ = layers.conv2d_forward(x, w, np.zeros(32), (1, 1), (2, 3))
        assert y.shape == (1, 32, 180, 37)

    def test_dilated_layer_shape(self):
        # kernel 3x5, padding 1x6, dilation 1x3 keeps both dimensions
        x = np.zeros((1, 32, 16, 91))
        w = np.zeros((64, 32, 3, 5))
        y, _ = layers.conv2d_forward(x, w, np.zeros(64), (1, 1), (1, 6), (1, 3))
        assert y.shape == (1, 64, 16, 91)

    def test_all_ones_kernel_interior(self):
        c = 1.7
        x = np.full((1, 1, 6, 6), c)
        w = np.ones((1, 1, 3, 3))
        y, _ = layers.conv2d_forward(x, w, np.zeros(1), (1, 1), (0, 0))
        np.testing.assert_allclose(y, 9 * c)

    def test_bias_applied(self):
        x = np.zeros((1, 1, 3, 3))
        w = np.zeros((2, 1, 1, 1))
        y, _ = layers.conv2d_forward(x, w, np.array([0.5, -1.0]))
        assert np.all(y[0, 0] == 0.5)
        assert np.all(y[0, 1] == -1.0)

    def test_channel_mismatch(self):
        with pytest.raises(ValueError):
            layers.conv2d_forward(np.zeros((1, 3, 4, 4)),
                                  np.zeros((2, 2, 1, 1)), np.zeros(2))

    @pytest.mark.parametrize("stride,pad,dilation", [
        ((1, 1), (1, 1), (1, 1)),
        ((2, 1), (0, 2), (1, 1)),
        ((1, 1), (1, 6), (1, 3)),
    ])
    def test_gradients_match_finite_differences(self, stride, pad, dilation):
        rng = np.random.default_rng(hash((stride, pad, dilation)) % 2**32)
        x = rng.standard_normal((1, 2, 8, 10))
        w = rng.standard_normal((3, 2, 3, 5)) * 0.4
        b = rng.standard_normal(3) * 0.1
        y, cache = layers.conv2d_forward(x, w, b, stride, pad, dilation)
        upstream = rng.standard_normal(y.shape)
        gx, gw, gb = layers.conv2d_backward(upstream, cache)

        def loss_of(which):
            def f(v):
                args = {"x": x, "w": w, "b": b}
                args[which] = v
                out, _ = layers.conv2d_forward(args["x"], args["w"], args["b"],
                                               stride, pad, dilation)
                return float((out * upstream).sum())
            return f

        assert relative_error(gx, finite_difference(loss_of("x"), x)) < GRAD_TOL
        assert relative_error(gw, finite_difference(loss_of("w"), w)) < GRAD_TOL
        assert relative_error(gb, finite_difference(loss_of("b"), b)) < GRAD_TOL


class TestLeakyRelu:
    def test_values(self):
        x = np.array([-2.0, 0.0, 3.0])
        y, _ = layers.leaky_relu_forward(x)
        np.testing.assert_allclose(y, [-0.02, 0.0, 3.0])

    def test_nonnegative_passthrough(self, rng):
        x = np.abs(rng.standard_normal((1, 2, 3, 4)))
        y, _ = layers.leaky_relu_forward(x)
        np.testing.assert_array_equal(y, x)

    def test_gradient(self, rng):
        x = rng.standard_normal(50) + 0.01  # keep clear of the kink
        y, cache = layers.leaky_relu_forward(x)
        upstream = rng.standard_normal(50)
        analytic = layers.leaky_relu_backward(upstream, cache)

        def loss(v):
            out, _ = layers.leaky_relu_forward(v)
            return float((out * upstream).sum())

        assert relative_error(analytic, finite_difference(loss, x)) < GRAD_TOL


class TestMaxPool:
    def test_height_eighty_pools_to_sixteen(self):
        y, _ = layers.maxpool2d_forward(np.zeros((1, 4, 80, 33)))
        assert y.shape == (1, 4, 16, 33)

    def test_width_preserved(self, rng):
        x = rng.standard_normal((1, 2, 23, 57))
        y, _ = layers.maxpool2d_forward(x)
        assert y.shape[3] == 57

    def test_constant_input(self):
        x = np.full((1, 1, 10, 8), 4.25)
        y, _ = layers.maxpool2d_forward(x)
        assert np.all(y == 4.25)

    def test_gradient_routes_to_argmax(self, rng):
        x = rng.standard_normal((1, 2, 11, 9))
        y, cache = layers.maxpool2d_forward(x)
        upstream = rng.standard_normal(y.shape)
        analytic = layers.maxpool2d_backward(upstream, cache)

        def loss(v):
            out, _ = layers.maxpool2d_forward(v)
            return float((out * upstream).sum())

        assert relative_error(analytic, finite_difference(loss, x)) < GRAD_TOL


class TestCollapseFreq:
    def test_shape(self):
        y, _ = layers.collapse_freq_forward(np.zeros((1, 64, 16, 100)))
        assert y.shape == (1, 1024, 1, 100)

    def test_roundtrip(self, rng):
        x = rng.standard_normal((1, 3, 4, 5))
        y, cache = layers.collapse_freq_forward(x)
        back = layers.collapse_freq_backward(y, cache)
        np.testing.assert_array_equal(back, x)

    def test_channel_placement_rule(self):
        x = np.zeros((1, 2, 3, 4))
        x[0, 1, 2, 0] = 7.0  # channel c=1, height h=2 -> flat channel c*H+h=5
        y, _ = layers.collapse_freq_forward(x)
        assert y[0, 5, 0, 0] == 7.0


class TestBceWithLogits:
    def test_symmetric_point(self):
        loss, _ = layers.bce_with_logits(np.zeros(4), np.full(4, 0.5))
        assert loss == pytest.approx(np.log(2.0), abs=1e-12)

    def test_worked_value(self):
        loss, _ = layers.bce_with_logits(np.array([2.0]), np.array([1.0]))
        assert loss == pytest.approx(np.log1p(np.exp(-2.0)), abs=1e-12)

    def test_overflow_stability(self):
        loss, grad = layers.bce_with_logits(np.array([1000.0]), np.array([1.0]))
        assert loss == pytest.approx(0.0, abs=1e-12)
        assert np.all(np.isfinite(grad))

    def test_target_domain(self):
        with pytest.raises(ValueError):
            layers.bce_with_logits(np.zeros(2), np.array([0.5, 1.2]))

    def test_matches_naive_form(self, rng):
        z = rng.uniform(-20.0, 20.0, 200)
        y = rng.uniform(0.0, 1.0, 200)
        loss, _ = layers.bce_with_logits(z, y)
        sig = 1.0 / (1.0 + np.exp(-z))
        naive = float(np.mean(-(y * np.log(sig) + (1 - y) * np.log(1 - sig))))
        assert loss == pytest.approx(naive, abs=1e-10)

    def test_gradient(self, rng):
        z = rng.standard_normal(30)
        y = rng.uniform(0.0, 1.0, 30)
        _, grad = layers.bce_with_logits(z, y)

        def loss(v):
            out, _ = layers.bce_with_logits(v, y)
            return out

        assert relative_error(grad, finite_difference(loss, z)) < GRAD_TOL
