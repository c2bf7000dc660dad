# -*- coding: utf-8 -*-

import numpy as np
import pytest

import core
from errors import ConfigError, DimensionError, StateError
from nn.gradcheck import GradientReport, error_floor, finite_difference_noise, gradient_check, relative_error
from nn.layers import (LayerSpec, Dense, Conv2D, BatchNorm, ReLU, Abs, EncodingNorm, Flatten, Reshape, Upsample,
                       build_layer)
from nn.network import Network
from nn.tensor import reflect_pad, reflect_unpad

SEEDS = range(10)


class TestForward:
    def test_relu(self):
        assert np.array_equal(ReLU().forward(np.array([[-1.0, 0.0, 2.0]])), [[0, 0, 2]])

    def test_abs(self):
        assert np.array_equal(Abs().forward(np.array([[-1.5, 0.5]])), [[1.5, 0.5]])

    def test_abs_from_column(self):
        out = Abs(start=1).forward(np.array([[-1.0, -2.0, 3.0]]))
        assert np.array_equal(out, [[-1, 2, 3]])

    def test_dense_identity(self):
        layer = Dense(3, 3)
        layer.params['W'] = np.eye(3)
        layer.params['b'] = np.zeros(3)
        v = np.array([[1.0, -2.0, 0.5]])
        assert np.array_equal(layer.forward(v), v)

    def test_dense_shape_mismatch(self):
        with pytest.raises(DimensionError):
            Dense(3, 2).forward(np.ones((4, 5)))

    def test_conv_one_hot_kernel_shifts(self, rng):
        layer = Conv2D(1, 1, 3, 1)
        layer.params['W'] = np.zeros((1, 1, 3, 3))
        layer.params['W'][0, 0, 0, 0] = 1.0
        layer.params['b'] = np.zeros(1)
        x = rng.standard_normal((1, 1, 7, 7))
        out = layer.forward(x)
        assert out.shape == x.shape
        assert np.array_equal(out[0, 0, 1:, 1:], x[0, 0, :-1, :-1])

    def test_conv_stride_shape(self, rng):
        out = Conv2D(2, 4, 3, 2).forward(rng.standard_normal((3, 2, 8, 8)))
        assert out.shape == (3, 4, 4, 4)

    def test_conv_channel_mismatch(self, rng):
        with pytest.raises(DimensionError):
            Conv2D(2, 4).forward(rng.standard_normal((1, 3, 8, 8)))

    def test_batch_norm_training_statistics(self, rng):
        x = 10.0 * rng.standard_normal((8, 5)) + 3.0
        out = BatchNorm(5).forward(x, training=True)
        assert np.all(np.abs(out.mean(axis=0)) <= 1e-6)
        assert np.all(np.abs(out.var(axis=0) - 1) <= 1e-5)

    def test_batch_norm_inference_uses_running_stats(self, rng):
        layer = BatchNorm(3)
        x = rng.standard_normal((8, 3)) + 2.0
        layer.forward(x, training=True)
        mean, var = layer.buffers['running_mean'], layer.buffers['running_var']
        assert np.allclose(mean, 0.1 * x.mean(axis=0))
        out = layer.forward(x, training=False)
        assert np.allclose(out, (x - mean) / np.sqrt(var + layer.epsilon))

    def test_upsample_reshape_flatten(self, rng):
        x = rng.standard_normal((2, 3, 2, 2))
        up = Upsample().forward(x)
        assert up.shape == (2, 3, 4, 4)
        assert np.array_equal(up[:, :, ::2, ::2], x)
        flat = Flatten().forward(x)
        assert flat.shape == (2, 12)
        assert np.array_equal(Reshape((3, 2, 2)).forward(flat), x)

    def test_forward_is_pure(self, rng):
        net = Network.from_specs([LayerSpec('conv2d', channels_in=1, channels_out=2, kernel=3),
                                  LayerSpec('batch-norm', units_in=2), LayerSpec('relu')], rng)
        x = rng.standard_normal((4, 1, 6, 6))
        assert np.array_equal(net.forward(x, training=False), net.forward(x, training=False))


class TestBackward:
    def test_relu_mask(self):
        layer = ReLU()
        layer.forward(np.array([[-1.0, 2.0]]))
        dx, _ = layer.backward(np.array([[1.0, 1.0]]))
        assert np.array_equal(dx, [[0, 1]])

    def test_dense_product_rule(self):
        layer = Dense(1, 1)
        layer.params['W'] = np.array([[3.0]])
        layer.params['b'] = np.zeros(1)
        layer.forward(np.array([[2.0]]))
        dx, grads = layer.backward(np.array([[1.0]]))
        assert dx[0, 0] == 3.0
        assert grads['W'][0, 0] == 2.0

    def test_backward_before_forward(self):
        with pytest.raises(StateError):
            Dense(2, 2).backward(np.ones((1, 2)))

    def test_reflect_unpad_is_adjoint(self, rng):
        x = rng.standard_normal((2, 3, 5, 6))
        y = rng.standard_normal((2, 3, 7, 8))
        assert np.isclose(np.sum(reflect_pad(x, 1) * y), np.sum(x * reflect_unpad(y, 1)))


def _positive_sigma_input(rng, batch, latent):
    return np.concatenate([rng.standard_normal((batch, latent)),
                           rng.uniform(0.5, 2.0, (batch, latent))], axis=1)


class TestGradientCheck:
    @pytest.mark.parametrize('seed', SEEDS)
    def test_dense_relu(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Dense(4, 3, rng), ReLU()])
        assert gradient_check(net, rng.standard_normal((4, 4)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_conv2d(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Conv2D(2, 3, 3, 1, rng)])
        report = gradient_check(net, rng.standard_normal((2, 2, 5, 5)), 1e-5, seed)
        assert report.passed, str(report)

    @pytest.mark.parametrize('seed', SEEDS)
    def test_strided_conv(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Conv2D(1, 2, 3, 2, rng)])
        assert gradient_check(net, rng.standard_normal((2, 1, 6, 6)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_batch_norm(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([BatchNorm(3)])
        net.layers[0].params['gamma'] = rng.uniform(0.5, 1.5, 3)
        assert gradient_check(net, rng.standard_normal((8, 3)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_spatial_batch_norm(self, seed):
        rng = np.random.default_rng(seed)
        assert gradient_check(Network([BatchNorm(2)]), rng.standard_normal((4, 2, 3, 3)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_batch_norm_inference(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([BatchNorm(3)])
        net.forward(rng.standard_normal((8, 3)), training=True)
        assert gradient_check(net, rng.standard_normal((8, 3)), 1e-4, seed, training=False).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_abs(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Dense(3, 4, rng), Abs(start=2)])
        assert gradient_check(net, rng.standard_normal((5, 3)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_encoding_norm(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([EncodingNorm(3)])
        assert gradient_check(net, _positive_sigma_input(rng, 8, 3), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_upsample_reshape(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Dense(3, 8, rng), Reshape((2, 2, 2)), Upsample(), Conv2D(2, 1, 3, 1, rng), Flatten()])
        assert gradient_check(net, rng.standard_normal((2, 3)), 1e-4, seed).passed

    @pytest.mark.parametrize('seed', SEEDS)
    def test_bias_before_batch_norm(self, seed):
        rng = np.random.default_rng(seed)
        net = Network([Dense(3, 4, rng), BatchNorm(4), ReLU()])
        report = gradient_check(net, rng.standard_normal((6, 3)), 1e-4, seed)
        assert report.passed, str(report)

    def test_zero_network_bias_path(self, rng):
        layer = Dense(4, 3)
        layer.params['W'] = np.zeros((4, 3))
        layer.params['b'] = np.zeros(3)
        report = gradient_check(Network([layer]), rng.standard_normal((4, 4)))
        assert report.errors[report.names.index('network.0.dense.b')] <= 1e-8

    def test_needs_64_bit_mode(self, rng):
        net = Network([Dense(2, 2, rng)])
        core.set_precision('float32')
        with pytest.raises(StateError):
            gradient_check(net, np.ones((2, 2)))

    def test_parameter_cap(self, rng):
        with pytest.raises(ConfigError):
            gradient_check(Network([Dense(10, 10, rng)]), np.ones((2, 10)), max_params=50)

    def test_report(self):
        report = GradientReport(1e-4)
        report.add('a', 1e-6)
        report.add('b', 2e-4)
        assert report.max_relative_error == 2e-4
        assert not report.passed
        assert all(e >= 0 for e in report.errors)

    def test_relative_error_of_equal_arrays(self):
        a = np.array([1.0, -2.0, 0.0])
        assert relative_error(a, a.copy()) == 0.0

    def test_rounding_noise_under_floor_passes(self):
        analytic = np.array([1e-14, 0.0])
        numeric = np.array([1e-8, -2e-8])
        noise = finite_difference_noise(50.0)
        floor = error_floor([analytic, numeric, np.array([3.0])], noise, 1e-4)
        assert relative_error(analytic, numeric, floor) <= 1e-4
        assert relative_error(analytic, numeric) > 0.5

    def test_real_error_still_detected(self):
        analytic = np.array([0.0, 2.0])
        numeric = np.array([1e-3, 2.0])
        floor = error_floor([analytic, numeric], finite_difference_noise(50.0), 1e-4)
        assert relative_error(analytic, numeric, floor) > 1e-4


class TestSpecs:
    @pytest.mark.parametrize('spec', [LayerSpec('conv2d', channels_in=1, channels_out=1, kernel=2),
                                      LayerSpec('conv2d', channels_in=1, channels_out=1, kernel=3, stride=0),
                                      LayerSpec('dense', units_in=0, units_out=2),
                                      LayerSpec('pool')])
    def test_invalid(self, spec):
        with pytest.raises(ConfigError):
            spec.validate()

    def test_build_layer(self, rng):
        layer = build_layer(LayerSpec('conv2d', channels_in=2, channels_out=4, kernel=5, stride=2), rng)
        assert isinstance(layer, Conv2D)
        assert layer.params['W'].shape == (4, 2, 5, 5)

    def test_network_names_and_buffers(self, rng):
        net = Network.from_specs([LayerSpec('dense', units_in=2, units_out=3),
                                  LayerSpec('batch-norm', units_in=3)], rng, name='enc')
        assert [n for n, _ in net.parameters()] == ['enc.0.dense.W', 'enc.0.dense.b',
                                                    'enc.1.batch-norm.gamma', 'enc.1.batch-norm.beta']
        net.set_buffer('enc.1.batch-norm.running_mean', np.full(3, 2.0))
        assert np.array_equal(dict(net.buffers())['enc.1.batch-norm.running_mean'], [2, 2, 2])
        assert net.parameter_count() == 2 * 3 + 3 + 3 + 3
