# -*- coding: utf-8 -*-

import abc
from dataclasses import dataclass
from typing import Dict, Tuple, Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

import config as cfg
import core
from errors import ConfigError, DimensionError, StateError, BatchTooSmallError

from .tensor import check_ndim, fan_in_uniform, reflect_pad, reflect_unpad

LAYER_KINDS = ('dense', 'conv2d', 'batch-norm', 'relu', 'abs', 'encoding-norm',
               'flatten', 'reshape', 'upsample')


@dataclass(frozen=True)
class LayerSpec:
    """ Describes a layer: its kind and size parameters.
    """
    kind: str
    units_in: int = 0
    units_out: int = 0
    channels_in: int = 0
    channels_out: int = 0
    kernel: int = 1
    stride: int = 1
    start: int = 0  # abs: first rectified column
    shape: Tuple[int, ...] = ()  # reshape: per-example target shape
    lambda_mu: float = cfg.LAMBDA_MU
    epsilon: float = cfg.EPSILON_BN

    def validate(self) -> None:
        if self.kind not in LAYER_KINDS:
            raise ConfigError("Unknown layer kind '{}'. Kinds are {}".format(self.kind, LAYER_KINDS))
        if self.kind == 'dense' and (self.units_in < 1 or self.units_out < 1):
            raise ConfigError('dense units must be >= 1, got {} -> {}'.format(self.units_in, self.units_out))
        if self.kind == 'conv2d':
            if self.kernel < 1 or self.kernel % 2 == 0:
                raise ConfigError('conv2d kernel extent must be odd and >= 1, got {}'.format(self.kernel))
            if self.stride < 1:
                raise ConfigError('conv2d stride must be >= 1, got {}'.format(self.stride))
            if self.channels_in < 1 or self.channels_out < 1:
                raise ConfigError('conv2d channels must be >= 1')
        if self.kind == 'batch-norm' and self.units_in < 1:
            raise ConfigError('batch-norm needs the feature count in units_in')
        if self.kind == 'encoding-norm' and self.units_in < 1:
            raise ConfigError('encoding-norm needs the latent size in units_in')


class Layer(abc.ABC):
    """ Abstract layer with explicit forward and backward passes.
    forward() caches what backward() needs; backward() fills self.grads.
    """
    kind = None

    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}
        self.buffers: Dict[str, np.ndarray] = {}
        self._cache = None

    def __call__(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        return self.forward(x, training)

    def __repr__(self):
        return '{}<{}>'.format(self.__class__.__name__, ', '.join(
            '{}={}'.format(k, v.shape) for k, v in self.params.items()))

    @abc.abstractmethod
    def forward(self, x: np.ndarray, training: bool = True) -> np.ndarray:
        pass

    @abc.abstractmethod
    def _backward(self, dout: np.ndarray, cache) -> np.ndarray:
        pass

    def backward(self, dout: np.ndarray) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """ Returns (input gradient, parameter gradients) for the last forward pass.
        """
        if self._cache is None:
            raise StateError('{}: backward called before forward'.format(self.__class__.__name__))
        dx = self._backward(dout, self._cache)
        return dx, self.grads


# --- Functional conv2d, shared by the Conv2D layer and the Sobel operator ---

def conv2d_forward(x: np.ndarray, w: np.ndarray, b: Optional[np.ndarray], stride: int = 1):
    """ Cross-correlation of x (N, C, H, W) with w (O, C, k, k), reflect padding,
    output (N, O, ceil(H / stride), ceil(W / stride)).
    """
    check_ndim(x, (4,), 'conv2d')
    if x.shape[1] != w.shape[1]:
        raise DimensionError('conv2d expects {} input channels, got {}'.format(w.shape[1], x.shape[1]))
    k = w.shape[-1]
    pad = k // 2
    xp = reflect_pad(x, pad)
    win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    out = np.tensordot(win, w, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    if b is not None:
        out = out + b[None, :, None, None]
    return np.ascontiguousarray(out), (x.shape, xp.shape, win, w, stride)


def conv2d_backward(dout: np.ndarray, cache):
    x_shape, xp_shape, win, w, stride = cache
    k = w.shape[-1]
    pad = k // 2
    ho, wo = dout.shape[2:]
    dw = np.tensordot(dout, win, axes=([0, 2, 3], [0, 2, 3]))
    db = dout.sum(axis=(0, 2, 3))
    dwin = np.tensordot(dout, w, axes=([1], [0]))  # N, ho, wo, C, k, k
    dxp = np.zeros(xp_shape, dtype=dout.dtype)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i:i + stride * (ho - 1) + 1:stride, j:j + stride * (wo - 1) + 1:stride] += \
                dwin[:, :, :, :, i, j].transpose(0, 3, 1, 2)
    dx = reflect_unpad(dxp, pad)
    assert dx.shape == tuple(x_shape)
    return dx, dw, db


# --- Functional encoding normalization (batch statistics) ---

def encoding_norm_forward(mu: np.ndarray, sigma: np.ndarray, lambda_mu: float, epsilon: float):
    """ mu <- lambda_mu (mu - mean) / (std + eps); sigma <- sigma / (2 std(sigma) + eps),
    population statistics per feature over the batch axis.
    """
    batch = mu.shape[0]
    if batch < 2:
        raise BatchTooSmallError('Encoding normalization needs a batch of at least 2, got {}'.format(batch))
    centered = mu - mu.mean(axis=0)
    mu_std = np.sqrt(np.mean(centered ** 2, axis=0))
    sigma_c = sigma - sigma.mean(axis=0)
    sigma_std = np.sqrt(np.mean(sigma_c ** 2, axis=0))
    mu_den = mu_std + epsilon
    sigma_den = 2 * sigma_std + epsilon
    mu_out = lambda_mu * centered / mu_den
    sigma_out = sigma / sigma_den
    cache = (centered, mu_std, mu_den, sigma, sigma_c, sigma_std, sigma_den, lambda_mu)
    return mu_out, sigma_out, cache


def encoding_norm_backward(dmu_out: np.ndarray, dsigma_out: np.ndarray, cache):
    centered, mu_std, mu_den, sigma, sigma_c, sigma_std, sigma_den, lambda_mu = cache
    batch = centered.shape[0]
    # d std / d x_k = (x_k - mean) / (B std), zero for degenerate features
    dstd_mu = np.divide(centered, batch * mu_std, out=np.zeros_like(centered), where=mu_std > 0)
    dstd_sigma = np.divide(sigma_c, batch * sigma_std, out=np.zeros_like(sigma_c), where=sigma_std > 0)

    dmu = lambda_mu / mu_den * (dmu_out - dmu_out.mean(axis=0)) \
        - lambda_mu / mu_den ** 2 * np.sum(dmu_out * centered, axis=0) * dstd_mu
    dsigma = dsigma_out / sigma_den \
        - 2 / sigma_den ** 2 * np.sum(dsigma_out * sigma, axis=0) * dstd_sigma
    return dmu, dsigma


class Dense(Layer):
    kind = 'dense'

    def __init__(self, units_in: int, units_out: int, rng: np.random.Generator = None):
        super().__init__()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.units_in = units_in
        self.units_out = units_out
        self.params['W'] = fan_in_uniform(rng, (units_in, units_out), units_in)
        self.params['b'] = fan_in_uniform(rng, (units_out,), units_in)

    def forward(self, x, training=True):
        check_ndim(x, (2,), 'dense')
        if x.shape[1] != self.units_in:
            raise DimensionError('dense expects {} input units, got {}'.format(self.units_in, x.shape[1]))
        self._cache = x
        return x @ self.params['W'] + self.params['b']

    def _backward(self, dout, x):
        self.grads['W'] = x.T @ dout
        self.grads['b'] = dout.sum(axis=0)
        return dout @ self.params['W'].T


class Conv2D(Layer):
    """ 2D convolution (cross-correlation) with same-size reflect padding
    and an integer stride.
    """
    kind = 'conv2d'

    def __init__(self, channels_in: int, channels_out: int, kernel: int = 3, stride: int = 1,
                 rng: np.random.Generator = None):
        super().__init__()
        LayerSpec('conv2d', channels_in=channels_in, channels_out=channels_out, kernel=kernel, stride=stride).validate()
        rng = rng if rng is not None else np.random.default_rng(0)
        self.stride = stride
        fan_in = channels_in * kernel * kernel
        self.params['W'] = fan_in_uniform(rng, (channels_out, channels_in, kernel, kernel), fan_in)
        self.params['b'] = fan_in_uniform(rng, (channels_out,), fan_in)

    def forward(self, x, training=True):
        out, self._cache = conv2d_forward(x, self.params['W'], self.params['b'], self.stride)
        return out

    def _backward(self, dout, cache):
        dx, self.grads['W'], self.grads['b'] = conv2d_backward(dout, cache)
        return dx


class BatchNorm(Layer):
    """ Batch normalization over the batch axis (and spatial axes for 4D input).
    Training mode uses batch statistics and updates the running averages;
    inference mode uses the running averages.
    """
    kind = 'batch-norm'

    def __init__(self, features: int, epsilon: float = cfg.BN_EPSILON, momentum: float = cfg.BN_MOMENTUM):
        super().__init__()
        self.features = features
        self.epsilon = epsilon
        self.momentum = momentum
        self.params['gamma'] = np.ones(features, dtype=core.DTYPE)
        self.params['beta'] = np.zeros(features, dtype=core.DTYPE)
        self.buffers['running_mean'] = np.zeros(features, dtype=core.DTYPE)
        self.buffers['running_var'] = np.ones(features, dtype=core.DTYPE)

    def _axes(self, x):
        check_ndim(x, (2, 4), 'batch-norm')
        if x.shape[1] != self.features:
            raise DimensionError('batch-norm expects {} features, got {}'.format(self.features, x.shape[1]))
        return (0,) if x.ndim == 2 else (0, 2, 3)

    def _bcast(self, v, ndim):
        return v if ndim == 2 else v[None, :, None, None]

    def forward(self, x, training=True):
        axes = self._axes(x)
        if training:
            mean = x.mean(axis=axes)
            var = x.var(axis=axes)
            self.buffers['running_mean'] = self.momentum * self.buffers['running_mean'] + (1 - self.momentum) * mean
            self.buffers['running_var'] = self.momentum * self.buffers['running_var'] + (1 - self.momentum) * var
        else:
            mean = self.buffers['running_mean']
            var = self.buffers['running_var']
        inv_std = 1.0 / np.sqrt(var + self.epsilon)
        xhat = (x - self._bcast(mean, x.ndim)) * self._bcast(inv_std, x.ndim)
        self._cache = (xhat, inv_std, axes, training)
        return xhat * self._bcast(self.params['gamma'], x.ndim) + self._bcast(self.params['beta'], x.ndim)

    def _backward(self, dout, cache):
        xhat, inv_std, axes, training = cache
        nd = dout.ndim
        self.grads['gamma'] = np.sum(dout * xhat, axis=axes)
        self.grads['beta'] = dout.sum(axis=axes)
        dxhat = dout * self._bcast(self.params['gamma'], nd)
        if not training:
            return dxhat * self._bcast(inv_std, nd)
        m = dout.size // dout.shape[1]
        sum_dxhat = self._bcast(dxhat.sum(axis=axes), nd)
        sum_dxhat_xhat = self._bcast(np.sum(dxhat * xhat, axis=axes), nd)
        return self._bcast(inv_std, nd) / m * (m * dxhat - sum_dxhat - xhat * sum_dxhat_xhat)


class ReLU(Layer):
    kind = 'relu'

    def forward(self, x, training=True):
        self._cache = x > 0
        return np.where(self._cache, x, 0).astype(x.dtype)

    def _backward(self, dout, mask):
        return dout * mask


class Abs(Layer):
    """ Absolute nonlinearity f(x) = |x| on the columns from `start` on.
    """
    kind = 'abs'

    def __init__(self, start: int = 0):
        super().__init__()
        self.start = start

    def forward(self, x, training=True):
        sign = np.ones_like(x)
        sign[:, self.start:] = np.sign(x[:, self.start:])
        self._cache = sign
        return x * sign

    def _backward(self, dout, sign):
        return dout * sign


class EncodingNorm(Layer):
    """ Encoding normalization of a (B, 2u) head laid out as [mu | sigma].
    """
    kind = 'encoding-norm'

    def __init__(self, latent: int, lambda_mu: float = cfg.LAMBDA_MU, epsilon: float = cfg.EPSILON_BN):
        super().__init__()
        self.latent = latent
        self.lambda_mu = lambda_mu
        self.epsilon = epsilon

    def forward(self, x, training=True):
        check_ndim(x, (2,), 'encoding-norm')
        if x.shape[1] != 2 * self.latent:
            raise DimensionError('encoding-norm expects {} columns, got {}'.format(2 * self.latent, x.shape[1]))
        u = self.latent
        mu, sigma, self._cache = encoding_norm_forward(x[:, :u], x[:, u:], self.lambda_mu, self.epsilon)
        return np.concatenate([mu, sigma], axis=1)

    def _backward(self, dout, cache):
        u = self.latent
        dmu, dsigma = encoding_norm_backward(dout[:, :u], dout[:, u:], cache)
        return np.concatenate([dmu, dsigma], axis=1)


class Flatten(Layer):
    kind = 'flatten'

    def forward(self, x, training=True):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def _backward(self, dout, shape):
        return dout.reshape(shape)


class Reshape(Layer):
    kind = 'reshape'

    def __init__(self, shape: Tuple[int, ...]):
        super().__init__()
        self.shape = tuple(shape)

    def forward(self, x, training=True):
        if int(np.prod(x.shape[1:])) != int(np.prod(self.shape)):
            raise DimensionError('Cannot reshape {} to (N,) + {}'.format(x.shape, self.shape))
        self._cache = x.shape
        return x.reshape((x.shape[0],) + self.shape)

    def _backward(self, dout, shape):
        return dout.reshape(shape)


class Upsample(Layer):
    """ Nearest-neighbour upsampling of the spatial axes by 2.
    """
    kind = 'upsample'

    def forward(self, x, training=True):
        check_ndim(x, (4,), 'upsample')
        self._cache = x.shape
        return x.repeat(2, axis=2).repeat(2, axis=3)

    def _backward(self, dout, shape):
        n, c, h, w = shape
        return dout.reshape(n, c, h, 2, w, 2).sum(axis=(3, 5))


def build_layer(spec: LayerSpec, rng: np.random.Generator = None) -> Layer:
    """ Layer factory.
    """
    spec.validate()
    if spec.kind == 'dense':
        return Dense(spec.units_in, spec.units_out, rng)
    if spec.kind == 'conv2d':
        return Conv2D(spec.channels_in, spec.channels_out, spec.kernel, spec.stride, rng)
    if spec.kind == 'batch-norm':
        return BatchNorm(spec.units_in)
    if spec.kind == 'relu':
        return ReLU()
    if spec.kind == 'abs':
        return Abs(spec.start)
    if spec.kind == 'encoding-norm':
        return EncodingNorm(spec.units_in, spec.lambda_mu, spec.epsilon)
    if spec.kind == 'flatten':
        return Flatten()
    if spec.kind == 'reshape':
        return Reshape(spec.shape)
    return Upsample()
