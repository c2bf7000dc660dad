# -*- coding: utf-8 -*-

from dataclasses import dataclass
from typing import Optional

import numpy as np

import config as cfg
import core
from config import VaeLossConfig
from errors import ConfigError, ImageSizeError
from helpers import log, LogLevel
from nn.layers import conv2d_forward, conv2d_backward
from nn.tensor import check_same_shape, check_ndim

from .latent import LatentBatch

SOBEL_X = np.array([[-1, 0, 1],
                    [-2, 0, 2],
                    [-1, 0, 1]], dtype=np.float64)
SOBEL_Y = SOBEL_X.T.copy()


@dataclass
class LossTerms:
    """ Weighted addends of a VAE loss. Unused addends are 0.
    """
    total: float
    mse: float = 0.0
    sobel: float = 0.0
    sigma_reg: float = 0.0
    kl: float = 0.0


@dataclass
class LossGrads:
    generated: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray


def sobel_weights(channels: int) -> np.ndarray:
    """ (2C, C, 3, 3) kernels: output 2c is the horizontal derivative of
    channel c, output 2c + 1 its vertical derivative.
    """
    w = np.zeros((2 * channels, channels, 3, 3), dtype=core.DTYPE)
    for c in range(channels):
        w[2 * c, c] = SOBEL_X
        w[2 * c + 1, c] = SOBEL_Y
    return w


def sobel_batch(x: np.ndarray):
    """ Sobel derivatives of a N x C x H x W batch. Returns (N x 2C x H x W, cache).
    """
    check_ndim(x, (4,), 'sobel')
    if min(x.shape[2:]) < 3:
        raise ImageSizeError('Sobel derivatives need images of side >= 3, got {}'.format(x.shape[2:]))
    return conv2d_forward(x, sobel_weights(x.shape[1]), None)


def sobel_features(image: np.ndarray) -> np.ndarray:
    """ Horizontal (channel 0) and vertical (channel 1) Sobel derivatives of a
    single-channel 2D image, same spatial size, reflect padding.
    """
    image = core.asarray(image)
    check_ndim(image, (2,), 'sobel_features')
    out, _ = sobel_batch(image[None, None])
    return out[0]


def mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((a - b) ** 2))


def loss_traditional(generated: np.ndarray, target: np.ndarray, batch: LatentBatch,
                     lambda_mse: float = cfg.LAMBDA_MSE, epsilon_bn: float = cfg.EPSILON_BN,
                     return_grads: bool = False):
    """ lambda_MSE MSE(G(z), I) + 1/(2Bu) sum(mu^2 + sigma^2 - log sigma^2 - 1).

    sigma^2 is clamped to epsilon_bn inside the log only; clamps are counted
    in core.SIGMA_CLAMPS.
    """
    check_same_shape(generated, target, 'loss_traditional')
    mu, sigma = batch.mu, batch.sigma
    n_latent = mu.size

    s2 = sigma ** 2
    clamped = s2 < epsilon_bn
    if clamped.any():
        core.SIGMA_CLAMPS += int(clamped.sum())
        log('{} sigma^2 values clamped to {:g} in the KL term'.format(int(clamped.sum()), epsilon_bn), LogLevel.WARN)
    log_s2 = np.log(np.maximum(s2, epsilon_bn))

    mse_term = lambda_mse * mse(generated, target)
    kl_term = float(np.sum(mu ** 2 + s2 - log_s2 - 1) / (2 * n_latent))
    terms = LossTerms(total=mse_term + kl_term, mse=mse_term, kl=kl_term)
    if not return_grads:
        return terms

    inv_sigma = np.divide(1.0, sigma, out=np.zeros_like(sigma), where=~clamped)
    grads = LossGrads(generated=2 * lambda_mse * (generated - target) / generated.size,
                      mu=mu / n_latent,
                      sigma=(sigma - inv_sigma) / n_latent)
    return terms, grads


def loss_full(generated: np.ndarray, target: np.ndarray, sigma: np.ndarray,
              config: Optional[VaeLossConfig] = None, return_grads: bool = False):
    """ lambda_MSE MSE(G(z), I) + lambda_Sobel MSE(S(G(z)), S(I)) + MSE(sigma, 1).

    In 'normalized' mode the Sobel addend is dropped.
    """
    config = config if config is not None else VaeLossConfig()
    if not config.normalized:
        raise ConfigError('loss_full needs a normalized loss mode, got {}'.format(config.mode))
    check_same_shape(generated, target, 'loss_full')

    mse_term = config.lambda_mse * mse(generated, target)
    sigma_term = mse(sigma, 1.0)
    sobel_term = 0.0
    if config.mode == cfg.MODE_FULL:
        s_gen, cache = sobel_batch(generated)
        s_target, _ = sobel_batch(target)
        sobel_term = config.lambda_sobel * mse(s_gen, s_target)

    terms = LossTerms(total=mse_term + sobel_term + sigma_term, mse=mse_term, sobel=sobel_term, sigma_reg=sigma_term)
    if not return_grads:
        return terms

    dgen = 2 * config.lambda_mse * (generated - target) / generated.size
    if config.mode == cfg.MODE_FULL:
        ds = 2 * config.lambda_sobel * (s_gen - s_target) / s_gen.size
        dgen = dgen + conv2d_backward(ds, cache)[0]
    grads = LossGrads(generated=dgen,
                      mu=np.zeros_like(sigma),
                      sigma=2 * (sigma - 1.0) / sigma.size)
    return terms, grads
