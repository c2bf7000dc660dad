# -*- coding: utf-8 -*-

from typing import List, Tuple, Optional

import numpy as np

import config as cfg
import core
from config import Architecture, VaeLossConfig
from helpers import log, LogLevel
from nn.gradcheck import GradientReport, compare_gradients, numeric_gradient, require_verification_mode
from nn.layers import LayerSpec, EncodingNorm
from nn.network import Network

from .latent import LatentBatch, reparameterize
from .losses import LossTerms, loss_traditional, loss_full


def encoder_specs(arch: Architecture) -> List[LayerSpec]:
    """ Stride-2 conv blocks (conv, batch norm, ReLU), then a dense output
    layer to [mu | sigma] with the absolute nonlinearity on the sigma half.
    """
    specs = []
    prev = arch.channels
    for ch in arch.encoder_channels:
        specs += [LayerSpec('conv2d', channels_in=prev, channels_out=ch, kernel=arch.kernel, stride=2),
                  LayerSpec('batch-norm', units_in=ch),
                  LayerSpec('relu')]
        prev = ch
    flat = prev * arch.bottleneck_side ** 2
    specs += [LayerSpec('flatten'),
              LayerSpec('dense', units_in=flat, units_out=2 * arch.latent),
              LayerSpec('abs', start=arch.latent)]
    return specs


def generator_specs(arch: Architecture) -> List[LayerSpec]:
    """ Mirror of the encoder: dense to the bottleneck, then nearest upsample +
    conv blocks. The last conv is the output layer (no batch norm or ReLU).
    """
    side = arch.bottleneck_side
    last = arch.encoder_channels[-1]
    specs = [LayerSpec('dense', units_in=arch.latent, units_out=last * side * side),
             LayerSpec('batch-norm', units_in=last * side * side),
             LayerSpec('relu'),
             LayerSpec('reshape', shape=(last, side, side))]
    targets = list(reversed(arch.encoder_channels[:-1])) + [arch.channels]
    prev = last
    for i, ch in enumerate(targets):
        specs += [LayerSpec('upsample'),
                  LayerSpec('conv2d', channels_in=prev, channels_out=ch, kernel=arch.kernel, stride=1)]
        if i < len(targets) - 1:
            specs += [LayerSpec('batch-norm', units_in=ch), LayerSpec('relu')]
        prev = ch
    return specs


class VaeModel:
    """ Encoder + generator pair. In the normalized loss modes the encoder head
    ends with encoding normalization (batch statistics while training).
    """
    def __init__(self, arch: Optional[Architecture] = None, loss: Optional[VaeLossConfig] = None, seed: int = 0):
        self.arch = arch if arch is not None else Architecture()
        self.loss_config = loss if loss is not None else VaeLossConfig()
        self.arch.validate()
        self.loss_config.validate()

        rng = np.random.default_rng(seed)
        self.encoder = Network.from_specs(encoder_specs(self.arch), rng, name='encoder')
        self.generator = Network.from_specs(generator_specs(self.arch), rng, name='generator')
        self.normalizer = None
        if self.loss_config.normalized:
            self.normalizer = EncodingNorm(self.arch.latent, self.loss_config.lambda_mu, self.loss_config.epsilon_bn)
        self.iteration = 0  # Optimizer steps taken so far

        log('VAE with {} parameters: {} | {}'.format(self.parameter_count(), self.encoder, self.generator),
            LogLevel.DEBUG)

    @property
    def latent(self) -> int:
        return self.arch.latent

    @property
    def trained(self) -> bool:
        return self.iteration > 0

    def parameters(self) -> List[Tuple[str, np.ndarray]]:
        return self.encoder.parameters() + self.generator.parameters()

    def gradients(self) -> List[Tuple[str, np.ndarray]]:
        return self.encoder.gradients() + self.generator.gradients()

    def buffers(self) -> List[Tuple[str, np.ndarray]]:
        return self.encoder.buffers() + self.generator.buffers()

    def set_buffer(self, name: str, value: np.ndarray) -> None:
        network = self.encoder if name.startswith(self.encoder.name + '.') else self.generator
        network.set_buffer(name, value)

    def parameter_count(self) -> int:
        return self.encoder.parameter_count() + self.generator.parameter_count()

    def encode_raw(self, x: np.ndarray, training: bool = False) -> LatentBatch:
        """ Encoder output before encoding normalization (sigma already >= 0).
        """
        h = self.encoder.forward(x, training)
        return LatentBatch(h[:, :self.latent], h[:, self.latent:])

    def encode(self, x: np.ndarray, training: bool = False) -> LatentBatch:
        h = self.encoder.forward(x, training)
        if self.normalizer is not None:
            h = self.normalizer.forward(h, training)
        return LatentBatch(h[:, :self.latent], h[:, self.latent:])

    def generate(self, z: np.ndarray, training: bool = False) -> np.ndarray:
        return self.generator.forward(z, training)

    def _loss(self, generated, x, batch: LatentBatch, return_grads: bool):
        config = self.loss_config
        if config.normalized:
            return loss_full(generated, x, batch.sigma, config, return_grads)
        return loss_traditional(generated, x, batch, config.lambda_mse, config.epsilon_bn, return_grads)

    def loss(self, x: np.ndarray, noise: np.ndarray) -> LossTerms:
        """ Training-mode loss of a N x C x H x W batch for the given noise.
        """
        batch = self.encode(x, training=True)
        generated = self.generate(reparameterize(batch, noise), training=True)
        return self._loss(generated, x, batch, False)

    def loss_and_gradients(self, x: np.ndarray, noise: np.ndarray) -> LossTerms:
        """ Forward and backward pass. Parameter gradients are left in
        gradients(); returns the loss addends.
        """
        x = core.asarray(x)
        batch = self.encode(x, training=True)
        generated = self.generate(reparameterize(batch, noise), training=True)
        terms, grads = self._loss(generated, x, batch, True)

        dz = self.generator.backward(grads.generated)
        dmu = dz + grads.mu
        dsigma = dz * noise + grads.sigma
        dh = np.concatenate([dmu, dsigma], axis=1)
        if self.normalizer is not None:
            dh, _ = self.normalizer.backward(dh)
        self.encoder.backward(dh)
        return terms


def check_loss_gradient(model: VaeModel, x: np.ndarray, noise: np.ndarray, tolerance: float = 1e-4,
                        step: float = cfg.GRADCHECK_STEP, max_params: int = cfg.GRADCHECK_MAX_PARAMS) -> GradientReport:
    """ Finite-difference check of the whole VAE loss, through the generator,
    the reparameterization, encoding normalization and the encoder.
    """
    require_verification_mode(model.parameter_count(), max_params)
    x = np.array(x, dtype=np.float64)
    value = model.loss_and_gradients(x, noise).total
    analytic = {name: grad.copy() for name, grad in model.gradients()}

    def f() -> float:
        return model.loss(x, noise).total

    numeric = {name: numeric_gradient(f, param, step) for name, param in model.parameters()}
    report = compare_gradients(GradientReport(tolerance), analytic, numeric, value, step)
    log('VAE loss ({}): {}'.format(model.loss_config.mode, report), LogLevel.DEBUG if report.passed else LogLevel.WARN)
    return report
