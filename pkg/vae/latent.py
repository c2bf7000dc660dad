# -*- coding: utf-8 -*-

from dataclasses import dataclass

import numpy as np

import config as cfg
from errors import DimensionError, DomainError
from nn.layers import encoding_norm_forward


@dataclass
class LatentBatch:
    """ Per-example means and standard deviations (both B x u).
    """
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        self.mu = np.asarray(self.mu)
        self.sigma = np.asarray(self.sigma)
        if self.mu.ndim != 2 or self.mu.shape != self.sigma.shape:
            raise DimensionError('LatentBatch needs two equal B x u matrices, got {} and {}'.format(
                self.mu.shape, self.sigma.shape))

    def __len__(self):
        return self.mu.shape[0]

    @property
    def latent(self) -> int:
        return self.mu.shape[1]

    def stacked(self) -> np.ndarray:
        """ N x 2 x u array, [:, 0] means and [:, 1] standard deviations
        (the latent file layout).
        """
        return np.stack([self.mu, self.sigma], axis=1)

    @classmethod
    def from_stacked(cls, array: np.ndarray) -> 'LatentBatch':
        if array.ndim != 3 or array.shape[1] != 2:
            raise DimensionError('Latent arrays are N x 2 x u, got {}'.format(array.shape))
        return cls(array[:, 0].copy(), array[:, 1].copy())


def encoding_normalize(batch: LatentBatch, lambda_mu: float = cfg.LAMBDA_MU,
                       epsilon_bn: float = cfg.EPSILON_BN) -> LatentBatch:
    """ Normalizes encodings with batch statistics:

        mu_ij    <- lambda_mu (mu_ij - mu_avg_j) / (mu_std_j + eps)
        sigma_ij <- sigma_ij / (2 sigma_std_j + eps)

    Means are centred, sigmas are only rescaled, so sigma stays >= 0.
    """
    if np.any(batch.sigma < 0):
        raise DomainError('Encoding normalization expects sigma >= 0; apply the absolute nonlinearity first')
    mu, sigma, _ = encoding_norm_forward(batch.mu, batch.sigma, lambda_mu, epsilon_bn)
    return LatentBatch(mu, sigma)


def reparameterize(batch: LatentBatch, noise: np.ndarray) -> np.ndarray:
    """ z = mu + sigma * noise, noise being standard normal variates.
    """
    noise = np.asarray(noise)
    if noise.shape != batch.mu.shape:
        raise DimensionError('Noise shape {} does not match latent batch {}'.format(noise.shape, batch.mu.shape))
    return batch.mu + batch.sigma * noise
