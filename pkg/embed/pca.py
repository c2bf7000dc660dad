# -*- coding: utf-8 -*-

from dataclasses import dataclass

import numpy as np
from scipy import linalg

import config as cfg
from errors import DimensionError, DomainError
from helpers import log, LogLevel


@dataclass
class PcaModel:
    """ components: k x u orthonormal rows, sorted by explained variance.
    """
    components: np.ndarray
    mean: np.ndarray
    explained_variance: np.ndarray
    total_variance: float

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def explained_variance_ratio(self) -> np.ndarray:
        if self.total_variance == 0:
            return np.zeros_like(self.explained_variance)
        return self.explained_variance / self.total_variance


def _features(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    return data.reshape(len(data), -1) if data.ndim > 2 else data


def fit(data: np.ndarray, k: int = cfg.PCA_COMPONENTS) -> PcaModel:
    """ SVD of the mean-centred N x u data. Each component is signed so that
    its largest-magnitude entry is positive.
    """
    data = _features(data)
    if data.ndim != 2:
        raise DimensionError('PCA needs an N x u matrix, got shape {}'.format(data.shape))
    n, u = data.shape
    if n < 2:
        raise DomainError('PCA needs at least 2 samples, got {}'.format(n))
    if not 1 <= k <= min(n, u):
        raise DomainError('{} components requested, at most min(N, u) = {} available'.format(k, min(n, u)))

    mean = data.mean(axis=0)
    _, s, vt = linalg.svd(data - mean, full_matrices=False)
    components = vt[:k]
    pivots = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(k), pivots])
    signs[signs == 0] = 1.0
    components = components * signs[:, None]

    variance = s ** 2 / (n - 1)
    log('PCA: {} of {} components keep {:.4g} of the variance'.format(
        k, u, variance[:k].sum() / variance.sum() if variance.sum() > 0 else 0.0), LogLevel.DEBUG)
    return PcaModel(components, mean, variance[:k], float(variance.sum()))


def transform(model: PcaModel, data: np.ndarray) -> np.ndarray:
    """ N x k scores (data - mean) components^T.
    """
    data = _features(data)
    if data.ndim != 2 or data.shape[1] != model.mean.shape[0]:
        raise DimensionError('PCA model expects {} features, got shape {}'.format(model.mean.shape[0], data.shape))
    return (data - model.mean) @ model.components.T


def inverse_transform(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != model.k:
        raise DimensionError('Expected N x {} scores, got shape {}'.format(model.k, scores.shape))
    return scores @ model.components + model.mean


def reconstruction_error(model: PcaModel, data: np.ndarray) -> float:
    """ Mean squared error of projecting data onto the components and back.
    """
    data = _features(data)
    return float(np.mean((inverse_transform(model, transform(model, data)) - data) ** 2))


def fit_transform(data: np.ndarray, k: int = cfg.PCA_COMPONENTS):
    """ Returns (model, scores). k is clamped to min(N, u).
    """
    data = _features(data)
    k = min(k, *data.shape)
    model = fit(data, k)
    return model, transform(model, data)
