# -*- coding: utf-8 -*-

from dataclasses import dataclass, field
from typing import List, Tuple, Optional, Union

import numpy as np
from tqdm import tqdm

from config import TsneConfig
from errors import ConfigError, DimensionError, NonFiniteError, TooFewPointsError
from helpers import log, LogLevel
from vae.latent import LatentBatch

from .affinities import (AffinityMatrix, joint_affinities, kl_divergence, q_affinities, sq_distance_matrix,
                         student_t_kernel, weighted_sq_distance_matrix)

MIN_POINTS = 5


@dataclass
class Embedding:
    """ Map coordinates, KL trace as (iteration, KL) pairs, and the fitted
    bandwidth and achieved perplexity of every input row.
    """
    y: np.ndarray
    kl_trace: List[Tuple[int, float]] = field(default_factory=list)
    alphas: Optional[np.ndarray] = None
    perplexities: Optional[np.ndarray] = None

    def __len__(self):
        return self.y.shape[0]

    @property
    def dims(self) -> int:
        return self.y.shape[1]

    @property
    def final_kl(self) -> float:
        return self.kl_trace[-1][1] if self.kl_trace else float('nan')


def tsne_gradient(p, q, y: np.ndarray, normalization: str = 'row') -> np.ndarray:
    """ Gradient of sum p_ij log(p_ij / q_ij) with respect to y, for Q computed
    by q_affinities(y, normalization):

        grad_i = 2 sum_j W_ij (1 + |y_i - y_j|^2)^-1 (y_i - y_j)

    with W = P + P^T - 2Q for the all-pairs normalization and
    W = P + P^T - (rQ + (rQ)^T), r_i = sum_j p_ij, for the per-row one.
    """
    p = p.p if isinstance(p, AffinityMatrix) else np.asarray(p, dtype=np.float64)
    q = q.p if isinstance(q, AffinityMatrix) else np.asarray(q, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if normalization == 'row':
        rq = p.sum(axis=1, keepdims=True) * q
        w = p + p.T - rq - rq.T
    else:
        w = p + p.T - 2.0 * q
    w *= student_t_kernel(y)
    return 2.0 * (w.sum(axis=1, keepdims=True) * y - w @ y)


def input_distances(data: Union[LatentBatch, np.ndarray], config: TsneConfig) -> np.ndarray:
    """ Squared distances between inputs: uncertainty weighted for latent
    batches in 'with-sigma' mode, plain Euclidean otherwise.
    """
    if isinstance(data, LatentBatch):
        if config.sigma_mode == 'with-sigma':
            return weighted_sq_distance_matrix(data.mu, data.sigma, config.epsilon_w)
        return sq_distance_matrix(data.mu)
    if config.sigma_mode == 'with-sigma':
        raise ConfigError("sigma_mode 'with-sigma' needs latent means and standard deviations, "
                          "got a plain feature matrix")
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise DimensionError('Expected an N x d feature matrix, got shape {}'.format(data.shape))
    return sq_distance_matrix(data)


def _unit_mass_kl(p: np.ndarray, q: AffinityMatrix) -> float:
    return kl_divergence(p, q.p / q.total)


def run_tsne(data: Union[LatentBatch, np.ndarray], config: Optional[TsneConfig] = None,
             progress: bool = False) -> Embedding:
    """ Exact tSNE by gradient descent with momentum and per-coordinate gains.
    Early exaggeration multiplies P for the first iterations. The KL of the
    un-exaggerated P against Q scaled to unit mass is recorded at iteration 0
    and every kl_every iterations.
    """
    config = config if config is not None else TsneConfig()
    config.validate()
    n = len(data)
    if n < MIN_POINTS:
        raise TooFewPointsError('tSNE needs at least {} points, got {}'.format(MIN_POINTS, n))
    perplexity = config.resolve_perplexity(n)

    distances = input_distances(data, config)
    p, alphas, achieved = joint_affinities(distances, perplexity, config.perplexity_tol, config.calibration_max_iter)
    log('tSNE on {} points, perplexity {:g}, {} kernel'.format(n, perplexity, config.sigma_mode))

    rng = np.random.default_rng(config.seed)
    y = rng.standard_normal((n, config.dims)) * config.init_std
    update = np.zeros_like(y)
    gains = np.ones_like(y)

    trace = [(0, _unit_mass_kl(p.p, q_affinities(y, config.q_normalization)))]
    for t in tqdm(range(1, config.iterations + 1), desc='tsne', disable=not progress):
        exaggerated = t <= config.exaggeration_iters
        pt = p.p * config.exaggeration if exaggerated else p.p
        q = q_affinities(y, config.q_normalization)
        grad = tsne_gradient(pt, q, y, config.q_normalization)
        if not np.all(np.isfinite(grad)):
            err = NonFiniteError('Non-finite tSNE gradient at iteration {}'.format(t))
            err.trace = trace
            raise err

        momentum = config.momentum if t <= config.momentum_switch else config.final_momentum
        if config.use_gains:
            same = np.sign(grad) == np.sign(update)
            gains = np.where(same, gains * 0.8, gains + 0.2)
            np.maximum(gains, config.min_gain, out=gains)
        update = momentum * update - config.learning_rate * gains * grad
        y = y + update
        y -= y.mean(axis=0)

        if t % config.kl_every == 0 or t == config.iterations:
            trace.append((t, _unit_mass_kl(p.p, q_affinities(y, config.q_normalization))))
            log('tSNE iteration {}: KL {:.6g}'.format(t, trace[-1][1]), LogLevel.DEBUG)

    log('tSNE done, KL {:.6g} -> {:.6g}'.format(trace[0][1], trace[-1][1]))
    return Embedding(y, trace, alphas, achieved)
