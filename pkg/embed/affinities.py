# -*- coding: utf-8 -*-

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.spatial.distance import pdist, squareform

import config as cfg
from errors import CalibrationError, DegenerateRowError, DimensionError, DomainError
from helpers import log, LogLevel

__doc__ = """ Pairwise similarities of symmetric tSNE.

Input similarities are Gaussian in (optionally uncertainty weighted) squared
distances, one bandwidth alpha_j per point fitted to a target perplexity.
Output similarities use the Student-t kernel.
"""

CONDITIONAL = 'conditional'
JOINT = 'joint'

# Perplexity error under which a calibration is accepted at once
EXACT_PERPLEXITY = 1e-12


@dataclass
class AffinityMatrix:
    """ N x N similarity matrix. Conditional matrices hold one probability
    row per point (row j is p_{.|j}); joint matrices have unit total mass.
    """
    p: np.ndarray
    kind: str = JOINT

    def __post_init__(self):
        if self.kind not in (CONDITIONAL, JOINT):
            raise DomainError("Affinity kind must be '{}' or '{}', got {!r}".format(CONDITIONAL, JOINT, self.kind))
        if self.p.ndim != 2 or self.p.shape[0] != self.p.shape[1]:
            raise DimensionError('Affinity matrices are square, got {}'.format(self.p.shape))

    def __len__(self):
        return self.p.shape[0]

    @property
    def total(self) -> float:
        return float(self.p.sum())

    def is_symmetric(self, tolerance: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.p - self.p.T)) <= tolerance)


def weighted_sq_distance(mu_i: np.ndarray, mu_j: np.ndarray, sigma_i: np.ndarray, sigma_j: np.ndarray,
                         epsilon_w: float = cfg.EPSILON_W) -> float:
    """ sum_k w_ijk (mu_ik - mu_jk)^2 with weights inversely proportional to
    sigma_ik^2 + sigma_jk^2 + epsilon_w, normalized to sum to 1.
    """
    vectors = [np.asarray(v, dtype=np.float64) for v in (mu_i, mu_j, sigma_i, sigma_j)]
    if len({v.shape for v in vectors}) != 1 or vectors[0].ndim != 1:
        raise DimensionError('weighted_sq_distance needs four vectors of equal length, got {}'.format(
            [v.shape for v in vectors]))
    mu_i, mu_j, sigma_i, sigma_j = vectors
    inv = 1.0 / (sigma_i ** 2 + sigma_j ** 2 + epsilon_w)
    return float(np.sum(inv / inv.sum() * (mu_i - mu_j) ** 2))


def weighted_sq_distance_matrix(mu: np.ndarray, sigma: np.ndarray, epsilon_w: float = cfg.EPSILON_W) -> np.ndarray:
    """ N x N matrix of weighted_sq_distance, one row at a time.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if mu.ndim != 2 or mu.shape != sigma.shape:
        raise DimensionError('mu and sigma must be equal N x u matrices, got {} and {}'.format(mu.shape, sigma.shape))
    s2 = sigma ** 2
    out = np.empty((len(mu), len(mu)))
    for i in range(len(mu)):
        inv = 1.0 / (s2[i] + s2 + epsilon_w)
        w = inv / inv.sum(axis=1, keepdims=True)
        out[i] = np.sum(w * (mu[i] - mu) ** 2, axis=1)
    np.fill_diagonal(out, 0.0)
    return out


def sq_distance_matrix(x: np.ndarray) -> np.ndarray:
    """ N x N squared Euclidean distances of the rows of x.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError('Expected an N x d feature matrix, got shape {}'.format(x.shape))
    return squareform(pdist(x, 'sqeuclidean'))


def _gaussian_row(distances: np.ndarray, beta: float) -> Tuple[np.ndarray, float]:
    """ Returns (probabilities, entropy) of exp(-beta d) over finite distances.
    """
    finite = np.isfinite(distances)
    shifted = distances[finite] - distances[finite].min()
    weights = np.exp(-beta * shifted)
    total = weights.sum()
    p = np.zeros_like(distances)
    p[finite] = weights / total
    entropy = np.log(total) + beta * np.sum(shifted * weights) / total
    return p, float(entropy)


def _beta(alpha: float) -> float:
    return 0.0 if np.isinf(alpha) else 1.0 / (2.0 * alpha * alpha)


def conditional_affinities(distances: np.ndarray, alpha: float) -> np.ndarray:
    """ Probability row p_{i|j} proportional to exp(-d_ij / (2 alpha_j^2)).
    distances holds the squared distances from j to its neighbours (self
    excluded); infinite distances get probability 0.
    """
    distances = np.asarray(distances, dtype=np.float64)
    if not alpha > 0:
        raise DomainError('alpha must be > 0, got {}'.format(alpha))
    if not np.isfinite(distances).any():
        raise DegenerateRowError('All {} distances are infinite'.format(distances.size))
    p, _ = _gaussian_row(distances, _beta(alpha))
    return p


def row_perplexity(p: np.ndarray) -> float:
    """ exp(-sum p log p), terms with p = 0 contributing 0.
    """
    nz = p[p > 0]
    return float(np.exp(-np.sum(nz * np.log(nz))))


def calibrate_alpha(distances: np.ndarray, perplexity: float, tolerance: float = cfg.PERPLEXITY_TOL,
                    max_iter: int = cfg.CALIBRATION_MAX_ITER, row: int = None) -> float:
    """ Fits alpha_j so that the perplexity of the conditional row matches the
    target. The bracket in beta = 1 / (2 alpha^2) is first expanded by factors
    of 2, then bisected in log space down to machine resolution.
    """
    distances = np.asarray(distances, dtype=np.float64)
    finite = np.isfinite(distances)
    count = int(finite.sum())
    if count == 0:
        raise DegenerateRowError('All {} distances are infinite'.format(distances.size))
    if perplexity <= 1:
        raise DomainError('Target perplexity must be > 1, got {}'.format(perplexity))
    if perplexity > count + tolerance:
        raise CalibrationError('target perplexity {} exceeds the {} neighbours'.format(perplexity, count), row)

    target = np.log(perplexity)

    def error(beta):
        _, entropy = _gaussian_row(distances, beta)
        return entropy - target, abs(np.exp(entropy) - perplexity)

    spread = np.mean(distances[finite] - distances[finite].min())
    guess = 1.0 / spread if spread > 0 else 1.0
    f, err = error(guess)
    best, best_err = guess, err

    # Entropy decreases with beta: f > 0 means the row is too flat
    lo, hi = (guess, None) if f > 0 else (None, guess)
    expansions = 0
    while err > EXACT_PERPLEXITY and (lo is None or hi is None):
        if expansions == max_iter:
            if best_err <= tolerance:
                return _alpha(best)
            raise CalibrationError('no bracket for perplexity {} within {} expansions'.format(
                perplexity, max_iter), row)
        expansions += 1
        guess = guess * 2.0 if hi is None else guess / 2.0
        f, err = error(guess)
        if err < best_err:
            best, best_err = guess, err
        if f > 0:
            lo = guess
        else:
            hi = guess
    if best_err <= EXACT_PERPLEXITY:
        return _alpha(best)

    for _ in range(max_iter):
        mid = np.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        f, err = error(mid)
        if err < best_err:
            best, best_err = mid, err
        if f == 0:
            break
        if f > 0:
            lo = mid
        else:
            hi = mid

    if best_err > tolerance:
        raise CalibrationError('perplexity {} reached only within {:g}'.format(perplexity, best_err), row)
    return _alpha(best)


def _alpha(beta: float) -> float:
    return np.inf if beta == 0 else float(np.sqrt(1.0 / (2.0 * beta)))


def conditional_matrix(distances: np.ndarray, perplexity: float, tolerance: float = cfg.PERPLEXITY_TOL,
                       max_iter: int = cfg.CALIBRATION_MAX_ITER) -> Tuple[AffinityMatrix, np.ndarray, np.ndarray]:
    """ Calibrates every row of an N x N squared distance matrix.
    Returns (conditional affinities, alphas, achieved perplexities).
    """
    n = len(distances)
    cond = np.zeros((n, n))
    alphas = np.empty(n)
    achieved = np.empty(n)
    mask = ~np.eye(n, dtype=bool)
    for j in range(n):
        row = distances[j][mask[j]]
        alphas[j] = calibrate_alpha(row, perplexity, tolerance, max_iter, row=j)
        cond[j, mask[j]] = conditional_affinities(row, alphas[j])
        achieved[j] = row_perplexity(cond[j])
    log('Calibrated {} rows to perplexity {:g} (worst error {:.3g})'.format(
        n, perplexity, float(np.max(np.abs(achieved - perplexity)))), LogLevel.DEBUG)
    return AffinityMatrix(cond, CONDITIONAL), alphas, achieved


def symmetrize(conditional: AffinityMatrix) -> AffinityMatrix:
    """ p_ij = (p_{i|j} + p_{j|i}) / 2N.
    """
    if conditional.kind != CONDITIONAL:
        raise DomainError('symmetrize expects conditional affinities, got {}'.format(conditional.kind))
    p = conditional.p
    return AffinityMatrix((p + p.T) / (2.0 * len(p)), JOINT)


def joint_affinities(distances: np.ndarray, perplexity: float, tolerance: float = cfg.PERPLEXITY_TOL,
                     max_iter: int = cfg.CALIBRATION_MAX_ITER) -> Tuple[AffinityMatrix, np.ndarray, np.ndarray]:
    cond, alphas, achieved = conditional_matrix(distances, perplexity, tolerance, max_iter)
    return symmetrize(cond), alphas, achieved


def student_t_kernel(y: np.ndarray) -> np.ndarray:
    """ (1 + |y_i - y_j|^2)^-1 with a zero diagonal.
    """
    num = 1.0 / (1.0 + sq_distance_matrix(y))
    np.fill_diagonal(num, 0.0)
    return num


def q_affinities(y: np.ndarray, normalization: str = 'row') -> AffinityMatrix:
    """ Student-t output similarities.

    'row' divides each row by its own sum over k != i, giving a matrix of
    unit-sum rows; 'matrix' divides by the sum over all pairs.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or len(y) < 2:
        raise DimensionError('q_affinities needs an N x v embedding with N >= 2, got {}'.format(y.shape))
    num = student_t_kernel(y)
    if normalization == 'row':
        return AffinityMatrix(num / num.sum(axis=1, keepdims=True), CONDITIONAL)
    if normalization == 'matrix':
        return AffinityMatrix(num / num.sum(), JOINT)
    raise DomainError("Q normalization must be one of {}, got {!r}".format(cfg.Q_NORMALIZATIONS, normalization))


def kl_divergence(p, q, floor: float = cfg.Q_FLOOR) -> float:
    """ sum p_ij log(p_ij / q_ij) over p_ij > 0, q floored inside the log.
    """
    p = p.p if isinstance(p, AffinityMatrix) else np.asarray(p, dtype=np.float64)
    q = q.p if isinstance(q, AffinityMatrix) else np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise DimensionError('P and Q shapes differ: {} vs {}'.format(p.shape, q.shape))
    nz = p > 0
    return float(np.sum(p[nz] * (np.log(p[nz]) - np.log(np.maximum(q[nz], floor)))))
