# -*- coding: utf-8 -*-

from dataclasses import dataclass, field
from typing import List, Tuple, Sequence

import numpy as np

import core
from config import TrainSchedule
from errors import DomainError, NonFiniteError


def _check_iteration(t: int, s: TrainSchedule) -> None:
    if not 1 <= t <= s.total:
        raise DomainError('Iteration {} outside [1, {}]'.format(t, s.total))


def lr_at(t: int, s: TrainSchedule) -> float:
    """ Stepwise exponentially decayed learning rate eta_start * a^floor(b t / T).
    """
    _check_iteration(t, s)
    return s.eta_start * s.a ** ((s.b * t) // s.total)


def beta1_at(t: int, s: TrainSchedule) -> float:
    """ Decaying momentum: beta_1 goes from beta_start to 0 at t = T.
    """
    _check_iteration(t, s)
    remaining = 1.0 - t / s.total
    return s.beta_start * remaining / ((1.0 - s.beta_start) + s.beta_start * remaining)


@dataclass
class AdamMoments:
    """ ADAM state. beta1_product is the running product of the beta_1 values
    used so far, which gives the bias correction under a varying beta_1.
    """
    m: List[np.ndarray] = field(default_factory=list)
    v: List[np.ndarray] = field(default_factory=list)
    beta1_product: float = 1.0
    t: int = 0

    @classmethod
    def zeros_like(cls, params: Sequence[np.ndarray]) -> 'AdamMoments':
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params])


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], moments: AdamMoments,
              t: int, s: TrainSchedule) -> Tuple[List[np.ndarray], AdamMoments]:
    """ One ADAM update with eta = lr_at(t) and beta_1 = beta1_at(t).
    Returns new parameter arrays and moments; inputs are not modified.
    """
    for i, g in enumerate(grads):
        if not np.all(np.isfinite(g)):
            core.REJECTED_STEPS += 1
            err = NonFiniteError('Non-finite gradient for parameter {} at iteration {}; step rejected'.format(i, t))
            err.index = i
            raise err

    eta = lr_at(t, s)
    beta1 = beta1_at(t, s)
    beta1_product = moments.beta1_product * beta1
    m_correction = 1.0 - beta1_product
    v_correction = 1.0 - s.beta2 ** t

    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, moments.m, moments.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = s.beta2 * v + (1.0 - s.beta2) * g * g
        update = eta * (m / m_correction) / (np.sqrt(v / v_correction) + s.epsilon)
        new_params.append((p - update).astype(p.dtype, copy=False))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamMoments(new_m, new_v, beta1_product, t)
