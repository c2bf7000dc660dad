# -*- coding: utf-8 -*-

from typing import Sequence

import numpy as np

import core
from errors import DimensionError, NonFiniteError

__doc__ = """ Tensor helpers. Tensors are numpy arrays of the current core precision,
row-major (C order); images are laid out N x C x H x W inside networks """


def check_ndim(x: np.ndarray, ndims: Sequence[int], what: str) -> None:
    if x.ndim not in ndims:
        raise DimensionError('{} expects a {}-dimensional input, got shape {}'.format(
            what, ' or '.join(str(n) for n in ndims), x.shape))


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise DimensionError('{}: shape mismatch {} vs {}'.format(what, a.shape, b.shape))


def check_finite(x: np.ndarray, what: str) -> None:
    """ Raises NonFiniteError naming the first non-finite entry.
    """
    finite = np.isfinite(x)
    if not finite.all():
        index = tuple(int(i) for i in np.argwhere(~finite)[0])
        raise NonFiniteError('{}: non-finite value {} at index {}'.format(what, x[index], index))


def fan_in_uniform(rng: np.random.Generator, shape, fan_in: int) -> np.ndarray:
    """ Uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    """
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape).astype(core.DTYPE)


def reflect_matrix(n: int, pad: int) -> np.ndarray:
    """ One-hot (n + 2 pad) x n matrix R such that R @ v is v reflect-padded
    (edge sample not repeated), the same as np.pad(v, pad, mode='reflect').
    """
    if pad > n - 1:
        raise DimensionError('Cannot reflect-pad a size {} axis by {}'.format(n, pad))
    r = np.zeros((n + 2 * pad, n), dtype=core.DTYPE)
    for q in range(n + 2 * pad):
        t = abs(q - pad)
        if t > n - 1:
            t = 2 * (n - 1) - t
        r[q, t] = 1
    return r


def reflect_pad(x: np.ndarray, pad: int) -> np.ndarray:
    """ Reflect-pads the two trailing (spatial) axes.
    """
    if pad == 0:
        return x
    if pad > min(x.shape[-2:]) - 1:
        raise DimensionError('Cannot reflect-pad spatial size {} by {}'.format(x.shape[-2:], pad))
    widths = [(0, 0)] * (x.ndim - 2) + [(pad, pad), (pad, pad)]
    return np.pad(x, widths, mode='reflect')


def reflect_unpad(dxp: np.ndarray, pad: int) -> np.ndarray:
    """ Adjoint of reflect_pad: folds gradients of padded samples back
    onto the samples they were copied from.
    """
    if pad == 0:
        return dxp
    h = dxp.shape[-2] - 2 * pad
    w = dxp.shape[-1] - 2 * pad
    rh = reflect_matrix(h, pad)
    rw = reflect_matrix(w, pad)
    return np.matmul(rh.T, np.matmul(dxp, rw))
