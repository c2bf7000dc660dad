# -*- coding: utf-8 -*-

from typing import Tuple

import numpy as np
from scipy import ndimage

import config as cfg
import core
from errors import ImageSizeError, NonFiniteError
from helpers import log, LogLevel


def minmax_normalize(image: np.ndarray) -> Tuple[np.ndarray, bool]:
    """ Linearly maps an image to [0, 1]. Constant images map to zeros.
    Returns (image, constant flag).
    """
    image = np.asarray(image, dtype=core.DTYPE)
    bad = ~np.isfinite(image)
    if bad.any():
        coords = tuple(int(i) for i in np.argwhere(bad)[0])
        raise NonFiniteError('Non-finite pixel {} at {}'.format(image[coords], coords))
    lo, hi = image.min(), image.max()
    if hi == lo:
        return np.zeros_like(image), True
    return (image - lo) / (hi - lo), False


def preprocess_images(images: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ minmax_normalize over a N x H x W x C stack. Returns (images, constant mask).
    """
    out = np.empty(images.shape, dtype=core.DTYPE)
    constant = np.zeros(len(images), dtype=bool)
    for i, image in enumerate(images):
        out[i], constant[i] = minmax_normalize(image)
    if constant.any():
        core.CONSTANT_IMAGES += int(constant.sum())
        log('{} constant images mapped to zeros'.format(int(constant.sum())), LogLevel.WARN)
    return out, constant


def gaussian_kernel(size: int = cfg.BLUR_SIZE, std: float = cfg.BLUR_STD) -> np.ndarray:
    """ Normalized, symmetric size x size Gaussian kernel.
    """
    r = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * std ** 2))
    return g / g.sum()


def gaussian_blur_5x5(image: np.ndarray, std: float = cfg.BLUR_STD) -> np.ndarray:
    """ Blurs an H x W (x C) image with the normalized 5 x 5 Gaussian kernel,
    reflect padding, same output size.
    """
    image = np.asarray(image, dtype=core.DTYPE)
    if image.ndim < 2 or min(image.shape[:2]) < cfg.BLUR_SIZE:
        raise ImageSizeError('Blurring needs images of side >= {}, got {}'.format(cfg.BLUR_SIZE, image.shape))
    kernel = gaussian_kernel(cfg.BLUR_SIZE, std)
    if image.ndim == 3:
        kernel = kernel[:, :, None]
    # scipy 'mirror' == reflection without repeating the edge sample
    return ndimage.correlate(image, kernel, mode='mirror')


def blur_images(images: np.ndarray, std: float = cfg.BLUR_STD) -> np.ndarray:
    return np.stack([gaussian_blur_5x5(image, std) for image in images]).astype(core.DTYPE, copy=False)
