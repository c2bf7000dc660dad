# -*- coding: utf-8 -*-

import numpy as np

from errors import ConfigError

__doc__ = """ Core (shared) runtime state. Must be initialized invoking init() """

PRECISIONS = {'float64': np.float64, 'float32': np.float32}

# Numeric precision of every tensor built by the package
PRECISION = 'float64'
DTYPE = np.float64

# --- Statistics ---
SIGMA_CLAMPS = None  # sigma^2 values clamped inside log() by the traditional loss
CONSTANT_IMAGES = None  # Constant images mapped to zeros by minmax normalization
REJECTED_STEPS = None  # Optimizer steps rejected because of non-finite gradients


def set_precision(precision: str) -> None:
    global PRECISION
    global DTYPE

    try:
        DTYPE = PRECISIONS[precision]
    except KeyError:
        raise ConfigError("Unknown precision '{}'. Use one of {}".format(precision, sorted(PRECISIONS)))
    PRECISION = precision


def is_verification_mode() -> bool:
    return DTYPE == np.float64


def asarray(x) -> np.ndarray:
    """ Returns x as an array of the current precision.
    """
    return np.asarray(x, dtype=DTYPE)


def init(precision: str = 'float64'):
    global SIGMA_CLAMPS
    global CONSTANT_IMAGES
    global REJECTED_STEPS

    set_precision(precision)
    SIGMA_CLAMPS = 0
    CONSTANT_IMAGES = 0
    REJECTED_STEPS = 0


init()
