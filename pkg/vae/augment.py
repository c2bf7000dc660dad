# -*- coding: utf-8 -*-

import numpy as np

from errors import DimensionError, DomainError

# Index i applies i % 4 quarter turns, then a horizontal flip when i >= 4
DIHEDRAL_ORDER = 8


def augment(image: np.ndarray, index: int) -> np.ndarray:
    """ Applies one of the 8 flips/90 degree rotations of a square H x W (x C) image.
    Index 0 is the identity.
    """
    if image.ndim < 2 or image.shape[0] != image.shape[1]:
        raise DimensionError('Augmentation needs a square image, got shape {}'.format(image.shape))
    if not 0 <= index < DIHEDRAL_ORDER:
        raise DomainError('Augmentation index must be in [0, 7], got {}'.format(index))
    out = np.rot90(image, k=index % 4, axes=(0, 1))
    if index >= 4:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


def augment_batch(images: np.ndarray, indices) -> np.ndarray:
    """ Augments a N x H x W x C batch, one dihedral index per image.
    """
    return np.stack([augment(image, int(i)) for image, i in zip(images, indices)])
