# -*- coding: utf-8 -*-

import base64
import io
import os

import numpy as np

os.environ.setdefault('PYGAME_HIDE_SUPPORT_PROMPT', '1')
import pygame

from errors import DimensionError


def to_gray(image: np.ndarray) -> np.ndarray:
    """ H x W (x C) image to an H x W uint8 array spanning 0..255. Two-channel
    (real, imaginary) images are shown by magnitude.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim == 3:
        image = image[..., 0] if image.shape[2] == 1 else np.sqrt(np.sum(image ** 2, axis=2))
    if image.ndim != 2:
        raise DimensionError('Thumbnails need H x W (x C) images, got shape {}'.format(image.shape))
    lo, hi = image.min(), image.max()
    scaled = (image - lo) / (hi - lo) if hi > lo else np.zeros_like(image)
    return np.round(scaled * 255).astype(np.uint8)


def image_surface(image: np.ndarray, side: int = None) -> pygame.Surface:
    gray = to_gray(image)
    # surfarray is indexed (x, y)
    rgb = np.repeat(gray.T[:, :, None], 3, axis=2)
    surface = pygame.surfarray.make_surface(rgb)
    if side is not None and surface.get_size() != (side, side):
        surface = pygame.transform.scale(surface, (side, side))
    return surface


def png_bytes(surface: pygame.Surface) -> bytes:
    buffer = io.BytesIO()
    pygame.image.save(surface, buffer, 'thumbnail.png')
    return buffer.getvalue()


def png_base64(surface: pygame.Surface) -> str:
    return base64.b64encode(png_bytes(surface)).decode('ascii')
