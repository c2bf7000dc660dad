# -*- coding: utf-8 -*-

from typing import Callable, Dict

import numpy as np

import core
from config import SynthSettings
from helpers import log

from .dataset import ImageDataset, SYNTHETIC

__doc__ = """ Synthetic stand-in corpus: one coarse morphology per cluster, overlaid
with a fine lattice texture of random phase and pixel noise.

    0  centred blob (particle)
    1  ring (hollow particle)
    2  diagonal band (nanowire)
    3  dimer of two blobs
    4  coarse quadrants (grain boundaries)
    5  edge (half plane)

Further clusters reuse the families at half the length scale. The
morphology survives the training blur; most of the texture does not.
"""

# Seed of the family pattern when jitter is disabled
FAMILY_SEED = 1234

TEXTURE_PERIOD = 3.0  # px


def _grid(size: int):
    r = np.arange(size, dtype=np.float64)
    return np.meshgrid(r, r, indexing='ij')


def _shift(rng: np.random.Generator, jitter: bool, amount: float = 1.0) -> np.ndarray:
    return rng.uniform(-amount, amount, 2) if jitter else np.zeros(2)


def _gaussian(yy, xx, centre, width: float) -> np.ndarray:
    return np.exp(-((yy - centre[0]) ** 2 + (xx - centre[1]) ** 2) / (2 * width ** 2))


def blob(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    centre = (size - 1) / 2 + _shift(rng, jitter)
    return _gaussian(yy, xx, centre, size / (5.0 * scale))


def ring(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    centre = (size - 1) / 2 + _shift(rng, jitter)
    radius = np.hypot(yy - centre[0], xx - centre[1])
    return np.exp(-(radius - size / (3.0 * scale)) ** 2 / (2 * (size / (10.0 * scale)) ** 2))


def band(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    angle = np.pi / 4 + (rng.uniform(-np.pi / 18, np.pi / 18) if jitter else 0.0)
    centre = (size - 1) / 2 + _shift(rng, jitter)
    across = (yy - centre[0]) * np.cos(angle) - (xx - centre[1]) * np.sin(angle)
    return np.exp(-across ** 2 / (2 * (size / (8.0 * scale)) ** 2))


def dimer(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    width = size / (8.0 * scale)
    first = np.array([size / 4.0, size / 4.0]) + _shift(rng, jitter)
    second = np.array([3 * size / 4.0, 3 * size / 4.0]) + _shift(rng, jitter)
    return np.maximum(_gaussian(yy, xx, first, width), _gaussian(yy, xx, second, width))


def quadrants(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    cell = size / (2.0 * scale)
    shift = _shift(rng, jitter)
    return ((np.floor((yy + shift[0]) / cell) + np.floor((xx + shift[1]) / cell)) % 2).astype(np.float64)


def edge(size: int, rng: np.random.Generator, jitter: bool, scale: int) -> np.ndarray:
    yy, xx = _grid(size)
    angle = rng.uniform(-np.pi / 18, np.pi / 18) if jitter else 0.0
    offset = (size - 1) / 2 + _shift(rng, jitter)[0]
    across = (yy - offset) * np.cos(angle) - (xx - (size - 1) / 2) * np.sin(angle)
    return 1.0 / (1.0 + np.exp(-across * scale))


FAMILIES: Dict[int, Callable] = dict(enumerate((blob, ring, band, dimer, quadrants, edge)))


def lattice_texture(size: int, rng: np.random.Generator, jitter: bool) -> np.ndarray:
    """ Zero-mean square lattice of TEXTURE_PERIOD px in [-1, 1], random phase
    along each axis.
    """
    yy, xx = _grid(size)
    phase = rng.uniform(0, 2 * np.pi, 2) if jitter else np.zeros(2)
    k = 2 * np.pi / TEXTURE_PERIOD
    return 0.5 * (np.cos(k * yy + phase[0]) + np.cos(k * xx + phase[1]))


def synthesize_image(label: int, size: int, rng: np.random.Generator, jitter: bool = True,
                     texture: float = 0.0) -> np.ndarray:
    """ Noise-free image of cluster label: its morphology plus texture times the
    lattice texture. Without jitter the image only depends on the label.
    """
    family = FAMILIES[label % len(FAMILIES)]
    scale = 1 + label // len(FAMILIES)
    pattern_rng = rng if jitter else np.random.default_rng([FAMILY_SEED, label])
    image = family(size, pattern_rng, jitter, scale)
    if texture > 0:
        image = image + texture * lattice_texture(size, pattern_rng, jitter)
    return image


def synthesize_dataset(settings: SynthSettings = None, seed: int = 0) -> ImageDataset:
    """ clusters x per_cluster images of size x size x 1, cluster labels
    interleaved (image i has label i % clusters) so that contiguous
    partitions hold every cluster.
    """
    settings = settings if settings is not None else SynthSettings()
    settings.validate()
    n = settings.clusters * settings.per_cluster
    rng = np.random.default_rng(seed)

    images = np.empty((n, settings.size, settings.size, 1), dtype=core.DTYPE)
    labels = np.arange(n, dtype=np.int64) % settings.clusters
    for i, label in enumerate(labels):
        image = synthesize_image(int(label), settings.size, rng, settings.jitter, settings.texture)
        if settings.noise > 0:
            image = image + settings.noise * rng.standard_normal(image.shape)
        images[i, :, :, 0] = image
    log('Synthesized {} images ({} clusters of {}), {}x{}'.format(
        n, settings.clusters, settings.per_cluster, settings.size, settings.size))
    return ImageDataset(images, (n, n), SYNTHETIC, labels=labels)
