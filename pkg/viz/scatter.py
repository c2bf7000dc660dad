# -*- coding: utf-8 -*-

import json
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import pygame

import config as cfg
from config import ScatterSpec
from errors import DimensionError
from helpers import log, LogLevel

from .drawable import Drawable, MapPoint, Thumbnail
from .thumbnails import image_surface, png_base64


@dataclass
class CanvasTransform:
    """ canvas = scale * map + offset, the same scale on both axes.
    """
    scale: float
    offset: np.ndarray

    def apply(self, y: np.ndarray) -> np.ndarray:
        return y * self.scale + self.offset

    def metadata(self) -> str:
        return json.dumps({'aspect': 'preserved', 'scale': self.scale,
                           'offset': [float(v) for v in self.offset]}, sort_keys=True)


def fit_canvas(y: np.ndarray, spec: ScatterSpec) -> CanvasTransform:
    """ Affine map of the embedding's bounding box, centred in the canvas
    inside the margin. The longer side of the box fills the drawable area.
    """
    lo, hi = y.min(axis=0), y.max(axis=0)
    extent = float(np.max(hi - lo))
    area = spec.canvas - 2 * spec.margin
    scale = area / extent if extent > 0 else 1.0
    offset = spec.canvas / 2.0 - scale * (lo + hi) / 2.0
    return CanvasTransform(scale, offset)


def select_thumbnails(n: int, spec: ScatterSpec) -> np.ndarray:
    """ Sorted indices of min(K, N) examples drawn without replacement.
    """
    k = min(spec.thumbnails, n)
    if k < spec.thumbnails:
        log('Only {} examples for {} thumbnails'.format(n, spec.thumbnails), LogLevel.DEBUG)
    rng = np.random.default_rng(spec.seed)
    return np.sort(rng.choice(n, size=k, replace=False))


def map_drawables(y: np.ndarray, spec: ScatterSpec, images: Optional[np.ndarray] = None,
                  labels: Optional[Sequence[int]] = None) -> List[Drawable]:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 2 or y.shape[1] != 2:
        raise DimensionError('Scatter maps need a 2-dimensional embedding, got shape {}'.format(y.shape))
    if images is not None and len(images) != len(y):
        raise DimensionError('{} images for {} map points'.format(len(images), len(y)))
    spec.validate()

    transform = fit_canvas(y, spec)
    xy = transform.apply(y)
    drawables: List[Drawable] = [
        MapPoint(i, xy[i, 0], xy[i, 1], spec.radius, cfg.label_color(None if labels is None else labels[i]))
        for i in range(len(y))]
    if images is not None:
        for i in select_thumbnails(len(y), spec):
            surface = image_surface(images[i], spec.thumbnail_side)
            drawables.append(Thumbnail(int(i), xy[i, 0], xy[i, 1], surface, png_base64(surface)))
    return drawables


def emit_scatter_svg(y: np.ndarray, spec: ScatterSpec = None, images: Optional[np.ndarray] = None,
                     labels: Optional[Sequence[int]] = None) -> str:
    """ SVG map with one circle per example and, if images are given, K
    seeded-random thumbnails at their map points.
    """
    spec = spec if spec is not None else ScatterSpec()
    drawables = map_drawables(y, spec, images, labels)
    transform = fit_canvas(np.asarray(y, dtype=np.float64), spec)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 {0} {0}">'.format(spec.canvas),
        '<metadata>{}</metadata>'.format(transform.metadata()),
        '<rect width="100%" height="100%" fill="{}"/>'.format(cfg.color_hex(cfg.BACKGROUND_COLOR)),
    ]
    lines += [d.svg() for d in drawables]
    lines.append('</svg>')
    return '\n'.join(lines) + '\n'


def render_preview_png(path, y: np.ndarray, spec: ScatterSpec = None, images: Optional[np.ndarray] = None,
                       labels: Optional[Sequence[int]] = None) -> None:
    """ Raster version of the SVG map, drawn with pygame.
    """
    spec = spec if spec is not None else ScatterSpec()
    screen = pygame.Surface((spec.canvas, spec.canvas))
    screen.fill(cfg.BACKGROUND_COLOR)
    for drawable in map_drawables(y, spec, images, labels):
        drawable.draw(screen)
    pygame.image.save(screen, str(path))
    log('Map preview written to {}'.format(path))
