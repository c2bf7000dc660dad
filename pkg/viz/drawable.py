# -*- coding: utf-8 -*-

import abc
from xml.sax.saxutils import quoteattr

import pygame

import config as cfg


class Drawable(abc.ABC):
    """ Abstract drawable class. Implements a generic map object that can be
    painted on a pygame surface or written as an SVG element.
    """
    def __init__(self,
                 x: float,
                 y: float,
                 color: pygame.Color = None,
                 border_color: pygame.Color = None,
                 border_size: int = None):
        self.x = x  # canvas coordinates
        self.y = y
        self.color = color
        self.border_color = border_color
        self.border_size = border_size

    def draw(self, screen: pygame.Surface):
        if self.color is None:
            return

        r = self.rect
        if r is None:
            return

        pygame.draw.rect(screen, self.color, r, 0)
        if self.border_color is not None and self.border_size:
            pygame.draw.rect(screen, self.border_color, r, self.border_size)

    @property
    @abc.abstractmethod
    def rect(self) -> pygame.Rect or None:
        """ Must be overloaded by children classes
        """
        return None

    @abc.abstractmethod
    def svg(self) -> str:
        pass


class MapPoint(Drawable):
    """ One embedded example
    """
    def __init__(self, index: int, x: float, y: float, radius: float = cfg.POINT_RADIUS,
                 color: pygame.Color = cfg.POINT_COLOR):
        super().__init__(x, y, color)
        self.index = index
        self.radius = radius

    @property
    def rect(self) -> pygame.Rect:
        r = int(round(self.radius))
        return pygame.Rect(int(round(self.x)) - r, int(round(self.y)) - r, 2 * r + 1, 2 * r + 1)

    def draw(self, screen: pygame.Surface):
        pygame.draw.circle(screen, self.color, (int(round(self.x)), int(round(self.y))),
                           max(1, int(round(self.radius))), 0)

    def svg(self) -> str:
        return '<circle class="point" data-index="{}" cx="{:.3f}" cy="{:.3f}" r="{:.3f}" fill="{}"/>'.format(
            self.index, self.x, self.y, self.radius, cfg.color_hex(self.color))


class Thumbnail(Drawable):
    """ Example image centred at its map point
    """
    def __init__(self, index: int, x: float, y: float, surface: pygame.Surface, png_base64: str,
                 border_color: pygame.Color = cfg.THUMBNAIL_BORDER_COLOR):
        super().__init__(x, y, cfg.BACKGROUND_COLOR, border_color, 1)
        self.index = index
        self.surface = surface
        self.png_base64 = png_base64

    @property
    def side(self) -> int:
        return self.surface.get_width()

    @property
    def rect(self) -> pygame.Rect:
        return pygame.Rect(int(round(self.x - self.side / 2)), int(round(self.y - self.side / 2)),
                           self.side, self.side)

    def draw(self, screen: pygame.Surface):
        r = self.rect
        screen.blit(self.surface, r)
        pygame.draw.rect(screen, self.border_color, r, self.border_size)

    def svg(self) -> str:
        x, y = self.x - self.side / 2, self.y - self.side / 2
        href = quoteattr('data:image/png;base64,' + self.png_base64)
        return ('<image class="thumbnail" data-index="{0}" x="{1:.3f}" y="{2:.3f}" width="{3}" height="{3}" '
                'href={4}/><rect x="{1:.3f}" y="{2:.3f}" width="{3}" height="{3}" fill="none" stroke="{5}"/>').format(
            self.index, x, y, self.side, href, cfg.color_hex(self.border_color))
