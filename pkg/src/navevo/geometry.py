"""Axis-aligned rectangle primitives shared by the maze and the simulator.

Walls are axis-aligned rectangles stored as (x0, y0, x1, y1) with
x0 < x1 and y0 < y1. Distances are Euclidean, in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x0 < self.x1 and self.y0 < self.y1):
            raise ValueError(f"degenerate rect {self}")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    def contains(self, x: float, y: float) -> bool:
        return self.x0 <= x <= self.x1 and self.y0 <= y <= self.y1


def rect_array(rects) -> np.ndarray:
    """Pack rectangles into an (N, 4) float64 array for the numba kernels."""
    if not rects:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array([[r.x0, r.y0, r.x1, r.y1] for r in rects], dtype=np.float64)


def point_rect_distance(x: float, y: float, r: Rect) -> float:
    """Distance from a point to a closed rectangle (0 inside)."""
    dx = max(r.x0 - x, 0.0, x - r.x1)
    dy = max(r.y0 - y, 0.0, y - r.y1)
    return math.hypot(dx, dy)


def rect_rect_distance(a: Rect, b: Rect) -> float:
    """Distance between two closed rectangles (0 when they intersect)."""
    dx = max(a.x0 - b.x1, 0.0, b.x0 - a.x1)
    dy = max(a.y0 - b.y1, 0.0, b.y0 - a.y1)
    return math.hypot(dx, dy)


def rects_intersect(a: Rect, b: Rect) -> bool:
    return not (a.x1 < b.x0 or b.x1 < a.x0 or a.y1 < b.y0 or b.y1 < a.y0)


def wrap_angle(theta: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    theta = math.fmod(theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    return theta


def signed_angle(theta: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    theta = wrap_angle(theta)
    if theta > math.pi:
        theta -= TWO_PI
    return theta
