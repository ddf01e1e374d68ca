"""Shepp-Logan phantom with embedded, independently moving discs."""

from dataclasses import dataclass

import numpy as np

from .types import FlowField, GrayImage
from .warp import warp_image

# Modified Shepp-Logan (Toft): intensity, semi-axis x, semi-axis y, x0, y0, angle (deg)
SHEPP_LOGAN_ELLIPSES = (
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0),
    (-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0),
)


def phantom_coordinates(size):
    """Normalized (x, y) of each pixel center; y points up, row 0 is y = +1."""
    axis = (np.arange(size) - (size - 1) / 2) / ((size - 1) / 2)
    x = np.broadcast_to(axis[None, :], (size, size))
    y = np.broadcast_to(-axis[:, None], (size, size))
    return x, y


def shepp_logan(size=256):
    if size < 16:
        raise ValueError("shepp_logan: size must be at least 16")
    x, y = phantom_coordinates(size)
    image = np.zeros((size, size))
    for value, a, b, x0, y0, angle in SHEPP_LOGAN_ELLIPSES:
        phi = np.deg2rad(angle)
        dx, dy = x - x0, y - y0
        xr = dx * np.cos(phi) + dy * np.sin(phi)
        yr = -dx * np.sin(phi) + dy * np.cos(phi)
        image[(xr / a) ** 2 + (yr / b) ** 2 <= 1.0] += value
    return GrayImage(np.clip(image, 0.0, 1.0))


DEFAULT_EDGE_WIDTH = 3.0


@dataclass(frozen=True)
class CircleSpec:
    center: tuple  # (row, col), pixels
    radius: float
    intensity: float
    displacement: tuple = (0.0, 0.0)  # (du, dv), pixels; dv > 0 moves down
    edge_width: float = 0.0  # raised-cosine rim width in pixels; 0 gives a hard edge

    def coverage(self, shape):
        """Disc opacity in [0, 1]; exactly 1 inside ``radius - edge_width/2``."""
        rows, cols = np.indices(shape, dtype=np.float64)
        dist = np.hypot(rows - self.center[0], cols - self.center[1])
        if self.edge_width <= 0:
            return (dist <= self.radius).astype(np.float64)
        t = np.clip((self.radius - dist) / self.edge_width + 0.5, 0.0, 1.0)
        return 0.5 - 0.5 * np.cos(np.pi * t)

    def mask(self, shape):
        """Pixels that belong to the disc (the support of its ground-truth motion)."""
        rows, cols = np.indices(shape, dtype=np.float64)
        return (rows - self.center[0]) ** 2 + (cols - self.center[1]) ** 2 <= self.radius**2

    def fits(self, size):
        du, dv = self.displacement
        reach = self.radius + max(self.edge_width, 0.0) / 2
        for drow, dcol in ((0.0, 0.0), (dv, du)):
            row, col = self.center[0] + drow, self.center[1] + dcol
            if row - reach < 0 or col - reach < 0:
                return False
            if row + reach > size - 1 or col + reach > size - 1:
                return False
        return True


def default_circles(size, shift=3.0, edge_width=DEFAULT_EDGE_WIDTH):
    """Upper disc (0.5) moving up, lower disc (0.75) moving down by ``shift`` pixels."""
    radius = size / 10
    return [
        CircleSpec((size / 4, size / 2), radius, 0.5, (0.0, -float(shift)), edge_width),
        CircleSpec((3 * size / 4, size / 2), radius, 0.75, (0.0, float(shift)), edge_width),
    ]


def _check_circles(size, circles):
    for c in circles:
        if not 0.0 <= c.intensity <= 1.0:
            raise ValueError(f"circle intensity {c.intensity} outside [0, 1]")
        if c.radius <= 0:
            raise ValueError("circle radius must be positive")
        if not c.fits(size):
            raise ValueError(f"circle at {c.center} (radius {c.radius}) leaves the image")
    for i, a in enumerate(circles):
        for b in circles[i + 1:]:
            for pa, pb in (
                (a.center, b.center),
                (
                    (a.center[0] + a.displacement[1], a.center[1] + a.displacement[0]),
                    (b.center[0] + b.displacement[1], b.center[1] + b.displacement[0]),
                ),
            ):
                reach = a.radius + b.radius + (a.edge_width + b.edge_width) / 2
                if np.hypot(pa[0] - pb[0], pa[1] - pb[1]) <= reach:
                    raise ValueError("circles overlap")


def make_phantom_pair(size=256, circles=None):
    """Return ``(frame1, frame2, gt)`` for the moving-disc phantom.

    ``gt`` holds each disc's displacement on the disc's frame-1 pixels and
    zero elsewhere. Frame 2 is the phantom with every disc layer backward
    warped by its own motion and composited on top, so
    ``frame1(x) == frame2(x + gt(x))`` inside the discs.
    """
    circles = default_circles(size) if circles is None else list(circles)
    _check_circles(size, circles)
    base = shepp_logan(size).values
    frame1 = base.copy()
    frame2 = base.copy()
    u = np.zeros((size, size))
    v = np.zeros((size, size))
    for c in circles:
        du, dv = c.displacement
        layer = c.coverage((size, size))
        frame1 = frame1 * (1.0 - layer) + c.intensity * layer
        inside = c.mask((size, size))
        u[inside] = du
        v[inside] = dv
        moved = warp_image(layer, FlowField.constant(size, size, -du, -dv))
        frame2 = frame2 * (1.0 - moved) + c.intensity * moved
    return GrayImage(frame1), GrayImage(frame2), FlowField(u, v)
