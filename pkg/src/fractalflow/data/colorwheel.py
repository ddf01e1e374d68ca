"""Middlebury color-wheel rendering of flow fields."""

import numpy as np

from .types import FlowField

# red-yellow, yellow-green, green-cyan, cyan-blue, blue-magenta, magenta-red
_SEGMENTS = (15, 6, 4, 11, 13, 6)


def make_colorwheel():
    """The 55 x 3 Middlebury hue table (values 0..255)."""
    ry, yg, gc, cb, bm, mr = _SEGMENTS
    wheel = np.zeros((sum(_SEGMENTS), 3))
    col = 0
    wheel[col:col + ry, 0] = 255
    wheel[col:col + ry, 1] = np.floor(255 * np.arange(ry) / ry)
    col += ry
    wheel[col:col + yg, 0] = 255 - np.floor(255 * np.arange(yg) / yg)
    wheel[col:col + yg, 1] = 255
    col += yg
    wheel[col:col + gc, 1] = 255
    wheel[col:col + gc, 2] = np.floor(255 * np.arange(gc) / gc)
    col += gc
    wheel[col:col + cb, 1] = 255 - np.floor(255 * np.arange(cb) / cb)
    wheel[col:col + cb, 2] = 255
    col += cb
    wheel[col:col + bm, 2] = 255
    wheel[col:col + bm, 0] = np.floor(255 * np.arange(bm) / bm)
    col += bm
    wheel[col:col + mr, 2] = 255 - np.floor(255 * np.arange(mr) / mr)
    wheel[col:col + mr, 0] = 255
    return wheel


def wheel_position(u, v):
    """Fractional color-wheel index in [0, 54] for direction (u, v)."""
    ncols = sum(_SEGMENTS)
    angle = np.arctan2(-v, -u) / np.pi
    return (angle + 1.0) / 2.0 * (ncols - 1)


def flow_to_color(flow, max_magnitude=None):
    """Render ``flow`` as an H x W x 3 uint8 RGB image.

    Direction selects the hue, magnitude relative to ``max_magnitude`` (the
    field maximum by default) the saturation. Zero motion is white and the
    largest vector is fully saturated.
    """
    if not isinstance(flow, FlowField):
        flow = FlowField.from_array(flow)
    u = np.nan_to_num(flow.u)
    v = np.nan_to_num(flow.v)
    if max_magnitude is None:
        max_magnitude = float(np.hypot(u, v).max()) if u.size else 0.0
    if max_magnitude > 0:
        u = u / max_magnitude
        v = v / max_magnitude
    else:
        u = np.zeros_like(u)
        v = np.zeros_like(v)

    wheel = make_colorwheel()
    ncols = wheel.shape[0]
    rad = np.hypot(u, v)
    fk = wheel_position(u, v)
    k0 = np.floor(fk).astype(np.intp)
    k1 = (k0 + 1) % ncols
    frac = fk - k0
    image = np.zeros(u.shape + (3,), dtype=np.uint8)
    # rounding in the normalization can push the peak a hair above 1
    inside = rad <= 1.0 + 1e-9
    rad = np.minimum(rad, 1.0)
    for channel in range(3):
        col0 = wheel[k0, channel] / 255.0
        col1 = wheel[k1, channel] / 255.0
        col = (1 - frac) * col0 + frac * col1
        col = np.where(inside, 1 - rad * (1 - col), col * 0.75)
        image[..., channel] = np.floor(255 * col)
    return image
