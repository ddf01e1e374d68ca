import numpy as np

from .types import FlowField, GrayImage


def bilinear_sample(values, rows, cols):
    """Sample a 2-D array at fractional (row, col) positions.

    Positions outside the grid are clamped to the nearest border pixel.
    """
    height, width = values.shape
    rows = np.clip(rows, 0.0, height - 1.0)
    cols = np.clip(cols, 0.0, width - 1.0)
    r0 = np.minimum(np.floor(rows).astype(np.intp), max(height - 2, 0))
    c0 = np.minimum(np.floor(cols).astype(np.intp), max(width - 2, 0))
    r1 = np.minimum(r0 + 1, height - 1)
    c1 = np.minimum(c0 + 1, width - 1)
    fr = rows - r0
    fc = cols - c0
    top = values[r0, c0] * (1.0 - fc) + values[r0, c1] * fc
    bottom = values[r1, c0] * (1.0 - fc) + values[r1, c1] * fc
    return top * (1.0 - fr) + bottom * fr


def warp_image(image, flow):
    """Backward warp: ``out[y, x] = image[y + v(y, x), x + u(y, x)]``.

    With ``out = warp_image(I2, w)`` a perfect flow gives ``out == I1``.
    """
    values = image.values if isinstance(image, GrayImage) else np.asarray(image, dtype=np.float64)
    if not isinstance(flow, FlowField):
        flow = FlowField.from_array(flow)
    if values.shape != flow.shape:
        raise ValueError(f"image {values.shape} and flow {flow.shape} differ in shape")
    rows, cols = np.indices(values.shape, dtype=np.float64)
    warped = bilinear_sample(values, rows + flow.v, cols + flow.u)
    return GrayImage(warped) if isinstance(image, GrayImage) else warped
