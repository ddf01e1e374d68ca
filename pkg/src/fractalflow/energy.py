"""Training objective: linearized brightness constancy in L1 and L2 plus anisotropic TV.

For frames ``I1``, ``I2`` and flow ``w = (u, v)`` the residual is
``r = dI2/dx * u + dI2/dy * v + I2 - I1`` and the energy is::

    lambda1 * |r|_1 + lambda2 * |r|_2^2 + lambda_tv * TV(w)

With ``reduction="mean"`` (the default) every norm is divided by the number
of pixels; ``"sum"`` keeps the raw sums.
"""

from dataclasses import dataclass

import numpy as np

from .engine import Tensor, absolute, as_tensor, square, tsum

REDUCTIONS = ("mean", "sum")


@dataclass(frozen=True)
class EnergyWeights:
    lambda1: float = 0.2
    lambda2: float = 0.8
    lambda_tv: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda_tv"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be a finite non-negative number, got {value!r}")


@dataclass
class EnergyBreakdown:
    data_l1: Tensor
    data_l2: Tensor
    tv: Tensor
    total: Tensor

    def as_floats(self):
        return {
            "total_loss": self.total.item(),
            "data_l1": self.data_l1.item(),
            "data_l2": self.data_l2.item(),
            "tv": self.tv.item(),
        }


def _image_array(image):
    data = image.data if isinstance(image, Tensor) else np.asarray(image, dtype=np.float64)
    if data.ndim == 2:
        data = data[None, None]
    if data.ndim != 4 or data.shape[1] != 1:
        raise ValueError(f"expected an H x W or B x 1 x H x W image, got shape {data.shape}")
    return data


def image_gradient(image):
    """Central differences inside, one-sided differences on the border.

    Returns ``(gx, gy)`` along width and height as plain arrays shaped like
    the B x 1 x H x W input; the frames are data, not trainable.
    """
    data = _image_array(image)
    if data.shape[2] < 2 or data.shape[3] < 2:
        raise ValueError("image_gradient needs at least 2 pixels along each axis")
    gy, gx = np.gradient(data, axis=(2, 3))
    return gx, gy


def _split_flow(flow):
    flow = as_tensor(flow)
    if flow.ndim != 4 or flow.shape[1] != 2:
        raise ValueError(f"flow must be B x 2 x H x W, got shape {flow.shape}")
    return flow[:, 0:1], flow[:, 1:2]


def data_residual(i1, i2, flow):
    """Per-pixel linearized constancy residual, B x 1 x H x W."""
    a1, a2 = _image_array(i1), _image_array(i2)
    u, v = _split_flow(flow)
    if a1.shape != a2.shape or a2.shape != u.shape:
        raise ValueError(f"shape mismatch: I1 {a1.shape}, I2 {a2.shape}, flow channel {u.shape}")
    gx, gy = image_gradient(a2)
    return u * gx + v * gy + (a2 - a1)


def anisotropic_tv(flow, reduction="mean"):
    """Sum of |forward differences| of u and v along both axes.

    The difference across the last row/column is zero (Neumann boundary), so
    the mean divides by the full pixel count.
    """
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}")
    flow = as_tensor(flow)
    if flow.ndim != 4 or flow.shape[1] != 2:
        raise ValueError(f"flow must be B x 2 x H x W, got shape {flow.shape}")
    batch, _, height, width = flow.shape
    if height < 2 or width < 2:
        raise ValueError("anisotropic_tv needs at least 2 pixels along each axis")
    dx = flow[:, :, :, 1:] - flow[:, :, :, :-1]
    dy = flow[:, :, 1:, :] - flow[:, :, :-1, :]
    total = tsum(absolute(dx)) + tsum(absolute(dy))
    if reduction == "mean":
        total = total / (batch * height * width)
    return total


def total_energy(i1, i2, flow, weights=None, reduction="mean"):
    if reduction not in REDUCTIONS:
        raise ValueError(f"reduction must be one of {REDUCTIONS}")
    weights = weights or EnergyWeights()
    r = data_residual(i1, i2, flow)
    data_l1 = tsum(absolute(r))
    data_l2 = tsum(square(r))
    if reduction == "mean":
        data_l1 = data_l1 / r.size
        data_l2 = data_l2 / r.size
    tv = anisotropic_tv(flow, reduction)
    total = weights.lambda1 * data_l1 + weights.lambda2 * data_l2 + weights.lambda_tv * tv
    return EnergyBreakdown(data_l1, data_l2, tv, total)
