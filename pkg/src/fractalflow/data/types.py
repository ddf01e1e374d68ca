from dataclasses import dataclass

import numpy as np

from ..engine import Tensor


@dataclass
class GrayImage:
    """H x W intensities in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError(f"GrayImage needs a 2-D array, got shape {self.values.shape}")

    @property
    def height(self):
        return self.values.shape[0]

    @property
    def width(self):
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape


@dataclass
class FlowField:
    """Per-pixel displacement: u along columns, v along rows (positive = down)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.u.ndim != 2 or self.u.shape != self.v.shape:
            raise ValueError(f"u and v must be equal-shaped 2-D arrays, got {self.u.shape} and {self.v.shape}")

    @property
    def height(self):
        return self.u.shape[0]

    @property
    def width(self):
        return self.u.shape[1]

    @property
    def shape(self):
        return self.u.shape

    @classmethod
    def zeros(cls, height, width):
        return cls(np.zeros((height, width)), np.zeros((height, width)))

    @classmethod
    def constant(cls, height, width, du, dv):
        return cls(np.full((height, width), float(du)), np.full((height, width), float(dv)))

    @classmethod
    def from_array(cls, array):
        """From an H x W x 2 array."""
        array = np.asarray(array)
        return cls(array[..., 0], array[..., 1])

    @classmethod
    def from_tensor(cls, tensor):
        """From a 1 x 2 x H x W network output."""
        data = tensor.data if isinstance(tensor, Tensor) else np.asarray(tensor)
        if data.ndim != 4 or data.shape[:2] != (1, 2):
            raise ValueError(f"expected a 1 x 2 x H x W flow tensor, got {data.shape}")
        return cls(data[0, 0].copy(), data[0, 1].copy())

    def to_array(self):
        return np.stack([self.u, self.v], axis=-1)

    def to_tensor(self):
        return Tensor(np.stack([self.u, self.v])[None])

    def magnitude(self):
        return np.hypot(self.u, self.v)

    def __neg__(self):
        return FlowField(-self.u, -self.v)

    def scaled(self, factor):
        return FlowField(self.u * factor, self.v * factor)
