import numpy as np
from PIL import Image, UnidentifiedImageError

from ..errors import FormatError
from .types import GrayImage


def load_grayscale(path):
    """Load a raster as intensities in [0, 1].

    Color images are reduced with an equal-weight channel average; 16-bit
    images are scaled by 65535, 8-bit by 255.
    """
    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode in ("I;16", "I;16B", "I;16L", "I"):
                values = np.asarray(img, dtype=np.float64)
                scale = 65535.0 if mode.startswith("I;16") or values.max() > 255 else 255.0
                return GrayImage(np.clip(values / scale, 0.0, 1.0))
            if mode == "F":
                return GrayImage(np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0))
            if mode not in ("L", "RGB"):
                img = img.convert("RGB")
            values = np.asarray(img, dtype=np.float64)
    except (OSError, UnidentifiedImageError, ValueError) as exc:
        raise FormatError(f"cannot read image {path}: {exc}") from exc
    if values.ndim == 3:
        values = values.mean(axis=2)
    return GrayImage(values / 255.0)


def to_uint8(values):
    return np.clip(np.round(np.asarray(values) * 255.0), 0, 255).astype(np.uint8)


def save_grayscale(path, image, format=None):
    """Write an 8-bit grayscale image (binary PGM for ``.pgm`` paths)."""
    values = image.values if isinstance(image, GrayImage) else np.asarray(image)
    Image.fromarray(to_uint8(values), mode="L").save(path, format=format)


def save_rgb(path, rgb):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)
