from .colorwheel import flow_to_color, make_colorwheel, wheel_position
from .flo import FLO_MAGIC, known_mask, read_flo, write_flo
from .imageio import load_grayscale, save_grayscale, save_rgb
from .phantom import CircleSpec, default_circles, make_phantom_pair, shepp_logan
from .types import FlowField, GrayImage
from .warp import bilinear_sample, warp_image

__all__ = [
    "FLO_MAGIC",
    "CircleSpec",
    "FlowField",
    "GrayImage",
    "bilinear_sample",
    "default_circles",
    "flow_to_color",
    "known_mask",
    "load_grayscale",
    "make_colorwheel",
    "make_phantom_pair",
    "read_flo",
    "save_grayscale",
    "save_rgb",
    "shepp_logan",
    "warp_image",
    "wheel_position",
    "write_flo",
]
