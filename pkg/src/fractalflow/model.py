"""Fractal Deformation Network (FDN) and the flow regression head.

The FDN is a U-Net-style encoder/decoder of depth ``d``: each encoder block
is two 3x3 conv + batch-norm + ReLU layers followed by 2x2 max pooling, each
decoder stage a 2x2 transposed convolution, an additive skip connection and
two more conv + batch-norm + ReLU layers. A 1x1 projection and a five-layer
3x3 convolutional head turn the 32-channel FDN features into a two-channel
displacement field (u horizontal, v vertical, positive v pointing down).
"""

from dataclasses import dataclass, field

import numpy as np

from .engine import (
    BatchNormState,
    Tensor,
    as_tensor,
    batchnorm2d,
    bilinear_resize,
    conv2d,
    conv_transpose2d,
    maxpool2d,
    pad2d,
    relu,
)


@dataclass(frozen=True)
class FdnConfig:
    depth: int = 4
    encoder_channels: tuple = (2, 32, 64, 128, 256)
    decoder_channels: tuple = (256, 128, 64, 32, 32)
    projection_out: int = 64
    flow_head_channels: tuple = (64, 128, 256, 128, 64, 2)

    def __post_init__(self):
        object.__setattr__(self, "encoder_channels", tuple(self.encoder_channels))
        object.__setattr__(self, "decoder_channels", tuple(self.decoder_channels))
        object.__setattr__(self, "flow_head_channels", tuple(self.flow_head_channels))
        d = self.depth
        if d < 1:
            raise ValueError("depth must be >= 1")
        if len(self.encoder_channels) != d + 1 or len(self.decoder_channels) != d + 1:
            raise ValueError("encoder and decoder channel lists need depth + 1 entries")
        for i in range(d):
            if self.decoder_channels[i] != self.encoder_channels[d - i]:
                raise ValueError("decoder_channels[i] must equal encoder_channels[depth - i]")
        counts = (
            self.encoder_channels
            + self.decoder_channels
            + self.flow_head_channels
            + (self.projection_out,)
        )
        if any(c <= 0 for c in counts):
            raise ValueError("channel counts must be positive")
        if self.flow_head_channels[0] != self.projection_out:
            raise ValueError("flow head must start at the projection width")

    @classmethod
    def scaled(cls, depth=4, width=32):
        """Same topology with a different base width; used for quick tests."""
        enc = (2,) + tuple(width * 2**i for i in range(depth))
        dec = tuple(reversed(enc[1:])) + (width,)
        proj = 2 * width
        head = (proj, 4 * width, 8 * width, 4 * width, 2 * width, 2)
        return cls(depth, enc, dec, proj, head)

    def as_dict(self):
        return {
            "depth": self.depth,
            "encoder_channels": list(self.encoder_channels),
            "decoder_channels": list(self.decoder_channels),
            "projection_out": self.projection_out,
            "flow_head_channels": list(self.flow_head_channels),
        }


def layer_shapes(config):
    """Ordered (name, shape) for every trainable tensor, plus batch-norm names."""
    shapes = []
    norms = []
    d = config.depth
    enc, dec = config.encoder_channels, config.decoder_channels

    def conv(name, cin, cout, k):
        shapes.append((f"{name}.weight", (cout, cin, k, k)))
        shapes.append((f"{name}.bias", (cout,)))

    def norm(name, c):
        shapes.append((f"{name}.gamma", (c,)))
        shapes.append((f"{name}.beta", (c,)))
        norms.append((name, c))

    for j in range(1, d + 1):
        conv(f"enc{j}.conv1", enc[j - 1], enc[j], 3)
        norm(f"enc{j}.bn1", enc[j])
        conv(f"enc{j}.conv2", enc[j], enc[j], 3)
        norm(f"enc{j}.bn2", enc[j])
    for s in range(1, d + 1):
        cin, cout = dec[s - 1], dec[s]
        shapes.append((f"dec{s}.up.weight", (cin, cout, 2, 2)))
        shapes.append((f"dec{s}.up.bias", (cout,)))
        conv(f"dec{s}.conv1", cout, cout, 3)
        norm(f"dec{s}.bn1", cout)
        conv(f"dec{s}.conv2", cout, cout, 3)
        norm(f"dec{s}.bn2", cout)
    conv("proj", dec[d], config.projection_out, 1)
    head = config.flow_head_channels
    for i in range(1, len(head)):
        conv(f"head{i}", head[i - 1], head[i], 3)
    return shapes, norms


@dataclass
class ModelParameters:
    params: dict = field(default_factory=dict)
    norms: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]

    def parameters(self):
        return list(self.params.values())

    def named_parameters(self):
        return list(self.params.items())

    def count(self):
        return sum(p.data.size for p in self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()


def init_model(config=None, seed=0):
    """Seeded initialization: fan-in uniform conv weights, zero biases, unit BN gamma."""
    config = config or FdnConfig()
    rng = np.random.default_rng(seed)
    shapes, norms = layer_shapes(config)
    params = {}
    for name, shape in shapes:
        if name.endswith(".weight"):
            if ".up." in name:
                fan_in = shape[0]
            else:
                fan_in = shape[1] * shape[2] * shape[3]
            bound = np.sqrt(6.0 / fan_in)
            data = rng.uniform(-bound, bound, size=shape)
        elif name.endswith(".gamma"):
            data = np.ones(shape)
        else:
            data = np.zeros(shape)
        params[name] = Tensor(data, requires_grad=True, name=name)
    return ModelParameters(params, {name: BatchNormState.fresh(c) for name, c in norms})


def pad_to_grid(x, depth):
    """Zero-pad bottom/right so H and W become multiples of ``2**depth``.

    Returns the padded tensor and the original (H, W) for :func:`crop_to`.
    """
    x = as_tensor(x)
    height, width = x.shape[-2:]
    if height < 1 or width < 1:
        raise ValueError("pad_to_grid: spatial extents must be positive")
    grid = 2**depth
    ph = -height % grid
    pw = -width % grid
    if ph == 0 and pw == 0:
        return x, (height, width)
    return pad2d(x, ph, pw), (height, width)


def crop_to(x, crop_info):
    height, width = crop_info
    if x.shape[-2:] == (height, width):
        return x
    return x[:, :, :height, :width]


def _conv_bn_relu(model, x, name, training):
    p = model.params
    x = conv2d(x, p[f"{name}.conv1.weight"], p[f"{name}.conv1.bias"], padding=1)
    x = relu(batchnorm2d(x, p[f"{name}.bn1.gamma"], p[f"{name}.bn1.beta"],
                         state=model.norms[f"{name}.bn1"], training=training))
    x = conv2d(x, p[f"{name}.conv2.weight"], p[f"{name}.conv2.bias"], padding=1)
    x = relu(batchnorm2d(x, p[f"{name}.bn2.gamma"], p[f"{name}.bn2.beta"],
                         state=model.norms[f"{name}.bn2"], training=training))
    return x


def _check_pair(pair, config):
    pair = as_tensor(pair)
    if pair.ndim != 4:
        raise ValueError(f"expected a B x C x H x W input, got shape {pair.shape}")
    if pair.shape[1] != config.encoder_channels[0]:
        raise ValueError(f"expected {config.encoder_channels[0]} input channels, got {pair.shape[1]}")
    if pair.shape[2] < 1 or pair.shape[3] < 1:
        raise ValueError("spatial extents must be positive")
    return pair


def fdn_forward(pair, model, config=None, training=True):
    """Encoder/decoder features, B x 32 x H x W for the default config."""
    config = config or FdnConfig()
    pair = _check_pair(pair, config)
    d = config.depth
    x, crop_info = pad_to_grid(pair, d)

    skips = {}
    for j in range(1, d + 1):
        x = _conv_bn_relu(model, x, f"enc{j}", training)
        skips[config.encoder_channels[j]] = x
        x = maxpool2d(x)

    p = model.params
    for s in range(1, d + 1):
        x = conv_transpose2d(x, p[f"dec{s}.up.weight"], p[f"dec{s}.up.bias"])
        if s < d:
            # encoder level with the same width, tapped before pooling
            skip = skips[config.decoder_channels[s]]
            x = x + bilinear_resize(skip, x.shape[2], x.shape[3])
        x = _conv_bn_relu(model, x, f"dec{s}", training)
    return crop_to(x, crop_info)


def predict_flow(pair, model, config=None, training=True):
    """Two-channel flow (u, v) with the same spatial size as ``pair``."""
    config = config or FdnConfig()
    features = fdn_forward(pair, model, config, training)
    p = model.params
    x = conv2d(features, p["proj.weight"], p["proj.bias"])
    n_head = len(config.flow_head_channels) - 1
    for i in range(1, n_head + 1):
        x = conv2d(x, p[f"head{i}.weight"], p[f"head{i}.bias"], padding=1)
        if i < n_head:
            x = relu(x)
    return x
