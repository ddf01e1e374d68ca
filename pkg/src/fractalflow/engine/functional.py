"""Differentiable image operators used by the flow network.

All operators take and return NCHW tensors.
"""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor import DTYPE, Tensor, as_tensor


def _require_4d(x, opname):
    if x.ndim != 4:
        raise ValueError(f"{opname} expects a B x C x H x W tensor, got shape {x.shape}")


def conv2d(x, weight, bias=None, stride=1, padding=0):
    """2-D cross-correlation, ``weight`` shaped Cout x Cin x k x k."""
    x, weight = as_tensor(x), as_tensor(weight)
    _require_4d(x, "conv2d")
    if weight.ndim != 4 or weight.shape[2] != weight.shape[3]:
        raise ValueError(f"conv2d weight must be Cout x Cin x k x k, got {weight.shape}")
    batch, cin, height, width = x.shape
    cout, wcin, k, _ = weight.shape
    if cin != wcin:
        raise ValueError(f"conv2d: input has {cin} channels, weight expects {wcin}")
    if stride < 1 or padding < 0:
        raise ValueError("conv2d: stride must be >= 1 and padding >= 0")
    out_h = (height + 2 * padding - k) // stride + 1
    out_w = (width + 2 * padding - k) // stride + 1
    if out_h < 1 or out_w < 1:
        raise ValueError("conv2d: kernel larger than padded input")

    xp = x.data
    if padding:
        xp = np.pad(xp, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::stride, ::stride]
    windows = windows[:, :, :out_h, :out_w]
    # columns: (Cin*k*k, B*out_h*out_w)
    cols = np.ascontiguousarray(windows.transpose(1, 4, 5, 0, 2, 3)).reshape(cin * k * k, -1)
    wmat = weight.data.reshape(cout, -1)
    out = (wmat @ cols).reshape(cout, batch, out_h, out_w).transpose(1, 0, 2, 3)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ValueError(f"conv2d bias must have shape ({cout},), got {bias.shape}")
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)
    padded_shape = xp.shape

    def backward(g):
        g2 = g.transpose(1, 0, 2, 3).reshape(cout, -1)
        gw = (g2 @ cols.T).reshape(weight.shape) if weight.requires_grad else None
        gb = g2.sum(axis=1) if bias is not None and bias.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = (wmat.T @ g2).reshape(cin, k, k, batch, out_h, out_w)
            gxp = np.zeros(padded_shape, dtype=DTYPE)
            h_span = stride * (out_h - 1) + 1
            w_span = stride * (out_w - 1) + 1
            for i in range(k):
                for j in range(k):
                    gxp[:, :, i:i + h_span:stride, j:j + w_span:stride] += (
                        gcols[:, i, j].transpose(1, 0, 2, 3)
                    )
            gx = gxp[:, :, padding:padding + height, padding:padding + width] if padding else gxp
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._result(out, parents, backward)


def conv_transpose2d(x, weight, bias=None):
    """Stride-2, 2x2 transposed convolution; ``weight`` is Cin x Cout x 2 x 2.

    With stride equal to the kernel size the receptive fields do not overlap,
    so every input pixel expands into its own 2x2 output block.
    """
    x, weight = as_tensor(x), as_tensor(weight)
    _require_4d(x, "conv_transpose2d")
    batch, cin, height, width = x.shape
    if cin % 2:
        raise ValueError(f"conv_transpose2d: channel count must be even, got {cin}")
    if weight.ndim != 4 or weight.shape[0] != cin or weight.shape[2:] != (2, 2):
        raise ValueError(f"conv_transpose2d weight must be {cin} x Cout x 2 x 2, got {weight.shape}")
    cout = weight.shape[1]

    rows = x.data.transpose(0, 2, 3, 1).reshape(-1, cin)
    wmat = weight.data.reshape(cin, cout * 4)
    blocks = (rows @ wmat).reshape(batch, height, width, cout, 2, 2)
    out = blocks.transpose(0, 3, 1, 4, 2, 5).reshape(batch, cout, 2 * height, 2 * width)
    if bias is not None:
        bias = as_tensor(bias)
        if bias.shape != (cout,):
            raise ValueError(f"conv_transpose2d bias must have shape ({cout},), got {bias.shape}")
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        gblocks = (
            g.reshape(batch, cout, height, 2, width, 2)
            .transpose(0, 2, 4, 1, 3, 5)
            .reshape(-1, cout * 4)
        )
        gx = None
        if x.requires_grad:
            gx = (gblocks @ wmat.T).reshape(batch, height, width, cin).transpose(0, 3, 1, 2)
        gw = (rows.T @ gblocks).reshape(weight.shape) if weight.requires_grad else None
        gb = g.sum(axis=(0, 2, 3)) if bias is not None and bias.requires_grad else None
        return gx, gw, gb

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._result(out, parents, backward)


def maxpool2d(x):
    """2x2 max pooling with stride 2.

    Ties go to the first element of the window in row-major order, and only
    that element receives gradient.
    """
    x = as_tensor(x)
    _require_4d(x, "maxpool2d")
    batch, channels, height, width = x.shape
    if height % 2 or width % 2:
        raise ValueError(f"maxpool2d needs even spatial extents, got {height}x{width}")
    oh, ow = height // 2, width // 2
    windows = (
        x.data.reshape(batch, channels, oh, 2, ow, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(batch, channels, oh, ow, 4)
    )
    winner = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, winner[..., None], axis=-1)[..., 0]

    def backward(g):
        onehot = np.zeros((batch, channels, oh, ow, 4), dtype=DTYPE)
        np.put_along_axis(onehot, winner[..., None], g[..., None], axis=-1)
        gx = (
            onehot.reshape(batch, channels, oh, ow, 2, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(batch, channels, height, width)
        )
        return (gx,)

    return Tensor._result(out, (x,), backward)


def relu(x):
    x = as_tensor(x)
    active = x.data > 0

    def backward(g):
        return (g * active,)

    return Tensor._result(np.where(active, x.data, 0.0), (x,), backward)


@dataclass
class BatchNormState:
    """Running statistics of one batch-norm layer."""

    running_mean: np.ndarray
    running_var: np.ndarray
    momentum: float = 0.1

    @classmethod
    def fresh(cls, channels, momentum=0.1):
        return cls(np.zeros(channels, dtype=DTYPE), np.ones(channels, dtype=DTYPE), momentum)


def batchnorm2d(x, gamma, beta, eps=1e-5, state=None, training=True):
    """Per-channel normalization over the B, H, W axes followed by an affine map.

    In training mode the batch statistics are used and ``state`` (when given)
    is updated in place with the running mean and unbiased running variance.
    In eval mode ``state`` supplies the statistics.
    """
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    _require_4d(x, "batchnorm2d")
    batch, channels, height, width = x.shape
    count = batch * height * width
    if count == 0:
        raise ValueError("batchnorm2d: zero spatial extent")
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise ValueError("batchnorm2d: gamma/beta must have one entry per channel")
    axes = (0, 2, 3)

    if training:
        if count < 2:
            raise ValueError("batchnorm2d: training mode needs at least 2 values per channel")
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if state is not None:
            m = state.momentum
            state.running_mean *= 1.0 - m
            state.running_mean += m * mu
            state.running_var *= 1.0 - m
            state.running_var += m * var * (count / (count - 1))
    else:
        if state is None:
            raise ValueError("batchnorm2d: eval mode requires running statistics")
        mu, var = state.running_mean, state.running_var

    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu[None, :, None, None]) * inv_std[None, :, None, None]
    out = gamma.data[None, :, None, None] * xhat + beta.data[None, :, None, None]

    def backward(g):
        ggamma = (g * xhat).sum(axis=axes) if gamma.requires_grad else None
        gbeta = g.sum(axis=axes) if beta.requires_grad else None
        gx = None
        if x.requires_grad:
            gxhat = g * gamma.data[None, :, None, None]
            if training:
                s1 = gxhat.sum(axis=axes)[None, :, None, None]
                s2 = (gxhat * xhat).sum(axis=axes)[None, :, None, None]
                gx = (gxhat - s1 / count - xhat * s2 / count) * inv_std[None, :, None, None]
            else:
                gx = gxhat * inv_std[None, :, None, None]
        return gx, ggamma, gbeta

    return Tensor._result(out, (x, gamma, beta), backward)


def _interp_matrix(n_out, n_in):
    """Corner-aligned linear interpolation weights, shape n_out x n_in."""
    mat = np.zeros((n_out, n_in), dtype=DTYPE)
    if n_in == 1 or n_out == 1:
        mat[:, 0] = 1.0
        return mat
    pos = np.arange(n_out) * (n_in - 1) / (n_out - 1)
    lo = np.minimum(np.floor(pos).astype(int), n_in - 2)
    frac = pos - lo
    rows = np.arange(n_out)
    mat[rows, lo] += 1.0 - frac
    mat[rows, lo + 1] += frac
    return mat


def bilinear_resize(x, out_h, out_w):
    """Corner-aligned bilinear resampling (corner pixels map onto corners)."""
    x = as_tensor(x)
    _require_4d(x, "bilinear_resize")
    if out_h < 1 or out_w < 1:
        raise ValueError("bilinear_resize: output size must be positive")
    _, _, height, width = x.shape
    if (out_h, out_w) == (height, width):
        def backward(g):
            return (g,)

        return Tensor._result(x.data.copy(), (x,), backward)
    ry = _interp_matrix(out_h, height)
    rx = _interp_matrix(out_w, width)
    out = np.einsum("ph,bchw,qw->bcpq", ry, x.data, rx, optimize=True)

    def backward(g):
        return (np.einsum("ph,bcpq,qw->bchw", ry, g, rx, optimize=True),)

    return Tensor._result(out, (x,), backward)


def pad2d(x, bottom, right):
    """Zero-pad the bottom rows and right columns."""
    x = as_tensor(x)
    _require_4d(x, "pad2d")
    if bottom < 0 or right < 0:
        raise ValueError("pad2d: padding must be non-negative")
    height, width = x.shape[2:]
    out = np.pad(x.data, ((0, 0), (0, 0), (0, bottom), (0, right)))

    def backward(g):
        return (g[:, :, :height, :width],)

    return Tensor._result(out, (x,), backward)
