"""
Forward and backward rules for every op in the layer catalogue.

Each `*_forward` returns (output, cache) and the matching `*_backward` takes
(upstream gradient, cache). Arrays are NCHW. Convolution is cross-correlation
(no kernel flip), lowered to a matrix product with im2col.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..utils.errors import ShapeError


def conv_output_size(size, kernel, stride, padding):
    span = size + 2 * padding - kernel
    if span < 0 or span % stride:
        raise ShapeError(
            f"Convolution with kernel {kernel}, stride {stride}, padding {padding} does not tile an input of size {size}"
        )
    return span // stride + 1


def im2col(x, kernel, stride=1, padding=0):
    """
    Unrolls every kernel window into a row: (N, C, H, W) -> (N * out_h * out_w, C * k * k).
    """
    n, c, h, w = x.shape
    out_h = conv_output_size(h, kernel, stride, padding)
    out_w = conv_output_size(w, kernel, stride, padding)
    if padding:
        x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))

    windows = sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    windows = windows[:, :, ::stride, ::stride]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * out_h * out_w, -1)
    return cols, out_h, out_w


def col2im(cols, x_shape, kernel, stride, padding, out_h, out_w):
    """Scatter-adds unrolled window rows back onto the (N, C, H, W) input grid."""
    n, c, h, w = x_shape
    cols = cols.reshape(n, out_h, out_w, c, kernel, kernel).transpose(0, 3, 4, 5, 1, 2)

    padded = np.zeros((n, c, h + 2 * padding, w + 2 * padding), dtype=cols.dtype)
    for ky in range(kernel):
        y_max = ky + stride * out_h
        for kx in range(kernel):
            x_max = kx + stride * out_w
            padded[:, :, ky:y_max:stride, kx:x_max:stride] += cols[:, :, ky, kx]

    if padding:
        return padded[:, :, padding : h + padding, padding : w + padding]
    return padded


def conv2d_forward(x, weights, bias=None, stride=1, padding=0):
    if weights.ndim != 4 or weights.shape[2] != weights.shape[3]:
        raise ShapeError(f"Expected square (out_c, in_c, k, k) weights, got {weights.shape}")
    if x.ndim != 4 or x.shape[1] != weights.shape[1]:
        raise ShapeError(
            f"Input of shape {x.shape} does not match weights expecting {weights.shape[1]} channels"
        )

    out_c, _, kernel, _ = weights.shape
    cols, out_h, out_w = im2col(x, kernel, stride, padding)
    out = cols @ weights.reshape(out_c, -1).T
    if bias is not None:
        out += bias
    out = out.reshape(x.shape[0], out_h, out_w, out_c).transpose(0, 3, 1, 2)
    # The unrolled columns are rebuilt in backward rather than held across the pass.
    cache = (x, weights, stride, padding, out_h, out_w)
    return np.ascontiguousarray(out), cache


def conv2d_backward(dout, cache):
    x, weights, stride, padding, out_h, out_w = cache
    out_c, _, kernel, _ = weights.shape
    cols, _, _ = im2col(x, kernel, stride, padding)

    dout_mat = dout.transpose(0, 2, 3, 1).reshape(-1, out_c)
    dweights = (dout_mat.T @ cols).reshape(weights.shape)
    dbias = dout_mat.sum(axis=0)
    dcols = dout_mat @ weights.reshape(out_c, -1)
    dx = col2im(dcols, x.shape, kernel, stride, padding, out_h, out_w)
    return dx, dweights, dbias


def _check_even(x, op):
    if x.ndim != 4 or x.shape[2] % 2 or x.shape[3] % 2:
        raise ShapeError(f"{op} needs even spatial dims, got {x.shape}")


def max_pool2x2_forward(x):
    _check_even(x, "max_pool2x2")
    n, c, h, w = x.shape
    windows = (
        x.reshape(n, c, h // 2, 2, w // 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h // 2, w // 2, 4)
    )
    argmax = windows.argmax(axis=-1)
    out = np.take_along_axis(windows, argmax[..., np.newaxis], axis=-1)[..., 0]
    return out, (x.shape, argmax)


def max_pool2x2_backward(dout, cache):
    x_shape, argmax = cache
    n, c, h, w = x_shape
    dwindows = np.zeros((n, c, h // 2, w // 2, 4), dtype=dout.dtype)
    np.put_along_axis(dwindows, argmax[..., np.newaxis], dout[..., np.newaxis], axis=-1)
    return (
        dwindows.reshape(n, c, h // 2, w // 2, 2, 2)
        .transpose(0, 1, 2, 4, 3, 5)
        .reshape(n, c, h, w)
    )


def avg_pool2x2_forward(x):
    _check_even(x, "avg_pool2x2")
    n, c, h, w = x.shape
    out = x.reshape(n, c, h // 2, 2, w // 2, 2).mean(axis=(3, 5))
    return out, x.shape


def avg_pool2x2_backward(dout, cache):
    return upsample_nearest_forward(dout, 2)[0] / 4


def deconv2x2_forward(x, weights, bias=None):
    """Transposed convolution with a 2x2 kernel and stride 2; weights are (in_c, out_c, 2, 2)."""
    if weights.ndim != 4 or weights.shape[2:] != (2, 2):
        raise ShapeError(f"Expected (in_c, out_c, 2, 2) weights, got {weights.shape}")
    if x.ndim != 4 or x.shape[1] != weights.shape[0]:
        raise ShapeError(
            f"Input of shape {x.shape} does not match weights expecting {weights.shape[0]} channels"
        )

    n, _, h, w = x.shape
    out_c = weights.shape[1]
    out = np.tensordot(x, weights, axes=([1], [0]))  # (n, h, w, out_c, 2, 2)
    out = out.transpose(0, 3, 1, 4, 2, 5).reshape(n, out_c, 2 * h, 2 * w)
    if bias is not None:
        out += bias[np.newaxis, :, np.newaxis, np.newaxis]
    return np.ascontiguousarray(out), (x, weights)


def deconv2x2_backward(dout, cache):
    x, weights = cache
    n, _, h, w = x.shape
    out_c = weights.shape[1]
    d = dout.reshape(n, out_c, h, 2, w, 2).transpose(0, 2, 4, 1, 3, 5)  # (n, h, w, o, a, b)
    dx = np.tensordot(d, weights, axes=([3, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    dweights = np.tensordot(x, d, axes=([0, 2, 3], [0, 1, 2]))
    dbias = dout.sum(axis=(0, 2, 3))
    return np.ascontiguousarray(dx), dweights, dbias


def batchnorm_forward(x, gamma, beta, running_mean, running_var, training, epsilon=1e-5, momentum=0.1):
    """
    Per-channel batch normalization. In training mode the running statistics are
    updated in place (variance unbiased); in eval mode they are used instead of
    batch statistics.
    """
    if gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
        raise ShapeError(
            f"gamma/beta of shape {gamma.shape}/{beta.shape} do not match {x.shape[1]} channels"
        )
    axes = (0, 2, 3)
    shape = (1, -1, 1, 1)

    if training:
        mean = x.mean(axis=axes)
        var = x.var(axis=axes)
        count = x.size // x.shape[1]
        unbiased = var * count / (count - 1) if count > 1 else var
        running_mean *= 1 - momentum
        running_mean += momentum * mean
        running_var *= 1 - momentum
        running_var += momentum * unbiased
    else:
        mean = running_mean
        var = running_var

    inv_std = 1.0 / np.sqrt(var + epsilon)
    x_hat = (x - mean.reshape(shape)) * inv_std.reshape(shape)
    out = gamma.reshape(shape) * x_hat + beta.reshape(shape)
    return out.astype(x.dtype, copy=False), (x_hat, gamma, inv_std, training)


def batchnorm_backward(dout, cache):
    x_hat, gamma, inv_std, training = cache
    axes = (0, 2, 3)
    shape = (1, -1, 1, 1)

    dgamma = (dout * x_hat).sum(axis=axes)
    dbeta = dout.sum(axis=axes)
    dx_hat = dout * gamma.reshape(shape)

    if not training:
        return dx_hat * inv_std.reshape(shape), dgamma, dbeta

    count = dout.size // dout.shape[1]
    dx = (
        count * dx_hat
        - dx_hat.sum(axis=axes).reshape(shape)
        - x_hat * (dx_hat * x_hat).sum(axis=axes).reshape(shape)
    ) * (inv_std.reshape(shape) / count)
    return dx, dgamma, dbeta


def relu_forward(x):
    mask = x > 0
    return np.where(mask, x, 0).astype(x.dtype, copy=False), mask


def relu_backward(dout, mask):
    return dout * mask


def dropout_forward(x, ratio, rng, training):
    """Inverted dropout: survivors are scaled by 1 / (1 - ratio) in training, identity in eval."""
    if not training or ratio == 0:
        return x, None
    keep = rng.random(x.shape) >= ratio
    mask = keep.astype(x.dtype) / x.dtype.type(1 - ratio)
    return x * mask, mask


def dropout_backward(dout, mask):
    if mask is None:
        return dout
    return dout * mask


def concat_forward(xs):
    reference = xs[0].shape
    for x in xs[1:]:
        if x.ndim != 4 or x.shape[0] != reference[0] or x.shape[2:] != reference[2:]:
            raise ShapeError(
                f"concat needs matching batch and spatial dims, got {[x.shape for x in xs]}"
            )
    sizes = [x.shape[1] for x in xs]
    return np.concatenate(xs, axis=1), sizes


def concat_backward(dout, sizes):
    splits = np.cumsum(sizes)[:-1]
    return np.split(dout, splits, axis=1)


def upsample_nearest_forward(x, factor):
    out = np.repeat(np.repeat(x, factor, axis=2), factor, axis=3)
    return out, factor


def upsample_nearest_backward(dout, factor):
    n, c, h, w = dout.shape
    return dout.reshape(n, c, h // factor, factor, w // factor, factor).sum(axis=(3, 5))
