"""
Network operators on top of Tensor: convolutions, pooling, batch norm,
activations and the linear layer.

Convolutions are cross-correlations computed by unfolding windows with
`sliding_window_view` and a single matrix product, so the reduction order
for every output element is fixed.
"""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ConfigError, DimensionError
from .tensor import Tensor


# =============================================================================
# Convolutions
# =============================================================================


def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, pad: int = 0) -> Tensor:
    """2-D cross-correlation over (c_in, h, w) or a batch (n, c_in, h, w)"""
    if x.ndim == 3:
        out = conv2d(x.reshape(1, *x.shape), weight, bias, stride, pad)
        return out.reshape(*out.shape[1:])
    if x.ndim != 4 or weight.ndim != 4:
        raise DimensionError(f"conv2d expects (n,c,h,w) input and 4-D weight, got {x.shape} and {weight.shape}")
    if stride < 1 or pad < 0:
        raise ConfigError(f"conv2d needs stride >= 1 and pad >= 0, got stride={stride} pad={pad}")

    n, c, h, w = x.shape
    c_out, c_in, kh, kw = weight.shape
    if c_in != c:
        raise DimensionError(f"conv2d weight expects {c_in} input channels, input has {c}")
    if kh > h + 2 * pad or kw > w + 2 * pad:
        raise DimensionError(f"conv2d kernel {kh}x{kw} larger than padded input {h + 2 * pad}x{w + 2 * pad}")

    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    oh = (h + 2 * pad - kh) // stride + 1
    ow = (w + 2 * pad - kw) // stride + 1
    windows = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride][:, :, :oh, :ow]
    cols = np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(n * oh * ow, c * kh * kw)
    w2 = weight.data.reshape(c_out, -1)

    out = (cols @ w2.T).reshape(n, oh, ow, c_out).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data[None, :, None, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        g2 = g.transpose(0, 2, 3, 1).reshape(-1, c_out)
        grad_w = (g2.T @ cols).reshape(weight.shape)
        dcols = (g2 @ w2).reshape(n, oh, ow, c, kh, kw)
        dxp = np.zeros_like(xp)
        for i in range(kh):
            for j in range(kw):
                dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += dcols[
                    :, :, :, :, i, j
                ].transpose(0, 3, 1, 2)
        grad_x = dxp[:, :, pad : pad + h, pad : pad + w]
        grad_b = g.sum(axis=(0, 2, 3)) if bias is not None else None
        return grad_x, grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "conv2d")


def conv1d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1, pad: int = 0) -> Tensor:
    """1-D cross-correlation over time for a (c_in, t) input"""
    if x.ndim != 2 or weight.ndim != 3:
        raise DimensionError(f"conv1d expects (c,t) input and 3-D weight, got {x.shape} and {weight.shape}")
    if stride < 1 or pad < 0:
        raise ConfigError(f"conv1d needs stride >= 1 and pad >= 0, got stride={stride} pad={pad}")

    c, t = x.shape
    c_out, c_in, k = weight.shape
    if c_in != c:
        raise DimensionError(f"conv1d weight expects {c_in} input channels, input has {c}")
    if k > t + 2 * pad:
        raise DimensionError(f"conv1d kernel {k} longer than padded input {t + 2 * pad}")

    xp = np.pad(x.data, ((0, 0), (pad, pad)))
    t_out = (t + 2 * pad - k) // stride + 1
    windows = sliding_window_view(xp, k, axis=1)[:, ::stride][:, :t_out]
    cols = np.ascontiguousarray(windows.transpose(1, 0, 2)).reshape(t_out, c * k)
    w2 = weight.data.reshape(c_out, -1)

    out = (cols @ w2.T).T
    if bias is not None:
        out = out + bias.data[:, None]
    out = np.ascontiguousarray(out)

    def backward(g):
        grad_w = (g @ cols).reshape(weight.shape)
        dcols = (g.T @ w2).reshape(t_out, c, k)
        dxp = np.zeros_like(xp)
        for i in range(k):
            dxp[:, i : i + stride * t_out : stride] += dcols[:, :, i].T
        grad_b = g.sum(axis=1) if bias is not None else None
        return dxp[:, pad : pad + t], grad_w, grad_b

    parents = (x, weight) if bias is None else (x, weight, bias)
    return Tensor._from_op(out, parents, backward, "conv1d")


# =============================================================================
# Pooling
# =============================================================================


def maxpool2d(x: Tensor, window: int) -> Tensor:
    """Non-overlapping max pooling over the last two axes, trailing remainder dropped"""
    if window < 1:
        raise ConfigError(f"max-pool window must be >= 1, got {window}")
    *lead, h, w = x.shape
    h2, w2 = h // window, w // window
    if h2 == 0 or w2 == 0:
        raise DimensionError(f"max-pool window {window} larger than extent {h}x{w}")

    blocks = x.data[..., : h2 * window, : w2 * window].reshape(*lead, h2, window, w2, window)
    blocks = np.swapaxes(blocks, -3, -2).reshape(*lead, h2, w2, window * window)
    # argmax returns the first maximum in row-major window order
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        grad_blocks = np.zeros_like(blocks)
        np.put_along_axis(grad_blocks, arg[..., None], g[..., None], axis=-1)
        grad_blocks = np.swapaxes(grad_blocks.reshape(*lead, h2, w2, window, window), -3, -2)
        grad = np.zeros(x.shape, dtype=x.dtype)
        grad[..., : h2 * window, : w2 * window] = grad_blocks.reshape(*lead, h2 * window, w2 * window)
        return (grad,)

    return Tensor._from_op(out, (x,), backward, "maxpool2d")


def maxpool1d(x: Tensor, window: int) -> Tensor:
    """Non-overlapping max pooling over the last axis, trailing remainder dropped"""
    if window < 1:
        raise ConfigError(f"max-pool window must be >= 1, got {window}")
    *lead, t = x.shape
    t2 = t // window
    if t2 == 0:
        raise DimensionError(f"max-pool window {window} longer than extent {t}")

    blocks = x.data[..., : t2 * window].reshape(*lead, t2, window)
    arg = blocks.argmax(axis=-1)
    out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]

    def backward(g):
        grad_blocks = np.zeros_like(blocks)
        np.put_along_axis(grad_blocks, arg[..., None], g[..., None], axis=-1)
        grad = np.zeros(x.shape, dtype=x.dtype)
        grad[..., : t2 * window] = grad_blocks.reshape(*lead, t2 * window)
        return (grad,)

    return Tensor._from_op(out, (x,), backward, "maxpool1d")


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over the two trailing spatial axes: (c,h,w) -> (c), (n,c,h,w) -> (n,c)"""
    if x.ndim < 3:
        raise DimensionError(f"global_avg_pool expects at least (c,h,w), got {x.shape}")
    return x.mean(axis=(-2, -1))


# =============================================================================
# Normalization
# =============================================================================


def batchnorm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    running_mean: Tensor,
    running_var: Tensor,
    training: bool,
    momentum: float = 0.1,
    eps: float = 1e-5,
    channel_axis: int = 1,
) -> Tensor:
    """Per-channel batch normalization.

    In training mode the statistics come from every axis except
    `channel_axis` and the running statistics are updated in place
    (biased variance). Inference uses the running statistics only.
    """
    channel_axis = channel_axis % x.ndim
    channels = x.shape[channel_axis]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(f"batchnorm parameters must have shape ({channels},)")

    axes = tuple(a for a in range(x.ndim) if a != channel_axis)
    view = [1] * x.ndim
    view[channel_axis] = channels
    g_, b_ = gamma.data.reshape(view), beta.data.reshape(view)

    if training:
        count = int(np.prod([x.shape[a] for a in axes]))
        mean = x.data.mean(axis=axes, keepdims=True)
        centered = x.data - mean
        var = (centered * centered).mean(axis=axes, keepdims=True)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = centered * inv_std
        out = g_ * x_hat + b_

        running_mean.data[...] = (1.0 - momentum) * running_mean.data + momentum * mean.reshape(-1)
        running_var.data[...] = (1.0 - momentum) * running_var.data + momentum * var.reshape(-1)

        def backward(g):
            d_hat = g * g_
            grad_x = (inv_std / count) * (
                count * d_hat
                - d_hat.sum(axis=axes, keepdims=True)
                - x_hat * (d_hat * x_hat).sum(axis=axes, keepdims=True)
            )
            return grad_x, (g * x_hat).sum(axis=axes), g.sum(axis=axes)

    else:
        inv_std = (1.0 / np.sqrt(running_var.data + eps)).reshape(view)
        x_hat = (x.data - running_mean.data.reshape(view)) * inv_std
        out = g_ * x_hat + b_

        def backward(g):
            return g * g_ * inv_std, (g * x_hat).sum(axis=axes), g.sum(axis=axes)

    return Tensor._from_op(out.astype(x.dtype, copy=False), (x, gamma, beta), backward, "batchnorm")


# =============================================================================
# Activations and dense layers
# =============================================================================


def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return Tensor._from_op(x.data * mask, (x,), lambda g: (g * mask,), "relu")


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """x @ weight.T + bias with weight shaped (out, in)"""
    if x.shape[-1] != weight.shape[1]:
        raise DimensionError(f"linear expects {weight.shape[1]} input features, got {x.shape[-1]}")
    out = x @ weight.transpose()
    return out + bias if bias is not None else out


def softmax(x: Tensor) -> Tensor:
    """Softmax over the last axis with max subtraction"""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (s * (g - (g * s).sum(axis=-1, keepdims=True)),)

    return Tensor._from_op(s, (x,), backward, "softmax")


def log_softmax(x: Tensor) -> Tensor:
    """log(softmax(x)) over the last axis, computed with log-sum-exp"""
    shifted = x.data - x.data.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out = shifted - lse
    s = np.exp(out)

    def backward(g):
        return (g - s * g.sum(axis=-1, keepdims=True),)

    return Tensor._from_op(out, (x,), backward, "log_softmax")


def pick(x: Tensor, targets: np.ndarray) -> Tensor:
    """Select x[j, targets[j]] for every row j"""
    targets = np.asarray(targets, dtype=np.int64)
    if x.ndim != 2 or targets.shape != (x.shape[0],):
        raise DimensionError(f"pick expects (k,u) input and k targets, got {x.shape} and {targets.shape}")
    return x[np.arange(x.shape[0]), targets]
