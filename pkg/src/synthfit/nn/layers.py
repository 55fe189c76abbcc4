"""Layer primitives with explicit forward/backward passes.

Every layer caches whatever its backward pass needs during forward, so the
call pattern is strictly forward-then-backward per batch.  Trainable layers
expose ``params()`` and matching ``grads()`` lists; the optimizer mutates
the parameter arrays in place.
"""

from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from ..errors import InputError

BCE_EPS = 1e-7


class Layer:
    def params(self):
        return []

    def grads(self):
        return []

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


def glorot_uniform(rng, shape, fan_in, fan_out, dtype):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, shape).astype(dtype)


def same_padding(size: int, kernel: int, stride: int) -> tuple[int, int, int]:
    """Output extent and (begin, end) zero padding for ceil-mode 'same'
    convolution: out = ceil(size / stride)."""
    out = -(-size // stride)
    total = max((out - 1) * stride + kernel - size, 0)
    return out, total // 2, total - total // 2


class Conv2D(Layer):
    """Strided 2-D cross-correlation over (batch, channels, H, W) with zero
    'same' padding.  1-D convolution is the K1 = S1 = 1 special case."""

    def __init__(self, in_channels, out_channels, k1, k2, s1, s2, rng, dtype=np.float32):
        if min(k1, k2, s1, s2) < 1:
            raise InputError("kernel sizes and strides must be >= 1")
        self.k1, self.k2, self.s1, self.s2 = k1, k2, s1, s2
        self.in_channels = in_channels
        fan_in = in_channels * k1 * k2
        fan_out = out_channels * k1 * k2
        self.w = glorot_uniform(rng, (out_channels, in_channels, k1, k2), fan_in, fan_out, dtype)
        self.b = np.zeros(out_channels, dtype=dtype)
        self.dw = None
        self.db = None

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise InputError(
                f"expected (batch, {self.in_channels}, H, W) input, got {x.shape}"
            )
        _, _, h, w = x.shape
        oh, ph0, ph1 = same_padding(h, self.k1, self.s1)
        ow, pw0, pw1 = same_padding(w, self.k2, self.s2)
        xp = np.pad(x, ((0, 0), (0, 0), (ph0, ph1), (pw0, pw1)))
        win = sliding_window_view(xp, (self.k1, self.k2), axis=(2, 3))
        win = win[:, :, :: self.s1, :: self.s2][:, :, :oh, :ow]
        self._win = win                       # (B, C, oh, ow, k1, k2)
        self._geom = (x.shape, xp.shape, ph0, pw0, oh, ow)
        y = np.tensordot(win, self.w, axes=([1, 4, 5], [1, 2, 3]))  # (B, oh, ow, F)
        y += self.b
        return np.ascontiguousarray(y.transpose(0, 3, 1, 2))

    def backward(self, dy):
        x_shape, xp_shape, ph0, pw0, oh, ow = self._geom
        dyt = dy.transpose(0, 2, 3, 1)        # (B, oh, ow, F)
        self.dw = np.tensordot(dyt, self._win, axes=([0, 1, 2], [0, 2, 3]))
        self.db = dy.sum(axis=(0, 2, 3))
        # scatter-add each kernel tap back onto the padded input grid
        contrib = np.tensordot(dy, self.w, axes=([1], [0]))  # (B, oh, ow, C, k1, k2)
        dxp = np.zeros(xp_shape, dtype=dy.dtype)
        for i in range(self.k1):
            rows = slice(i, i + (oh - 1) * self.s1 + 1, self.s1)
            for j in range(self.k2):
                cols = slice(j, j + (ow - 1) * self.s2 + 1, self.s2)
                dxp[:, :, rows, cols] += contrib[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dxp[:, :, ph0 : ph0 + x_shape[2], pw0 : pw0 + x_shape[3]]


class Dense(Layer):
    def __init__(self, in_dim, out_dim, rng, dtype=np.float32):
        self.in_dim = in_dim
        self.w = glorot_uniform(rng, (in_dim, out_dim), in_dim, out_dim, dtype)
        self.b = np.zeros(out_dim, dtype=dtype)
        self.dw = None
        self.db = None

    def params(self):
        return [self.w, self.b]

    def grads(self):
        return [self.dw, self.db]

    def forward(self, x, train=False, rng=None):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise InputError(f"expected (batch, {self.in_dim}) input, got {x.shape}")
        self._x = x
        return x @ self.w + self.b

    def backward(self, dy):
        self.dw = self._x.T @ dy
        self.db = dy.sum(axis=0)
        return dy @ self.w.T


class ReLU(Layer):
    def forward(self, x, train=False, rng=None):
        self._mask = x > 0
        # multiply instead of where() so non-finite values keep propagating
        return x * self._mask

    def backward(self, dy):
        return dy * self._mask


class Sigmoid(Layer):
    def forward(self, x, train=False, rng=None):
        self._y = expit(x)
        return self._y

    def backward(self, dy):
        return dy * self._y * (1.0 - self._y)


class Dropout(Layer):
    """Inverted dropout: active only when forward runs with train=True."""

    def __init__(self, p):
        if not 0.0 <= p < 1.0:
            raise InputError("dropout probability must lie in [0, 1)")
        self.p = p
        self._scale = None

    def forward(self, x, train=False, rng=None):
        if not train or self.p == 0.0:
            self._scale = None
            return x
        if rng is None:
            raise InputError("training-mode dropout needs an rng")
        keep = rng.random(x.shape) >= self.p
        self._scale = keep.astype(x.dtype) / x.dtype.type(1.0 - self.p)
        return x * self._scale

    def backward(self, dy):
        if self._scale is None:
            return dy
        return dy * self._scale


class Flatten(Layer):
    def forward(self, x, train=False, rng=None):
        self._shape = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dy):
        return dy.reshape(self._shape)


class ToImage(Layer):
    """Rearrange a (batch, C, 1, T) 1-D convolution stack output into a
    single-channel (batch, 1, T, C) image so 2-D layers can follow."""

    def forward(self, x, train=False, rng=None):
        if x.ndim != 4 or x.shape[2] != 1:
            raise InputError(f"expected (batch, C, 1, T) input, got {x.shape}")
        self._shape = x.shape
        return np.ascontiguousarray(x[:, :, 0, :].transpose(0, 2, 1)[:, None, :, :])

    def backward(self, dy):
        return np.ascontiguousarray(dy[:, 0].transpose(0, 2, 1)[:, :, None, :])


def bce_loss(scores, targets, eps: float = BCE_EPS) -> float:
    """Mean binary cross-entropy over every element, with scores clamped to
    [eps, 1 - eps] before the logs."""
    s = np.clip(np.asarray(scores, dtype=np.float64), eps, 1.0 - eps)
    t = np.asarray(targets, dtype=np.float64)
    if s.shape != t.shape:
        raise InputError(f"score shape {s.shape} != target shape {t.shape}")
    return float(np.mean(-(t * np.log(s) + (1.0 - t) * np.log(1.0 - s))))


def bce_grad(scores, targets, eps: float = BCE_EPS) -> np.ndarray:
    """d(bce_loss)/d(scores).  Zero where the clamp is active, since the
    clamped loss is locally flat there."""
    s = np.asarray(scores)
    t = np.asarray(targets, dtype=s.dtype)
    sc = np.clip(s, eps, 1.0 - eps)
    g = (sc - t) / (sc * (1.0 - sc)) / s.size
    g[(s < eps) | (s > 1.0 - eps)] = 0.0
    return g.astype(s.dtype, copy=False)
