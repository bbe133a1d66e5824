"""Differentiable layer primitives in NHWC layout.

Every forward returns whatever its backward needs; backward functions are
hand-derived and validated against central finite differences in the test
suite. All ops are smooth (SiLU, average pooling, bilinear interpolation),
which keeps finite-difference checks stable.
"""

from __future__ import annotations

import numpy as np

from .. import kernels

GN_EPS = 1e-5


# -- 3x3 convolution ---------------------------------------------------------

def conv3x3(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return kernels.conv3x3_forward(x, w, b)


def conv3x3_bwd(x, w, dy):
    """Returns (dx, dw, db) for y = conv3x3(x, w, b)."""
    # adjoint of a stride-1, pad-1 3x3 conv is the same conv with the kernel
    # flipped spatially and in/out channels swapped
    wt = np.ascontiguousarray(w[::-1, ::-1].transpose(0, 1, 3, 2))
    zeros = np.zeros(wt.shape[3], dtype=dy.dtype)
    dx = kernels.conv3x3_forward(dy, wt, zeros)
    dw = kernels.conv3x3_weight_grad(x, dy)
    db = dy.sum(axis=(0, 1, 2))
    return dx, dw, db


# -- SiLU --------------------------------------------------------------------

def silu(x: np.ndarray) -> np.ndarray:
    return x * _sigmoid(x)


def silu_bwd(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    s = _sigmoid(x)
    return dy * (s * (1.0 + x * (1.0 - s)))


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


# -- group normalization -----------------------------------------------------

def groupnorm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray, groups: int):
    """Returns (y, cache). Normalizes per (sample, group) over (H, W, C/g)."""
    b, h, w, c = x.shape
    g = x.reshape(b, h * w, groups, c // groups)
    mu = g.mean(axis=(1, 3), keepdims=True)
    var = g.var(axis=(1, 3), keepdims=True)
    inv = 1.0 / np.sqrt(var + GN_EPS)
    xhat = ((g - mu) * inv).reshape(b, h, w, c)
    return xhat * gamma + beta, (xhat, inv)


def groupnorm_bwd(cache, gamma: np.ndarray, groups: int, dy: np.ndarray):
    """Returns (dx, dgamma, dbeta)."""
    xhat, inv = cache
    b, h, w, c = dy.shape
    dgamma = (dy * xhat).sum(axis=(0, 1, 2))
    dbeta = dy.sum(axis=(0, 1, 2))
    dxh = (dy * gamma).reshape(b, h * w, groups, c // groups)
    xh = xhat.reshape(b, h * w, groups, c // groups)
    m1 = dxh.mean(axis=(1, 3), keepdims=True)
    m2 = (dxh * xh).mean(axis=(1, 3), keepdims=True)
    dx = (dxh - m1 - xh * m2) * inv
    return dx.reshape(b, h, w, c), dgamma, dbeta


# -- 2x2 average pooling -----------------------------------------------------

def avgpool2(x: np.ndarray) -> np.ndarray:
    b, h, w, c = x.shape
    return x.reshape(b, h // 2, 2, w // 2, 2, c).mean(axis=(2, 4))


def avgpool2_bwd(dy: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(dy, 2, axis=1), 2, axis=2) * 0.25


# -- x2 bilinear upsampling --------------------------------------------------

_UP_CACHE: dict[tuple[int, str], np.ndarray] = {}


def _up_matrix(n: int, dtype) -> np.ndarray:
    """(2n, n) interpolation matrix, half-pixel-centered, edges clamped."""
    key = (n, np.dtype(dtype).str)
    m = _UP_CACHE.get(key)
    if m is None:
        src = np.clip((np.arange(2 * n, dtype=np.float64) + 0.5) / 2.0 - 0.5, 0, n - 1)
        i0 = np.floor(src).astype(np.int64)
        i1 = np.minimum(i0 + 1, n - 1)
        t = src - i0
        m = np.zeros((2 * n, n), dtype=np.float64)
        m[np.arange(2 * n), i0] += 1.0 - t
        m[np.arange(2 * n), i1] += t
        m = m.astype(dtype)
        _UP_CACHE[key] = m
    return m


def _apply_spatial(x: np.ndarray, mh: np.ndarray, mw: np.ndarray) -> np.ndarray:
    b, h, w, c = x.shape
    y = np.matmul(mh, x.reshape(b, h, w * c))          # (b, H', w*c)
    y = y.reshape(b, mh.shape[0], w, c)
    y = np.matmul(mw, y.transpose(0, 3, 2, 1).reshape(b * c, w, -1))
    return y.reshape(b, c, mw.shape[0], mh.shape[0]).transpose(0, 3, 2, 1)


def upsample2(x: np.ndarray) -> np.ndarray:
    _, h, w, _ = x.shape
    return _apply_spatial(x, _up_matrix(h, x.dtype), _up_matrix(w, x.dtype))


def upsample2_bwd(dy: np.ndarray) -> np.ndarray:
    _, h2, w2, _ = dy.shape
    mh = np.ascontiguousarray(_up_matrix(h2 // 2, dy.dtype).T)
    mw = np.ascontiguousarray(_up_matrix(w2 // 2, dy.dtype).T)
    return _apply_spatial(dy, mh, mw)
