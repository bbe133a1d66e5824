"""Numba @njit kernel implementations (direct NHWC convolution loops).

Each output element is written by exactly one prange thread, so results are
deterministic for a fixed input regardless of thread count. Kernels compile
per dtype; float32 and float64 are both supported.
"""

from __future__ import annotations

import warnings

import numpy as np

with warnings.catch_warnings():
    # old TBB in the image triggers a harmless threading-layer warning
    warnings.simplefilter("ignore")
    from numba import njit, prange


@njit(parallel=True, fastmath=True, cache=True)
def _conv3x3_padded(xp, w, bias):
    b, hp, wp, ci = xp.shape
    co = w.shape[3]
    h, wd = hp - 2, wp - 2
    out = np.empty((b, h, wd, co), dtype=xp.dtype)
    for bi in prange(b):
        for y in range(h):
            for x in range(wd):
                acc = bias.copy()
                for ky in range(3):
                    for kx in range(3):
                        xv = xp[bi, y + ky, x + kx]
                        wk = w[ky, kx]
                        for c in range(ci):
                            xc = xv[c]
                            wrow = wk[c]
                            for o in range(co):
                                acc[o] += xc * wrow[o]
                out[bi, y, x] = acc
    return out


@njit(parallel=True, fastmath=True, cache=True)
def _conv3x3_dw_padded(xp, dy):
    b, hp, wp, ci = xp.shape
    co = dy.shape[3]
    h, wd = hp - 2, wp - 2
    dw = np.zeros((3, 3, ci, co), dtype=xp.dtype)
    for k in prange(9):
        ky = k // 3
        kx = k % 3
        acc = np.zeros((ci, co), dtype=xp.dtype)
        for bi in range(b):
            for y in range(h):
                for x in range(wd):
                    xv = xp[bi, y + ky, x + kx]
                    dv = dy[bi, y, x]
                    for c in range(ci):
                        xc = xv[c]
                        arow = acc[c]
                        for o in range(co):
                            arow[o] += xc * dv[o]
        dw[ky, kx] = acc
    return dw


@njit(parallel=True, cache=True)
def _nearest_fg(fy, fx, h, w):
    dist = np.empty((h, w), dtype=np.float64)
    iy = np.empty((h, w), dtype=np.int64)
    ix = np.empty((h, w), dtype=np.int64)
    n = fy.size
    for p in prange(h * w):
        y = p // w
        x = p % w
        best = np.inf
        bj = 0
        for j in range(n):
            dy = y - fy[j]
            dx = x - fx[j]
            d2 = float(dy * dy + dx * dx)
            if d2 < best:
                best = d2
                bj = j
        dist[y, x] = np.sqrt(best)
        iy[y, x] = fy[bj]
        ix[y, x] = fx[bj]
    return dist, iy, ix


def _pad(x: np.ndarray) -> np.ndarray:
    b, h, w, c = x.shape
    xp = np.zeros((b, h + 2, w + 2, c), dtype=x.dtype)
    xp[:, 1 : h + 1, 1 : w + 1] = x
    return xp


def conv3x3_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    return _conv3x3_padded(_pad(x), np.ascontiguousarray(w), bias)


def conv3x3_weight_grad(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    return _conv3x3_dw_padded(_pad(x), np.ascontiguousarray(dy))


def nearest_foreground(gt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    fy, fx = np.nonzero(gt)
    return _nearest_fg(fy.astype(np.int64), fx.astype(np.int64), gt.shape[0], gt.shape[1])
