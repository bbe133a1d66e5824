"""Pure-numpy kernel implementations (BLAS-backed GEMM convolutions).

Convolutions run in NHWC layout via a row-stacked im2col restricted to the
three vertical taps, one wide GEMM over the full padded width, and shifted
accumulation for the horizontal taps. This keeps every GEMM operand
contiguous, which is what makes the path fast without numba.
"""

from __future__ import annotations

import numpy as np


def _padded_rows(x: np.ndarray) -> np.ndarray:
    """(B,H,W,C) -> (B, H, W+2, 3C): zero-pad, stack the 3 vertical taps."""
    b, h, w, c = x.shape
    xp = np.zeros((b, h + 2, w + 2, c), dtype=x.dtype)
    xp[:, 1 : h + 1, 1 : w + 1] = x
    return np.concatenate([xp[:, 0:h], xp[:, 1 : h + 1], xp[:, 2 : h + 2]], axis=3)


def conv3x3_forward(x: np.ndarray, w: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Same-size 3x3 convolution, zero padding, stride 1.

    x: (B,H,W,Ci), w: (3,3,Ci,Co), bias: (Co,) -> (B,H,W,Co)
    """
    b, h, wd, ci = x.shape
    co = w.shape[3]
    rows = _padded_rows(x)
    # one GEMM covering all three horizontal taps: (ky,ci) x (kx,co)
    wmat = w.transpose(0, 2, 1, 3).reshape(3 * ci, 3 * co)
    tmp = rows.reshape(-1, 3 * ci) @ wmat
    tmp = tmp.reshape(b, h, wd + 2, 3, co)
    out = tmp[:, :, 0:wd, 0]
    out = out + tmp[:, :, 1 : wd + 1, 1]
    out += tmp[:, :, 2 : wd + 2, 2]
    out += bias
    return out


def conv3x3_weight_grad(x: np.ndarray, dy: np.ndarray) -> np.ndarray:
    """Gradient of conv3x3_forward w.r.t. w. Returns (3,3,Ci,Co)."""
    b, h, wd, ci = x.shape
    co = dy.shape[3]
    rows = _padded_rows(x)
    dwide = np.zeros((b, h, wd + 2, 3, co), dtype=dy.dtype)
    dwide[:, :, 0:wd, 0] = dy
    dwide[:, :, 1 : wd + 1, 1] = dy
    dwide[:, :, 2 : wd + 2, 2] = dy
    dmat = rows.reshape(-1, 3 * ci).T @ dwide.reshape(-1, 3 * co)
    return dmat.reshape(3, ci, 3, co).transpose(0, 2, 1, 3)


def nearest_foreground(gt: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel Euclidean distance to the nearest foreground pixel.

    gt: (H,W) bool with at least one True. Returns (dist, iy, ix); ties break
    toward the first foreground pixel in row-major order.
    """
    h, w = gt.shape
    fy, fx = np.nonzero(gt)
    ys = np.arange(h)[:, None]
    xs = np.arange(w)[None, :]
    dist = np.empty((h, w), dtype=np.float64)
    iy = np.empty((h, w), dtype=np.int64)
    ix = np.empty((h, w), dtype=np.int64)
    # chunk rows to bound the (rows*W, n_fg) distance matrix
    chunk = max(1, int(2**22 // max(1, fy.size)) // max(1, w))
    for r0 in range(0, h, chunk):
        r1 = min(h, r0 + chunk)
        gy = np.repeat(np.arange(r0, r1), w)
        gx = np.tile(np.arange(w), r1 - r0)
        d2 = (gy[:, None] - fy[None, :]) ** 2 + (gx[:, None] - fx[None, :]) ** 2
        j = np.argmin(d2, axis=1)
        dist[r0:r1] = np.sqrt(d2[np.arange(j.size), j]).reshape(r1 - r0, w)
        iy[r0:r1] = fy[j].reshape(r1 - r0, w)
        ix[r0:r1] = fx[j].reshape(r1 - r0, w)
    return dist, iy, ix
