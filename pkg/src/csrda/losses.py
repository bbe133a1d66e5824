"""Training losses: supervised BCE, Sobel edge alignment, saliency-weighted
consistency, and their weighted composite.

All values are computed in float64. Gradients are returned with respect to
the student's logits; teacher inputs are constants (the teacher is updated
only by moving average, never by backprop). The L1 and edge-magnitude kinks
are smoothed by a fixed epsilon inside gradient computation only, so loss
values stay exact while gradient checks remain deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError

CLAMP_EPS = 1e-7      # probability clamp inside log()
SMOOTH_EPS = 1e-8     # |.| and sqrt() smoothing, gradient path only

_KX = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
_KY = _KX.T.copy()


@dataclass(frozen=True)
class ESConfig:
    """Weights of the edge/saliency composite; delta boosts salient pixels."""

    alpha: float = 0.9
    beta: float = 0.3
    delta: float = 0.5


@dataclass(frozen=True)
class LossReport:
    """Batch-mean loss components plus the per-sample composite values."""

    ce: float
    ea: float
    sw: float
    es: float
    per_sample_es: tuple[float, ...] = ()

    @property
    def total(self) -> float:
        return self.ce + self.es


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def bce_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean binary cross-entropy; gradient w.r.t. logits is (p - t) / N."""
    _check_pair(pred, target)
    p = np.clip(np.asarray(pred, dtype=np.float64), CLAMP_EPS, 1.0 - CLAMP_EPS)
    t = np.asarray(target, dtype=np.float64)
    value = float(-np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p)))
    grad = (np.asarray(pred, dtype=np.float64) - t) / t.size
    return value, grad


# -- Sobel edge chain ---------------------------------------------------------

_SHIFT_CACHE: dict[tuple[int, int], list] = {}


def _shift_indices(h: int, w: int):
    key = (h, w)
    if key not in _SHIFT_CACHE:
        rows = np.arange(h)[:, None]
        cols = np.arange(w)[None, :]
        entries = []
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                kx = _KX[dy + 1, dx + 1]
                ky = _KY[dy + 1, dx + 1]
                if kx == 0.0 and ky == 0.0:
                    continue
                r = np.clip(rows + dy, 0, h - 1)
                c = np.clip(cols + dx, 0, w - 1)
                entries.append((r, c, kx, ky))
        _SHIFT_CACHE[key] = entries
    return _SHIFT_CACHE[key]


def _sobel_components(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Sobel responses with replicate border padding."""
    m = np.asarray(mask, dtype=np.float64)
    gx = np.zeros_like(m)
    gy = np.zeros_like(m)
    for r, c, kx, ky in _shift_indices(*m.shape):
        shifted = m[r, c]
        if kx != 0.0:
            gx += kx * shifted
        if ky != 0.0:
            gy += ky * shifted
    return gx, gy


def _sobel_vjp(gx_bar: np.ndarray, gy_bar: np.ndarray) -> np.ndarray:
    out = np.zeros_like(gx_bar)
    for r, c, kx, ky in _shift_indices(*gx_bar.shape):
        contrib = kx * gx_bar + ky * gy_bar
        np.add.at(out, (r, c), contrib)
    return out


def sobel_edges(mask: np.ndarray) -> np.ndarray:
    """Edge magnitude sqrt(Gx^2 + Gy^2), same shape as the input."""
    gx, gy = _sobel_components(mask)
    return np.hypot(gx, gy)


def edge_alignment_loss(
    student_pred: np.ndarray, teacher_pred: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean L1 between the two edge-magnitude maps.

    The gradient flows through the student's Sobel + sigmoid chain only.
    """
    _check_pair(student_pred, teacher_pred)
    p = np.asarray(student_pred, dtype=np.float64)
    gx, gy = _sobel_components(p)
    mag_s = np.hypot(gx, gy)
    mag_t = sobel_edges(teacher_pred)
    diff = mag_s - mag_t
    value = float(np.mean(np.abs(diff)))

    n = diff.size
    dmag = diff / np.sqrt(diff * diff + SMOOTH_EPS**2) / n
    denom = np.sqrt(gx * gx + gy * gy + SMOOTH_EPS**2)
    dprob = _sobel_vjp(dmag * gx / denom, dmag * gy / denom)
    grad = dprob * p * (1.0 - p)
    return value, grad


def saliency_weighted_loss(
    student_pred: np.ndarray, pseudo_label: np.ndarray, delta: float
) -> tuple[float, np.ndarray]:
    """Pixelwise BCE against the pseudo label, weighted by (label + delta)."""
    _check_pair(student_pred, pseudo_label)
    p = np.asarray(student_pred, dtype=np.float64)
    y = np.asarray(pseudo_label, dtype=np.float64)
    w = y + delta
    pc = np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS)
    value = float(np.mean(w * -(y * np.log(pc) + (1.0 - y) * np.log1p(-pc))))
    grad = w * (p - y) / y.size
    return value, grad


def es_loss(
    student_pred: np.ndarray, teacher_pred: np.ndarray, cfg: ESConfig
) -> tuple[float, float, float, np.ndarray]:
    """Composite alpha*EA + beta*SW with the teacher output as pseudo label.

    Returns (es, ea, sw, grad_wrt_student_logits).
    """
    ea, ea_grad = edge_alignment_loss(student_pred, teacher_pred)
    sw, sw_grad = saliency_weighted_loss(student_pred, teacher_pred, cfg.delta)
    es = cfg.alpha * ea + cfg.beta * sw
    grad = cfg.alpha * ea_grad + cfg.beta * sw_grad
    return es, ea, sw, grad
