"""Weak and strong augmentation pipelines for teacher and student views.

A paired (weak, strong) spec shares one set of geometric parameters, so the
two augmented views stay pixelwise comparable and the consistency loss is
well posed. Weak = horizontal flip (p=0.5) + random crop (area >= 50%) +
resize to the training size. Strong = the same geometry + color jitter +
optional Gaussian blur + 1-3 cutout boxes. Photometric transforms touch the
image only, never the mask. ``apply`` is a pure function of (spec, input).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .data import ImageTensor, SoftMask
from .errors import ConfigError, ShapeError

WEAK = "weak"
STRONG = "strong"

FLIP_P = 0.5
CROP_MIN_SIDE = 0.72          # side fractions in [0.72, 1] keep area >= 0.5
BRIGHTNESS = 0.3
CONTRAST = 0.3
SATURATION = 0.2
BLUR_P = 0.5
BLUR_SIGMA = (0.1, 1.5)
CUTOUT_COUNT = (1, 3)
CUTOUT_MAX_AREA = 0.10


@dataclass(frozen=True)
class GeometricParams:
    flip: bool
    # normalized (top, left, height, width), area >= 0.5
    crop_box: tuple[float, float, float, float]

    def __post_init__(self):
        t, l, h, w = self.crop_box
        if not (0.0 <= t and 0.0 <= l and t + h <= 1.0 + 1e-9 and l + w <= 1.0 + 1e-9):
            raise ConfigError(f"crop box {self.crop_box} outside the unit square")
        if h * w < 0.5 - 1e-9:
            raise ConfigError(f"crop box area {h * w:.3f} < 0.5")


@dataclass(frozen=True)
class PhotometricParams:
    brightness: float
    contrast: float
    saturation: float
    blur_sigma: float                                    # 0 means no blur
    cutout_boxes: tuple[tuple[float, float, float, float], ...]


@dataclass(frozen=True)
class AugSpec:
    kind: str
    seed: int
    geometric_params: GeometricParams
    photometric_params: PhotometricParams | None = None

    def __post_init__(self):
        if self.kind not in (WEAK, STRONG):
            raise ConfigError(f"unknown augmentation kind {self.kind!r}")
        if (self.kind == STRONG) != (self.photometric_params is not None):
            raise ConfigError("photometric params present iff the spec is strong")


def sample_paired_specs(rng_seed: int) -> tuple[AugSpec, AugSpec]:
    """Draw a (weak, strong) pair sharing identical geometry."""
    rng = np.random.default_rng(rng_seed)
    flip = bool(rng.random() < FLIP_P)
    ch = float(rng.uniform(CROP_MIN_SIDE, 1.0))
    cw = float(rng.uniform(max(0.5 / ch, CROP_MIN_SIDE), 1.0))
    top = float(rng.uniform(0.0, 1.0 - ch))
    left = float(rng.uniform(0.0, 1.0 - cw))
    geo = GeometricParams(flip=flip, crop_box=(top, left, ch, cw))

    n_cut = int(rng.integers(CUTOUT_COUNT[0], CUTOUT_COUNT[1] + 1))
    boxes = []
    for _ in range(n_cut):
        bh = float(rng.uniform(0.05, np.sqrt(CUTOUT_MAX_AREA)))
        bw = float(rng.uniform(0.05, min(np.sqrt(CUTOUT_MAX_AREA), CUTOUT_MAX_AREA / bh)))
        boxes.append((float(rng.uniform(0, 1 - bh)), float(rng.uniform(0, 1 - bw)), bh, bw))
    photo = PhotometricParams(
        brightness=float(rng.uniform(-BRIGHTNESS, BRIGHTNESS)),
        contrast=float(rng.uniform(-CONTRAST, CONTRAST)),
        saturation=float(rng.uniform(-SATURATION, SATURATION)),
        blur_sigma=float(rng.uniform(*BLUR_SIGMA)) if rng.random() < BLUR_P else 0.0,
        cutout_boxes=tuple(boxes),
    )
    weak = AugSpec(kind=WEAK, seed=rng_seed, geometric_params=geo)
    strong = AugSpec(kind=STRONG, seed=rng_seed, geometric_params=geo, photometric_params=photo)
    return weak, strong


def identity_spec() -> AugSpec:
    """No flip, full crop, no photometric change: output = resized input."""
    return AugSpec(kind=WEAK, seed=0, geometric_params=GeometricParams(False, (0.0, 0.0, 1.0, 1.0)))


def _resize_matrix(n_out: int, n_in: int, dtype=np.float64) -> np.ndarray:
    if n_out == n_in:
        return np.eye(n_in, dtype=dtype)
    src = np.clip((np.arange(n_out) + 0.5) * (n_in / n_out) - 0.5, 0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    t = src - i0
    m = np.zeros((n_out, n_in), dtype=dtype)
    m[np.arange(n_out), i0] += 1.0 - t
    m[np.arange(n_out), i1] += t
    return m


def resize_bilinear(arr: np.ndarray, out_hw: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of (..., h, w) to (..., out_h, out_w)."""
    h, w = arr.shape[-2:]
    mh = _resize_matrix(out_hw[0], h, arr.dtype if arr.dtype.kind == "f" else np.float64)
    mw = _resize_matrix(out_hw[1], w, mh.dtype)
    return np.einsum("ph,...hw,qw->...pq", mh, arr, mw, optimize=True)


def _crop_pixels(box, h: int, w: int) -> tuple[int, int, int, int]:
    top, left, bh, bw = box
    y0 = int(round(top * h))
    x0 = int(round(left * w))
    y1 = max(y0 + 1, min(h, int(round((top + bh) * h))))
    x1 = max(x0 + 1, min(w, int(round((left + bw) * w))))
    return y0, x0, y1, x1


def apply(
    spec: AugSpec,
    image: ImageTensor,
    mask: SoftMask | None,
    out_size: tuple[int, int],
    cutout_fill: np.ndarray | None = None,
) -> tuple[ImageTensor, SoftMask | None]:
    """Apply geometry to image+mask and photometrics to the image only.

    ``cutout_fill`` is the per-channel fill color for cutout boxes (defaults
    to mid-gray); callers normally pass the dataset mean color.
    """
    px = np.asarray(image.pixels, dtype=np.float64)
    mk = None if mask is None else np.asarray(mask.values, dtype=np.float64)
    if mk is not None and mk.shape != px.shape[1:]:
        raise ShapeError(f"mask shape {mk.shape} != image shape {px.shape[1:]}")

    y0, x0, y1, x1 = _crop_pixels(spec.geometric_params.crop_box, px.shape[1], px.shape[2])
    px = px[:, y0:y1, x0:x1]
    mk = None if mk is None else mk[y0:y1, x0:x1]
    if spec.geometric_params.flip:
        px = px[:, :, ::-1]
        mk = None if mk is None else mk[:, ::-1]
    px = resize_bilinear(px, out_size)
    mk = None if mk is None else resize_bilinear(mk, out_size)

    if spec.photometric_params is not None:
        ph = spec.photometric_params
        px = px + ph.brightness
        mean = px.mean()
        px = (px - mean) * (1.0 + ph.contrast) + mean
        gray = px.mean(axis=0, keepdims=True)
        px = gray + (px - gray) * (1.0 + ph.saturation)
        if ph.blur_sigma > 0:
            px = np.stack([gaussian_filter(ch, ph.blur_sigma, mode="nearest") for ch in px])
        fill = np.full(3, 0.5) if cutout_fill is None else np.asarray(cutout_fill, dtype=np.float64)
        for box in ph.cutout_boxes:
            by0, bx0, by1, bx1 = _crop_pixels(box, out_size[0], out_size[1])
            px[:, by0:by1, bx0:bx1] = fill[:, None, None]

    px = np.clip(px, 0.0, 1.0)
    out_mask = None if mk is None else SoftMask(np.clip(mk, 0.0, 1.0))
    return ImageTensor(px), out_mask
