"""Procedural toy camouflage data: a labeled "synthetic" source domain and an
unlabeled "real" target domain with a controllable appearance gap.

Backgrounds are multi-octave value noise colorized by a 3-color gradient
drawn from one of ``texture_bank`` procedural families. Source objects paste
in a texture from a *different* family (the tell-tale synthetic look); target
objects blend toward a lightly jittered copy of the local background (true
camouflage). ``gap`` interpolates the target rule between the source pairing
rule (0) and near-perfect camouflage (1). Everything is a pure function of
(config, sample index), so generation is deterministic and parallelizable.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import binary_dilation, binary_erosion
from scipy.spatial import ConvexHull

from .data import SOURCE, TARGET, DomainDataset, ImageTensor, Sample, SoftMask
from .errors import ConfigError

AREA_RANGE = (0.05, 0.25)
FRACTION_BOUNDS = (0.02, 0.5)   # hard guarantee on mask foreground fraction
JITTER_MAX = 0.40               # target camouflage jitter at gap=0
JITTER_MIN = 0.12               # residual jitter at gap=1, keeps objects findable


@dataclass(frozen=True)
class GenConfig:
    seed: int
    count: int
    size: tuple[int, int] = (64, 64)
    gap: float = 0.8
    texture_bank: int = 6

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if min(self.size) < 32:
            raise ConfigError("size components must be >= 32")
        if not 0.0 <= self.gap <= 1.0:
            raise ConfigError("gap must lie in [0, 1]")
        if self.texture_bank < 2:
            raise ConfigError("texture_bank must be >= 2")


# -- procedural textures ------------------------------------------------------

def _upscale(grid: np.ndarray, hw: tuple[int, int]) -> np.ndarray:
    h, w = hw
    gy, gx = grid.shape
    ys = np.clip((np.arange(h) + 0.5) * (gy / h) - 0.5, 0, gy - 1)
    xs = np.clip((np.arange(w) + 0.5) * (gx / w) - 0.5, 0, gx - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, gy - 1)
    x1 = np.minimum(x0 + 1, gx - 1)
    ty = (ys - y0)[:, None]
    tx = (xs - x0)[None, :]
    top = grid[np.ix_(y0, x0)] * (1 - tx) + grid[np.ix_(y0, x1)] * tx
    bot = grid[np.ix_(y1, x0)] * (1 - tx) + grid[np.ix_(y1, x1)] * tx
    return top * (1 - ty) + bot * ty


def _value_noise(rng: np.random.Generator, hw, octaves: int, persistence: float) -> np.ndarray:
    field = np.zeros(hw)
    amp, total = 1.0, 0.0
    for o in range(octaves):
        side = 4 * 2**o
        field += amp * _upscale(rng.random((side, side)), hw)
        total += amp
        amp *= persistence
    field /= total
    lo, hi = field.min(), field.max()
    return (field - lo) / (hi - lo + 1e-12)


def _family_palette(family: int, bank: int, rng: np.random.Generator) -> np.ndarray:
    hue = (family / bank + rng.uniform(-0.06, 0.06)) % 1.0
    sat0 = 0.25 + 0.5 * ((family * 0.37) % 1.0)
    colors = []
    for k in range(3):
        h = (hue + rng.uniform(-0.04, 0.04)) % 1.0
        s = np.clip(sat0 + rng.uniform(-0.15, 0.15), 0.05, 0.95)
        v = np.clip(0.25 + 0.3 * k + rng.uniform(-0.1, 0.1), 0.05, 0.98)
        colors.append(colorsys.hsv_to_rgb(h, s, v))
    return np.asarray(colors)


def _texture(family: int, bank: int, rng: np.random.Generator, hw) -> np.ndarray:
    """(3, h, w) colorized noise field for one texture family."""
    persistence = 0.35 + 0.35 * ((family * 0.61803) % 1.0)
    field = _value_noise(rng, hw, octaves=4, persistence=persistence)
    c0, c1, c2 = _family_palette(family, bank, rng)
    t = field[None]
    low = c0[:, None, None] * (1 - 2 * t) + c1[:, None, None] * (2 * t)
    high = c1[:, None, None] * (2 - 2 * t) + c2[:, None, None] * (2 * t - 1)
    return np.clip(np.where(t < 0.5, low, high), 0.0, 1.0)


# -- object shapes ------------------------------------------------------------

def _ellipse_alpha(rng, hw, area_frac: float) -> np.ndarray:
    h, w = hw
    target_px = area_frac * h * w
    aspect = rng.uniform(0.5, 2.0)
    a = np.sqrt(target_px * aspect / np.pi)
    b = target_px / (np.pi * a)
    theta = rng.uniform(0, np.pi)
    cy = rng.uniform(0.32, 0.68) * h
    cx = rng.uniform(0.32, 0.68) * w
    yy, xx = np.mgrid[0:h, 0:w]
    dy, dx = yy - cy, xx - cx
    u = (dx * np.cos(theta) + dy * np.sin(theta)) / a
    v = (-dx * np.sin(theta) + dy * np.cos(theta)) / b
    r = np.sqrt(u * u + v * v)
    soft = 1.2 / min(a, b)
    return np.clip((1.0 - r) / soft + 0.5, 0.0, 1.0)


def _blob_alpha(rng, hw, area_frac: float) -> np.ndarray:
    field = _value_noise(rng, hw, octaves=2, persistence=0.5)
    # confine the blob away from the borders
    h, w = hw
    yy, xx = np.mgrid[0:h, 0:w]
    rad = np.sqrt(((yy - h / 2) / (0.45 * h)) ** 2 + ((xx - w / 2) / (0.45 * w)) ** 2)
    field = field * np.clip(1.6 - rad, 0.0, 1.0)
    thresh = np.quantile(field, 1.0 - area_frac)
    soft = 0.06 * (field.max() - field.min() + 1e-9)
    return np.clip((field - thresh) / soft + 0.5, 0.0, 1.0)


def _polygon_alpha(rng, hw, area_frac: float) -> np.ndarray:
    h, w = hw
    radius = np.sqrt(area_frac * h * w / np.pi) * rng.uniform(1.0, 1.25)
    cy = rng.uniform(0.35, 0.65) * h
    cx = rng.uniform(0.35, 0.65) * w
    k = int(rng.integers(5, 10))
    ang = np.sort(rng.uniform(0, 2 * np.pi, size=k))
    rr = radius * rng.uniform(0.7, 1.15, size=k)
    pts = np.stack([cx + rr * np.cos(ang), cy + rr * np.sin(ang)], axis=1)
    hull = ConvexHull(pts)
    verts = pts[hull.vertices]  # counter-clockwise
    yy, xx = np.mgrid[0:h, 0:w]
    alpha = np.full(hw, np.inf)
    for i in range(len(verts)):
        p1 = verts[i]
        p2 = verts[(i + 1) % len(verts)]
        edge = p2 - p1
        norm = np.hypot(*edge) + 1e-12
        sd = (edge[0] * (yy - p1[1]) - edge[1] * (xx - p1[0])) / norm
        alpha = np.minimum(alpha, sd)
    return np.clip(alpha / 1.2 + 0.5, 0.0, 1.0)


_SHAPES = (_ellipse_alpha, _blob_alpha, _polygon_alpha)


def _draw_shape(rng: np.random.Generator, hw) -> np.ndarray:
    """Shape alpha with foreground fraction guaranteed inside bounds."""
    for _ in range(12):
        fn = _SHAPES[int(rng.integers(len(_SHAPES)))]
        alpha = fn(rng, hw, rng.uniform(*AREA_RANGE))
        frac = float((alpha >= 0.5).mean())
        if FRACTION_BOUNDS[0] <= frac <= FRACTION_BOUNDS[1]:
            return alpha
    return _ellipse_alpha(rng, hw, 0.12)  # conservative fallback, always in bounds


# -- sample assembly ----------------------------------------------------------

def _camouflage_jitter(bg: np.ndarray, amp: float, rng: np.random.Generator) -> np.ndarray:
    """A lightly contrast/brightness/channel-shifted copy of the background."""
    mean = bg.mean(axis=(1, 2), keepdims=True)
    out = (bg - mean) * (1.0 + amp * rng.uniform(-1.0, 1.0)) + mean
    out = out + amp * 0.5 * rng.uniform(-1.0, 1.0)
    gains = 1.0 + amp * 0.4 * rng.uniform(-1.0, 1.0, size=(3, 1, 1))
    return np.clip(out * gains, 0.0, 1.0)


def _families(rng: np.random.Generator, bank: int) -> tuple[int, int]:
    bg = int(rng.integers(bank))
    obj = int((bg + 1 + rng.integers(bank - 1)) % bank)
    return bg, obj


def _make_sample(cfg: GenConfig, split: str, index: int, camouflaged: bool):
    rng = np.random.default_rng((cfg.seed, _SPLIT_CODES[split], index))
    bg_family, obj_family = _families(rng, cfg.texture_bank)
    bg = _texture(bg_family, cfg.texture_bank, rng, cfg.size)
    tex = _texture(obj_family, cfg.texture_bank, rng, cfg.size)
    alpha = _draw_shape(rng, cfg.size)
    if camouflaged:
        amp = JITTER_MIN + (JITTER_MAX - JITTER_MIN) * (1.0 - cfg.gap)
        camo = _camouflage_jitter(bg, amp, rng)
        tex = (1.0 - cfg.gap) * tex + cfg.gap * camo
    img = np.clip(bg * (1.0 - alpha) + tex * alpha, 0.0, 1.0)
    sid = f"{split}{cfg.seed:04d}_{index:05d}"
    return sid, ImageTensor(img), SoftMask(alpha)


_SPLIT_CODES = {"src": 1, "tgt": 2, "tgt_test": 3}


def generate_source(cfg: GenConfig) -> DomainDataset:
    """Labeled source samples: object texture independent of the background."""
    samples = []
    for i in range(cfg.count):
        sid, img, mask = _make_sample(cfg, "src", i, camouflaged=False)
        samples.append(Sample(id=sid, image=img, label=mask, domain_tag=SOURCE))
    return DomainDataset(samples=tuple(samples), name=f"src{cfg.seed}")


def generate_target(cfg: GenConfig, with_labels: bool) -> DomainDataset:
    """Camouflaged target samples; labels attach only to the evaluation split.

    Labeled samples carry the labeled provenance tag (they are evaluation
    ground truth, never consistency-training inputs); unlabeled ones are
    plain target samples.
    """
    split = "tgt_test" if with_labels else "tgt"
    samples = []
    for i in range(cfg.count):
        sid, img, mask = _make_sample(cfg, split, i, camouflaged=True)
        if with_labels:
            samples.append(Sample(id=sid, image=img, label=mask, domain_tag=SOURCE))
        else:
            samples.append(Sample(id=sid, image=img, label=None, domain_tag=TARGET))
    return DomainDataset(samples=tuple(samples), name=f"{split}{cfg.seed}")


def object_background_contrast(image: ImageTensor, mask: SoftMask, band_px: int = 5) -> float:
    """Mean absolute object/background intensity contrast in a boundary band.

    Diagnostic used to verify the appearance gap: lower values mean better
    camouflage. The band is the set of pixels within ``band_px`` of the mask
    boundary.
    """
    fg = mask.values >= 0.5
    band = binary_dilation(fg, iterations=band_px) & ~binary_erosion(fg, iterations=band_px)
    inner = band & fg
    outer = band & ~fg
    if inner.sum() == 0 or outer.sum() == 0:
        return 0.0
    px = image.pixels
    diff = px[:, inner].mean(axis=1) - px[:, outer].mean(axis=1)
    return float(np.abs(diff).mean())
