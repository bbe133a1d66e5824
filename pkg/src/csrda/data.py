"""Data model: images, soft masks, samples, datasets, and PNG ingestion.

All types are immutable after construction and safe to share across workers.
Datasets live on disk as ``<root>/images/*.png`` with an optional parallel
``<root>/masks/*.png`` directory; image and mask pair by file stem. Grayscale
mask byte ``b`` decodes to ``b / 255``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError, ShapeError

SOURCE = "source"
TARGET = "target"
CONFIDENT_PSEUDO = "confident-pseudo"
_TAGS = (SOURCE, TARGET, CONFIDENT_PSEUDO)

MIN_SIDE = 16


@dataclass(frozen=True)
class ImageTensor:
    """A (3, height, width) float array with values in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[0] != 3:
            raise ShapeError(f"image must be (3, h, w), got {px.shape}")
        if px.shape[1] < MIN_SIDE or px.shape[2] < MIN_SIDE:
            raise DataError(f"image sides must be >= {MIN_SIDE}, got {px.shape[1:]}")
        if not np.isfinite(px).all():
            raise DataError("image contains non-finite values")
        if px.min() < 0.0 or px.max() > 1.0:
            raise DataError("image values outside [0, 1]")
        object.__setattr__(self, "pixels", px)

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @property
    def width(self) -> int:
        return self.pixels.shape[2]


@dataclass(frozen=True)
class SoftMask:
    """A (height, width) float array of probabilities in [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 2:
            raise ShapeError(f"mask must be 2-D, got shape {v.shape}")
        if not np.isfinite(v).all():
            raise DataError("mask contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise DataError("mask values outside [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


@dataclass(frozen=True)
class Sample:
    """One image with optional label and a provenance tag."""

    id: str
    image: ImageTensor
    label: SoftMask | None
    domain_tag: str

    def __post_init__(self):
        if self.domain_tag not in _TAGS:
            raise DataError(f"unknown domain_tag {self.domain_tag!r}")
        if self.domain_tag == TARGET and self.label is not None:
            raise DataError(f"target sample {self.id!r} must not carry a label")
        if self.domain_tag in (SOURCE, CONFIDENT_PSEUDO) and self.label is None:
            raise DataError(f"{self.domain_tag} sample {self.id!r} must carry a label")
        if self.label is not None and self.label.shape != (self.image.height, self.image.width):
            raise ShapeError(
                f"sample {self.id!r}: mask shape {self.label.shape} != "
                f"image shape {(self.image.height, self.image.width)}"
            )


@dataclass(frozen=True)
class DomainDataset:
    """An ordered, id-unique collection of samples."""

    samples: tuple[Sample, ...]
    name: str = ""

    def __post_init__(self):
        samples = tuple(self.samples)
        ids = [s.id for s in samples]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise DataError(f"duplicate sample ids: {dupes}")
        tags = {s.domain_tag for s in samples}
        if len(tags) > 1 and tags != {SOURCE, CONFIDENT_PSEUDO}:
            raise DataError(f"dataset {self.name!r} mixes incompatible tags {sorted(tags)}")
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __getitem__(self, i: int) -> Sample:
        return self.samples[i]

    def ids(self) -> list[str]:
        return [s.id for s in self.samples]


# In-process journal of dataset roots read by load_dataset, in call order.
# The pipeline uses it to audit that evaluation data is never touched during
# training or selection.
LOAD_LOG: list[str] = []


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    return arr.transpose(2, 0, 1)


def _read_mask(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im.convert("L"), dtype=np.float32) / 255.0
    return arr


def load_dataset(root_path: str | Path, expect_labels: bool) -> DomainDataset:
    """Load a dataset directory into memory.

    One sample per ``images/*.png``, sorted by filename; ids are file stems.
    When ``expect_labels`` is true a parallel ``masks/`` directory with
    matching stems must exist.
    """
    root = Path(root_path)
    img_dir = root / "images"
    if not img_dir.is_dir():
        raise DataError(f"missing images directory: {img_dir}")
    mask_dir = root / "masks"
    if expect_labels and not mask_dir.is_dir():
        raise DataError(f"missing masks directory: {mask_dir}")
    LOAD_LOG.append(str(root))

    samples = []
    for img_path in sorted(img_dir.glob("*.png")):
        stem = img_path.stem
        image = ImageTensor(_read_image(img_path))
        label = None
        if expect_labels:
            mask_path = mask_dir / img_path.name
            if not mask_path.is_file():
                raise DataError(f"sample {stem!r}: missing mask {mask_path}")
            values = _read_mask(mask_path)
            if values.min() < 0.0 or values.max() > 1.0:
                raise DataError(f"sample {stem!r}: mask values outside [0, 1]")
            if values.shape != (image.height, image.width):
                raise ShapeError(
                    f"sample {stem!r}: mask shape {values.shape} != "
                    f"image shape {(image.height, image.width)}"
                )
            label = SoftMask(values)
        tag = SOURCE if expect_labels else TARGET
        samples.append(Sample(id=stem, image=image, label=label, domain_tag=tag))
    return DomainDataset(samples=tuple(samples), name=root.name)


def merge_datasets(a: DomainDataset, b: DomainDataset) -> DomainDataset:
    """Disjoint union preserving sample order (a first, then b)."""
    overlap = sorted(set(a.ids()) & set(b.ids()))
    if overlap:
        raise DataError(f"duplicate sample ids across datasets: {overlap}")
    name = a.name if not b.name else f"{a.name}+{b.name}" if a.name else b.name
    return DomainDataset(samples=a.samples + b.samples, name=name)


def save_mask(mask: SoftMask, path: str | Path) -> None:
    """Write an 8-bit grayscale PNG; value v maps to round(v * 255)."""
    path = Path(path)
    data = np.rint(np.asarray(mask.values, dtype=np.float64) * 255.0).astype(np.uint8)
    try:
        Image.fromarray(data, mode="L").save(path, format="PNG")
    except OSError as exc:
        raise DataError(f"failed to write mask {path}: {exc}") from exc


def save_image(image: ImageTensor, path: str | Path) -> None:
    """Write an RGB PNG; value v maps to round(v * 255) per channel."""
    path = Path(path)
    data = np.rint(image.pixels.transpose(1, 2, 0) * 255.0).astype(np.uint8)
    try:
        Image.fromarray(data, mode="RGB").save(path, format="PNG")
    except OSError as exc:
        raise DataError(f"failed to write image {path}: {exc}") from exc


def save_dataset(dataset: DomainDataset, root_path: str | Path) -> None:
    """Write a dataset in the on-disk layout load_dataset expects."""
    root = Path(root_path)
    (root / "images").mkdir(parents=True, exist_ok=True)
    has_labels = any(s.label is not None for s in dataset)
    if has_labels:
        (root / "masks").mkdir(parents=True, exist_ok=True)
    for s in dataset:
        save_image(s.image, root / "images" / f"{s.id}.png")
        if s.label is not None:
            save_mask(s.label, root / "masks" / f"{s.id}.png")
