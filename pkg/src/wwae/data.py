"""Datasets and batching: IDX-format image loading (MNIST-style files),
synthetic 2-D rings for fast verification, a structured synthetic image
corpus for offline desk-scale image runs, and with-replacement mini-batch
streams.

IDX acquisition is manual by design: point data_path at locally downloaded,
gunzipped IDX files. Nothing here touches the network.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .numerics import Matrix, Rng

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


@dataclass
class Dataset:
    """Immutable example matrix with optional integer labels.

    Image data lives in [0, 1] (scaled by 1/255) and carries image_shape;
    synthetic 2-D data has image_shape None.
    """

    examples: Matrix
    labels: Optional[np.ndarray]
    name: str
    image_shape: Optional[tuple[int, int]] = None

    def __post_init__(self) -> None:
        if self.labels is not None and len(self.labels) != self.examples.shape[0]:
            raise ValueError(
                f"{len(self.labels)} labels for {self.examples.shape[0]} examples"
            )

    @property
    def n(self) -> int:
        return self.examples.shape[0]

    @property
    def dim(self) -> int:
        return self.examples.shape[1]


def _read_exact(path: Path, expected: int, payload: bytes) -> None:
    if len(payload) < expected:
        raise ValueError(
            f"truncated IDX file {path}: expected {expected} data bytes, got {len(payload)}"
        )


def load_idx(
    images_path: str | Path,
    labels_path: str | Path | None = None,
    limit: int | None = None,
) -> Dataset:
    """Load an IDX image file (and optional aligned label file).

    Layout: big-endian uint32 magic, then dimension sizes, then raw bytes.
    Pixels are scaled to [0, 1]. `limit` truncates to the first examples;
    limit == 0 is rejected (an empty dataset is useless).
    """
    images_path = Path(images_path)
    raw = images_path.read_bytes()
    if len(raw) < 16:
        raise ValueError(f"truncated IDX file {images_path}: no header")
    magic, n, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise ValueError(
            f"not IDX images: {images_path} has magic 0x{magic:08x}, "
            f"expected 0x{IDX_IMAGES_MAGIC:08x}"
        )
    _read_exact(images_path, n * rows * cols, raw[16:])
    if limit is not None:
        if limit <= 0:
            raise ValueError(f"limit must be positive, got {limit}")
        n = min(n, limit)
    pixels = np.frombuffer(raw, dtype=np.uint8, count=n * rows * cols, offset=16)
    examples = pixels.astype(np.float64).reshape(n, rows * cols) / 255.0

    labels = None
    if labels_path is not None:
        labels_path = Path(labels_path)
        lraw = labels_path.read_bytes()
        if len(lraw) < 8:
            raise ValueError(f"truncated IDX file {labels_path}: no header")
        lmagic, ln = struct.unpack(">II", lraw[:8])
        if lmagic != IDX_LABELS_MAGIC:
            raise ValueError(
                f"not IDX labels: {labels_path} has magic 0x{lmagic:08x}, "
                f"expected 0x{IDX_LABELS_MAGIC:08x}"
            )
        _read_exact(labels_path, ln, lraw[8:])
        if ln < n:
            raise ValueError(f"label file has {ln} entries for {n} images")
        labels = np.frombuffer(lraw, dtype=np.uint8, count=n, offset=8).astype(np.int64)

    return Dataset(examples, labels, images_path.name, (rows, cols))


def write_idx_images(path: str | Path, images: Matrix, shape: tuple[int, int]) -> None:
    """Write [0, 1] image rows as an IDX images file (inverse of load_idx)."""
    rows, cols = shape
    images = np.asarray(images, dtype=np.float64)
    if images.shape[1] != rows * cols:
        raise ValueError(f"rows have {images.shape[1]} pixels, shape wants {rows * cols}")
    data = np.clip(np.round(images * 255.0), 0, 255).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", IDX_IMAGES_MAGIC, images.shape[0], rows, cols))
        fh.write(data.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    labels = np.asarray(labels)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", IDX_LABELS_MAGIC, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


def make_ring(
    rng: Rng,
    n: int,
    modes: int = 8,
    radius: float = 2.0,
    sigma: float = 0.1,
) -> Dataset:
    """Equal-weight Gaussian blobs on a circle; label = mode index."""
    if n < modes:
        raise ValueError(f"need at least {modes} points, got {n}")
    angles = 2.0 * np.pi * np.arange(modes) / modes
    centers = radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    labels = rng.integers(0, modes, n)
    points = centers[labels] + sigma * rng.normal(n, 2)
    return Dataset(points, labels.astype(np.int64), f"ring{modes}", None)


def ring_centers(modes: int = 8, radius: float = 2.0) -> Matrix:
    angles = 2.0 * np.pi * np.arange(modes) / modes
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def make_blob_images(
    rng: Rng,
    n: int,
    side: int = 28,
    classes: int = 10,
) -> Dataset:
    """Structured synthetic grayscale images: per-class triangles of soft
    Gaussian bumps with jittered anchors. Offline stand-in for digit-style
    corpora; pixel values in [0, 1], label = class index.
    """
    half = (side - 1) / 2.0
    arm = 0.5 * side
    grid = np.stack(
        np.meshgrid(np.arange(side), np.arange(side), indexing="ij"), axis=-1
    ).reshape(-1, 2)

    labels = rng.integers(0, classes, n)
    theta = 2.0 * np.pi * (labels[:, None] / classes + np.arange(3)[None, :] / 3.0)
    anchors = np.stack(
        [half + arm * 0.46 * np.cos(theta), half + arm * 0.46 * np.sin(theta)], axis=-1
    )
    anchors += 1.5 * rng.normal(n, 6).reshape(n, 3, 2)
    amps = 0.8 + 0.2 * rng.uniform(n, 3)

    width = 0.09 * side
    diffs = grid[None, :, None, :] - anchors[:, None, :, :]  # n x px x 3 x 2
    bumps = np.exp(-np.sum(diffs**2, axis=-1) / (2.0 * width**2))
    images = np.clip(np.sum(bumps * amps[:, None, :], axis=-1), 0.0, 1.0)
    return Dataset(images, labels.astype(np.int64), "blobs", (side, side))


def derive_labels_path(images_path: str | Path) -> Optional[Path]:
    """Guess the label file next to an IDX image file by name convention.

    Replaces "images" with "labels" and "idx3" with "idx1" in the filename
    (the standard MNIST naming); returns the path only if it exists.
    """
    images_path = Path(images_path)
    name = images_path.name.replace("images", "labels").replace("idx3", "idx1")
    if name == images_path.name:
        return None
    candidate = images_path.with_name(name)
    return candidate if candidate.is_file() else None


def load_dataset(cfg, rng: Rng) -> Dataset:
    """Materialize the dataset a TrainConfig names.

    Ring data is synthesized from the given rng; IDX data comes from
    cfg.data_path, with labels picked up by filename convention when the
    companion file is present.
    """
    if cfg.dataset == "ring":
        return make_ring(rng, cfg.limit)
    if cfg.dataset == "idx":
        return load_idx(cfg.data_path, derive_labels_path(cfg.data_path), cfg.limit)
    raise ValueError(f"unknown dataset kind {cfg.dataset!r}")


def batches(dataset: Dataset, batch_size: int, rng: Rng) -> Iterator[Matrix]:
    """Infinite stream of with-replacement mini-batches, seeded by rng."""
    if batch_size > dataset.n:
        raise ValueError(f"batch_size {batch_size} exceeds dataset size {dataset.n}")
    if batch_size < 1:
        raise ValueError(f"batch_size must be positive, got {batch_size}")

    def _stream() -> Iterator[Matrix]:
        while True:
            idx = rng.integers(0, dataset.n, batch_size)
            yield dataset.examples[idx]

    return _stream()
