"""Binary PGM/PPM export, sample-grid tiling, and small CSV writers.

Uncompressed P5/P6 keeps image artifacts byte-exact under fixed seeds, so
golden-file tests can compare whole files.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .numerics import Matrix


def to_bytes_image(img: Matrix) -> np.ndarray:
    """Map [0,1] floats to uint8 via clamp(round(255 x))."""
    img = np.asarray(img, dtype=np.float64)
    return np.clip(np.rint(255.0 * img), 0, 255).astype(np.uint8)


def write_pgm(path: str | Path, img: Matrix) -> None:
    """Binary PGM (P5) from an h x w matrix in [0,1]."""
    data = to_bytes_image(img)
    if data.ndim != 2:
        raise ValueError(f"PGM needs an h x w matrix, got shape {data.shape}")
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def write_ppm(path: str | Path, img: Matrix) -> None:
    """Binary PPM (P6) from an h x w x 3 array in [0,1]."""
    data = to_bytes_image(img)
    if data.ndim != 3 or data.shape[2] != 3:
        raise ValueError(f"PPM needs h x w x 3, got shape {data.shape}")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    """Binary PGM reader (test helper); returns uint8 h x w."""
    raw = Path(path).read_bytes()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM: magic {fields[0]!r}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    pixels = np.frombuffer(raw[pos : pos + w * h], dtype=np.uint8)
    if pixels.size != w * h:
        raise ValueError(f"PGM truncated: expected {w * h} pixels, got {pixels.size}")
    return pixels.reshape(h, w)


def tile_grid(
    rows: Matrix, image_shape: tuple[int, int], cols: Optional[int] = None
) -> Matrix:
    """Tile n flattened images into a near-square grid, zero-padding gaps.

    Default layout is ceil(sqrt(n)) columns, so 64 images of 28 x 28 tile
    to a 224 x 224 grid.
    """
    rows = np.asarray(rows, dtype=np.float64)
    n = rows.shape[0]
    h, w = image_shape
    if rows.shape[1] != h * w:
        raise ValueError(
            f"image rows have {rows.shape[1]} values, shape {image_shape} needs {h * w}"
        )
    if cols is None:
        cols = int(math.ceil(math.sqrt(n)))
    grid_rows = int(math.ceil(n / cols))
    canvas = np.zeros((grid_rows * h, cols * w))
    for i in range(n):
        r, c = divmod(i, cols)
        canvas[r * h : (r + 1) * h, c * w : (c + 1) * w] = rows[i].reshape(h, w)
    return canvas


def pair_grid(
    originals: Matrix, reconstructions: Matrix, image_shape: tuple[int, int]
) -> Matrix:
    """Original/reconstruction pairs side by side, 2*ceil(sqrt(n)) columns."""
    originals = np.asarray(originals, dtype=np.float64)
    reconstructions = np.asarray(reconstructions, dtype=np.float64)
    if originals.shape != reconstructions.shape:
        raise ValueError(
            f"shape mismatch: {originals.shape} vs {reconstructions.shape}"
        )
    n = originals.shape[0]
    base = int(math.ceil(math.sqrt(n)))
    interleaved = np.zeros((2 * n, originals.shape[1]))
    interleaved[0::2] = originals
    interleaved[1::2] = reconstructions
    return tile_grid(interleaved, image_shape, cols=2 * base)


def write_points_csv(
    path: str | Path, points: Matrix, labels: Optional[np.ndarray] = None
) -> None:
    """One point per line, comma-separated, full double precision."""
    points = np.asarray(points, dtype=np.float64)
    with open(path, "w") as fh:
        for i, row in enumerate(points):
            cells = [f"{v:.17g}" for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")


def write_latent_csv(
    path: str | Path, codes: Matrix, labels: Optional[np.ndarray]
) -> None:
    """Latent dump with a named header: z_1..z_l and label when present."""
    codes = np.asarray(codes, dtype=np.float64)
    ell = codes.shape[1]
    header = ",".join(f"z_{j + 1}" for j in range(ell))
    if labels is not None:
        header += ",label"
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, row in enumerate(codes):
            cells = [f"{v:.17g}" for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            fh.write(",".join(cells) + "\n")
