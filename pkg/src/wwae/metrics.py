"""Evaluation metrics: Frechet distance between Gaussian fits of feature
sets (the FID protocol with a PCA-of-pixels feature extractor), mode
coverage on synthetic mixtures, and latent-statistics diagnostics.

The feature extractor here is a fixed top-k PCA basis of the real pixels,
not an Inception network, so absolute values are not comparable to
published FID tables; every CLI surface labels the number "desk-FID".
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import divergences, spectral
from .data import Dataset
from .divergences import W2Variant
from .models import encode, reparameterize
from .nn import MlpParams
from .numerics import Matrix, Rng
from .spectral import GaussStats

DEFAULT_FEATURE_DIM = 32

BASIS_MAGIC = "WWAEBASIS 1"


@dataclass
class FeatureSet:
    """Rows of feature vectors plus a tag naming where they came from."""

    features: Matrix
    source: str = ""


def fid(a: FeatureSet, b: FeatureSet) -> float:
    """Squared Gaussian W2 (Bures cross term) between unbiased fits.

    The two fits are fed to the divergence in a canonical byte order, so
    fid(a, b) == fid(b, a) exactly, not just up to rounding.
    """
    fa = np.asarray(a.features, dtype=np.float64)
    fb = np.asarray(b.features, dtype=np.float64)
    if fa.ndim != 2 or fb.ndim != 2 or fa.shape[1] != fb.shape[1]:
        raise ValueError(
            f"feature dimensions differ: {fa.shape} vs {fb.shape}"
        )
    sa = spectral.batch_stats(fa, unbiased=True)
    sb = spectral.batch_stats(fb, unbiased=True)
    ka = sa.mean.tobytes() + sa.cov.tobytes()
    kb = sb.mean.tobytes() + sb.cov.tobytes()
    if kb < ka:
        sa, sb = sb, sa
    return divergences.gaussian_w2(sa, sb, W2Variant.BURES)


def pixel_pca_features(
    images: Matrix,
    basis: Optional[Matrix],
    k: int = DEFAULT_FEATURE_DIM,
) -> tuple[FeatureSet, Matrix]:
    """Project images onto a top-k pixel-PCA basis, fitting it if absent.

    The basis must be fitted once on the real (reference) side and reused
    for every set entering the same comparison; refitting per side would
    put the two sides in different feature spaces.
    """
    images = np.asarray(images, dtype=np.float64)
    if images.ndim != 2:
        raise ValueError(f"expected an n x d matrix, got shape {images.shape}")
    n, d = images.shape
    if basis is None:
        if k > min(n, d):
            raise ValueError(f"k={k} exceeds min(n, d) = {min(n, d)}")
        cov = spectral.batch_stats(images, unbiased=True).cov
        dec = spectral.eigh(cov)
        basis = dec.eigenvectors[:, :k].copy()
        # Sign convention: largest-magnitude entry of each direction is
        # positive, so the fitted basis is unique and runs are comparable.
        for j in range(k):
            col = basis[:, j]
            if col[np.argmax(np.abs(col))] < 0:
                basis[:, j] = -col
    else:
        basis = np.asarray(basis, dtype=np.float64)
        if basis.shape[0] != d:
            raise ValueError(
                f"basis rows {basis.shape[0]} do not match pixel count {d}"
            )
    return FeatureSet(images @ basis), basis


def save_basis(path: str | Path, basis: Matrix) -> None:
    basis = np.asarray(basis, dtype=np.float64)
    header = (
        BASIS_MAGIC
        + "\n"
        + json.dumps({"rows": basis.shape[0], "cols": basis.shape[1]})
        + "\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(basis, dtype="<f8").tobytes())


def load_basis(path: str | Path) -> Matrix:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"basis file not found: {path}")
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        if magic != BASIS_MAGIC:
            raise ValueError(f"not a basis file (bad magic line {magic!r})")
        meta = json.loads(fh.readline().decode("ascii"))
        raw = fh.read()
    rows, cols = int(meta["rows"]), int(meta["cols"])
    if len(raw) != rows * cols * 8:
        raise ValueError(
            f"basis file truncated: expected {rows * cols * 8} bytes, got {len(raw)}"
        )
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(rows, cols)


def write_features_csv(path: str | Path, features: FeatureSet) -> None:
    """One feature vector per line, comma separated, no header."""
    with open(path, "w") as fh:
        for row in np.asarray(features.features, dtype=np.float64):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_features_csv(path: str | Path) -> FeatureSet:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"feature file not found: {path}")
    rows = []
    for line in path.read_text().splitlines():
        line = line.strip()
        if line:
            rows.append([float(v) for v in line.split(",")])
    if not rows:
        raise ValueError(f"feature file is empty: {path}")
    return FeatureSet(np.array(rows, dtype=np.float64), source=str(path))


def mode_coverage(
    samples: Matrix, centers: Matrix, max_dist: float
) -> tuple[int, float]:
    """Collapse diagnostic against known mixture centers.

    Each sample is assigned to its nearest center. A center counts as
    covered when it owns at least n/(10 m) samples lying within max_dist;
    the second value is the fraction of all samples within max_dist of
    their nearest center.
    """
    samples = np.asarray(samples, dtype=np.float64)
    centers = np.asarray(centers, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 1:
        raise ValueError(f"need at least one sample, got shape {samples.shape}")
    n, m = samples.shape[0], centers.shape[0]
    d2 = np.sum((samples[:, None, :] - centers[None, :, :]) ** 2, axis=2)
    nearest = np.argmin(d2, axis=1)
    within = d2[np.arange(n), nearest] <= max_dist**2
    need = n / (10.0 * m)
    covered = 0
    for c in range(m):
        if np.sum(within & (nearest == c)) >= need:
            covered += 1
    return covered, float(np.mean(within))


@dataclass
class LatentReport:
    stats: GaussStats  # aggregated-posterior fit
    codes: Matrix  # n x latent_dim
    labels: Optional[np.ndarray]


def latent_report(
    enc_params: MlpParams, dataset: Dataset, rng: Rng, n: int
) -> LatentReport:
    """Encode the first n examples with reparameterization noise from rng."""
    n = min(n, dataset.n)
    if n < 2:
        raise ValueError(f"latent report needs at least 2 examples, got {n}")
    x = dataset.examples[:n]
    out = encode(enc_params, x)
    eps = rng.normal(n, out.mu.shape[1])
    z = reparameterize(out, eps)
    labels = dataset.labels[:n] if dataset.labels is not None else None
    return LatentReport(spectral.batch_stats(z, unbiased=True), z, labels)


def latent_summary(stats: GaussStats) -> tuple[float, float]:
    """(norm of the fitted mean, Frobenius distance of the fit from I)."""
    mu_norm = float(np.linalg.norm(stats.mean))
    eye = np.eye(stats.dim)
    cov_dist = float(np.linalg.norm(stats.cov - eye))
    return mu_norm, cov_dist
