"""Symmetric eigendecomposition, PSD matrix square roots and their analytic
backward pass, and batch mean/covariance statistics with exact adjoints.

The square-root gradient uses the Daleckii-Krein divided-difference formula
1/(sqrt(li) + sqrt(lj)), which stays finite for repeated eigenvalues where a
generic eigendecomposition backward would blow up.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numerics import Matrix

EIG_CLAMP = 1e-12  # floor for eigenvalues before square roots
PSD_TOL = -1e-8  # most negative eigenvalue still treated as rounding


@dataclass
class EigenDecomp:
    """Eigenvalues (descending) and orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: Matrix


@dataclass
class GaussStats:
    """Mean vector and symmetric PSD covariance of a Gaussian or a batch."""

    mean: np.ndarray
    cov: Matrix

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def eigh(a: Matrix) -> EigenDecomp:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    The input is symmetrized as (A + A^T)/2 first, so mild asymmetry from
    accumulated rounding is tolerated.
    """
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"eigh expects a square matrix, got shape {a.shape}")
    sym = 0.5 * (a + a.T)
    vals, vecs = np.linalg.eigh(sym)
    return EigenDecomp(vals[::-1].copy(), vecs[:, ::-1].copy())


def _check_psd(dec: EigenDecomp) -> None:
    # Tolerance scales with the spectrum: eigensolver rounding error is
    # relative, so a fixed cutoff would misfire on huge sample covariances
    # (exploding but still PSD latents during a diverging run).
    lo = dec.eigenvalues[-1]
    tol = PSD_TOL * max(1.0, float(np.max(np.abs(dec.eigenvalues))))
    if lo < tol:
        raise ValueError(f"matrix is not PSD: eigenvalue {lo:.3e} < {tol:.0e}")


def sqrtm_psd(a: Matrix, eps: float = EIG_CLAMP) -> Matrix:
    """Symmetric PSD square root V diag(max(l, eps))^{1/2} V^T.

    Eigenvalues in [-1e-8, eps) are clamped up to eps; anything more negative
    (relative to the spectrum's scale) means the input is not a covariance
    and raises.
    """
    dec = eigh(a)
    _check_psd(dec)
    roots = np.sqrt(np.maximum(dec.eigenvalues, eps))
    v = dec.eigenvectors
    return (v * roots) @ v.T


def grad_trace_sqrtm(a: Matrix, c: Matrix, eps: float = EIG_CLAMP) -> Matrix:
    """Gradient of Trace(C A^{1/2}) with respect to symmetric PSD A.

    With A = V L V^T and S = V^T sym(C) V, the gradient is
    V [S_ij / (sqrt(l_i) + sqrt(l_j))] V^T; denominators are clamped below
    at 2*sqrt(eps) so rank-deficient A stays differentiable.
    """
    dec = eigh(a)
    _check_psd(dec)
    roots = np.sqrt(np.maximum(dec.eigenvalues, 0.0))
    denom = np.maximum(roots[:, None] + roots[None, :], 2.0 * np.sqrt(eps))
    v = dec.eigenvectors
    c = np.asarray(c, dtype=np.float64)
    s = v.T @ (0.5 * (c + c.T)) @ v
    g = v @ (s / denom) @ v.T
    # V S V^T is symmetric in exact arithmetic; enforce it bitwise so the
    # result can feed symmetric-only consumers without re-symmetrizing.
    return 0.5 * (g + g.T)


def batch_stats(z: Matrix, unbiased: bool = True) -> GaussStats:
    """Sample mean and covariance of the rows of z.

    The covariance divisor is n-1 when unbiased (metric convention) or n.
    """
    z = np.asarray(z, dtype=np.float64)
    n = z.shape[0]
    if n < 2:
        raise ValueError(f"batch_stats needs at least 2 rows, got {n}")
    mean = z.mean(axis=0)
    centered = z - mean
    m = n - 1 if unbiased else n
    cov = centered.T @ centered / m
    return GaussStats(mean, cov)


def batch_stats_backward(
    z: Matrix,
    grad_mean: np.ndarray,
    grad_cov: Matrix,
    unbiased: bool = True,
) -> Matrix:
    """Exact adjoint of batch_stats.

    Propagates <grad_mean, mean> + <grad_cov, cov> back to the rows:
    d/dz_i = grad_mean/n + (2/m) sym(grad_cov) (z_i - mean).
    """
    z = np.asarray(z, dtype=np.float64)
    n, d = z.shape
    grad_mean = np.asarray(grad_mean, dtype=np.float64)
    grad_cov = np.asarray(grad_cov, dtype=np.float64)
    if grad_mean.shape != (d,) or grad_cov.shape != (d, d):
        raise ValueError(
            f"gradient shapes {grad_mean.shape}, {grad_cov.shape} do not match data dim {d}"
        )
    m = n - 1 if unbiased else n
    centered = z - z.mean(axis=0)
    sym = 0.5 * (grad_cov + grad_cov.T)
    return grad_mean / n + (2.0 / m) * centered @ sym
