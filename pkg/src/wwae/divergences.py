"""Distribution discrepancies: closed-form Gaussian W2 (two cross-term
variants) with analytic gradients, diagonal-Gaussian KL, IMQ-kernel MMD,
and an exact 1-D empirical W2 used as a test oracle.

The two W2 variants differ only in the covariance cross term:

  root_product: Trace(Sp^{1/2} Sq^{1/2})
  bures:        Trace((Sp^{1/2} Sq Sp^{1/2})^{1/2})

These agree when the covariances commute; in general bures >= root_product
(nuclear norm dominates trace), so the bures W2 value is the smaller one and
is the one matching the Frechet distance used by FID.
"""

from __future__ import annotations

import enum

import numpy as np

from .numerics import Matrix
from .spectral import GaussStats, grad_trace_sqrtm, sqrtm_psd

LOGVAR_MIN, LOGVAR_MAX = -30.0, 30.0


class W2Variant(enum.Enum):
    ROOT_PRODUCT = "root_product"
    BURES = "bures"


def _check_dims(p: GaussStats, q: GaussStats) -> int:
    if p.dim != q.dim or p.cov.shape != q.cov.shape:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    return p.dim


def _cross_term(p_cov: Matrix, q_cov: Matrix, variant: W2Variant) -> float:
    p_root = sqrtm_psd(p_cov)
    if variant is W2Variant.ROOT_PRODUCT:
        return float(np.trace(p_root @ sqrtm_psd(q_cov)))
    sandwich = p_root @ q_cov @ p_root
    return float(np.trace(sqrtm_psd(sandwich)))


def gaussian_w2(p: GaussStats, q: GaussStats, variant: W2Variant) -> float:
    """Squared Wasserstein-2 distance between Gaussian statistics.

    ||mu_p - mu_q||^2 + Tr(Sp) + Tr(Sq) - 2 * cross(Sp, Sq). Tiny negative
    results from rounding are clamped to 0.
    """
    _check_dims(p, q)
    if np.array_equal(p.mean, q.mean) and np.array_equal(p.cov, q.cov):
        return 0.0  # identical stats: exact zero, no rounding residue
    mean_term = float(np.sum((p.mean - q.mean) ** 2))
    val = mean_term + float(np.trace(p.cov) + np.trace(q.cov))
    val -= 2.0 * _cross_term(p.cov, q.cov, variant)
    return max(val, 0.0)


def gaussian_w2_grad(
    p: GaussStats, q: GaussStats, variant: W2Variant
) -> tuple[np.ndarray, Matrix]:
    """Gradients of gaussian_w2 with respect to q's mean and covariance.

    Only the q side carries gradients: in training, p holds the prior batch
    statistics, which do not depend on the model parameters.
    """
    d = _check_dims(p, q)
    grad_mean = 2.0 * (q.mean - p.mean)
    eye = np.eye(d)
    p_root = sqrtm_psd(p.cov)
    if variant is W2Variant.ROOT_PRODUCT:
        grad_cov = eye - grad_trace_sqrtm(q.cov, 2.0 * p_root)
    else:
        sandwich = p_root @ q.cov @ p_root
        inner = grad_trace_sqrtm(sandwich, eye)
        grad_cov = eye - 2.0 * p_root @ inner @ p_root
    return grad_mean, grad_cov


def kl_diag_gauss(mu: np.ndarray, logvar: np.ndarray) -> float:
    """KL divergence of a diagonal Gaussian to the standard normal."""
    mu = np.asarray(mu, dtype=np.float64)
    logvar = np.clip(np.asarray(logvar, dtype=np.float64), LOGVAR_MIN, LOGVAR_MAX)
    if mu.shape != logvar.shape:
        raise ValueError(f"shape mismatch: {mu.shape} vs {logvar.shape}")
    return float(0.5 * np.sum(mu**2 + np.exp(logvar) - logvar - 1.0))


def _imq_kernel_matrix(a: Matrix, b: Matrix, c: float) -> Matrix:
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * a @ b.T
    )
    np.maximum(sq, 0.0, out=sq)
    return c / (c + sq)


def mmd_imq(x: Matrix, y: Matrix, scale_c: float = 1.0) -> float:
    """Unbiased MMD^2 U-statistic with the inverse multiquadric kernel.

    Kernel k(a, b) = C / (C + ||a - b||^2) with C = scale_c * 2 * d, the
    standard-normal-prior convention.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape[0], y.shape[0]
    if n < 2 or m < 2:
        raise ValueError(f"mmd_imq needs at least 2 points per side, got {n}, {m}")
    if scale_c <= 0:
        raise ValueError(f"scale_c must be positive, got {scale_c}")
    c = scale_c * 2.0 * x.shape[1]
    kxx = _imq_kernel_matrix(x, x, c)
    kyy = _imq_kernel_matrix(y, y, c)
    kxy = _imq_kernel_matrix(x, y, c)
    term_x = (kxx.sum() - np.trace(kxx)) / (n * (n - 1))
    term_y = (kyy.sum() - np.trace(kyy)) / (m * (m - 1))
    cross = 2.0 * kxy.sum() / (n * m)
    return float(term_x + term_y - cross)


def mmd_imq_grad_y(x: Matrix, y: Matrix, scale_c: float = 1.0) -> Matrix:
    """Gradient of mmd_imq with respect to the rows of y (x held fixed)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, m = x.shape[0], y.shape[0]
    c = scale_c * 2.0 * x.shape[1]

    kyy = _imq_kernel_matrix(y, y, c)
    w_yy = kyy**2 / c  # dk/d(sq dist) = -C/(C+sq)^2 = -k^2/C
    np.fill_diagonal(w_yy, 0.0)
    diff_sum_y = w_yy.sum(axis=1)[:, None] * y - w_yy @ y
    grad = (-4.0 / (m * (m - 1))) * diff_sum_y

    kxy = _imq_kernel_matrix(x, y, c)
    w_xy = kxy**2 / c
    diff_sum_x = w_xy.sum(axis=0)[:, None] * y - w_xy.T @ x
    grad += (4.0 / (n * m)) * diff_sum_x
    return grad


def w2_1d_empirical(x: np.ndarray, y: np.ndarray) -> float:
    """Exact squared W2 between two equal-size 1-D empirical measures.

    Sorts both samples and pairs them monotonically, which is the optimal
    coupling in one dimension.
    """
    x = np.sort(np.asarray(x, dtype=np.float64).ravel())
    y = np.sort(np.asarray(y, dtype=np.float64).ravel())
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    return float(np.mean((x - y) ** 2))
