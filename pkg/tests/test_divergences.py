import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_spd
from wwae.divergences import (
    W2Variant,
    gaussian_w2,
    gaussian_w2_grad,
    kl_diag_gauss,
    mmd_imq,
    mmd_imq_grad_y,
    w2_1d_empirical,
)
from wwae.numerics import Rng
from wwae.spectral import GaussStats, batch_stats, sqrtm_psd

BOTH = [W2Variant.ROOT_PRODUCT, W2Variant.BURES]


def random_stats(rng: Rng, d: int) -> GaussStats:
    return GaussStats(rng.normal(d, 1).ravel(), random_spd(rng, d))


class TestGaussianW2:
    @pytest.mark.parametrize("variant", BOTH)
    def test_identical_is_exact_zero(self, rng, variant):
        p = random_stats(rng, 4)
        q = GaussStats(p.mean.copy(), p.cov.copy())
        assert gaussian_w2(p, q, variant) == 0.0

    @pytest.mark.parametrize("variant", BOTH)
    def test_mean_shift_only(self, variant):
        p = GaussStats(np.zeros(2), np.eye(2))
        q = GaussStats(np.array([3.0, 4.0]), np.eye(2))
        assert abs(gaussian_w2(p, q, variant) - 25.0) < 1e-12

    @pytest.mark.parametrize("variant", BOTH)
    def test_commuting_case(self, variant):
        # per-coordinate formula: (1-2)^2 + (2-1)^2 + |(1,1)|^2 = 4
        p = GaussStats(np.zeros(2), np.diag([1.0, 4.0]))
        q = GaussStats(np.array([1.0, 1.0]), np.diag([4.0, 1.0]))
        assert abs(gaussian_w2(p, q, variant) - 4.0) < 1e-9

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_w2(
                GaussStats(np.zeros(2), np.eye(2)),
                GaussStats(np.zeros(3), np.eye(3)),
                W2Variant.BURES,
            )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_symmetric_and_nonnegative(self, seed):
        rng = Rng(seed)
        p, q = random_stats(rng, 5), random_stats(rng, 5)
        for variant in BOTH:
            ab = gaussian_w2(p, q, variant)
            ba = gaussian_w2(q, p, variant)
            assert ab >= 0.0 and ba >= 0.0
            assert abs(ab - ba) <= 1e-9 * max(1.0, ab)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_bures_below_root_product(self, seed):
        rng = Rng(seed)
        p, q = random_stats(rng, 5), random_stats(rng, 5)
        bures = gaussian_w2(p, q, W2Variant.BURES)
        cross = gaussian_w2(p, q, W2Variant.ROOT_PRODUCT)
        assert bures <= cross + 1e-9

    def test_variants_agree_when_commuting(self, rng):
        # simultaneously diagonalizable pair: same eigenvectors
        v = np.linalg.qr(rng.normal(4, 4))[0]
        p = GaussStats(rng.normal(4, 1).ravel(), (v * rng.uniform(4, 1).ravel()) @ v.T)
        q = GaussStats(rng.normal(4, 1).ravel(), (v * rng.uniform(4, 1).ravel()) @ v.T)
        a = gaussian_w2(p, q, W2Variant.BURES)
        b = gaussian_w2(p, q, W2Variant.ROOT_PRODUCT)
        assert abs(a - b) <= 1e-9 * max(1.0, a)

    def test_root_product_is_root_frobenius(self, rng):
        p, q = random_stats(rng, 5), random_stats(rng, 5)
        got = gaussian_w2(p, q, W2Variant.ROOT_PRODUCT)
        diff = sqrtm_psd(p.cov) - sqrtm_psd(q.cov)
        want = float(np.sum((p.mean - q.mean) ** 2) + np.sum(diff * diff))
        assert abs(got - want) <= 1e-9 * max(1.0, want)


class TestGaussianW2Grad:
    @pytest.mark.parametrize("variant", BOTH)
    def test_minimum_has_zero_mean_grad(self, variant):
        p = GaussStats(np.zeros(3), 2.0 * np.eye(3))
        gm, _ = gaussian_w2_grad(p, p, variant)
        np.testing.assert_allclose(gm, np.zeros(3), atol=1e-12)

    @pytest.mark.parametrize("variant", BOTH)
    def test_quadratic_mean_term(self, variant):
        m = np.array([1.0, -2.0, 0.5])
        p = GaussStats(np.zeros(3), np.eye(3))
        q = GaussStats(m, np.eye(3))
        gm, _ = gaussian_w2_grad(p, q, variant)
        np.testing.assert_allclose(gm, 2.0 * m, atol=1e-12)

    @pytest.mark.parametrize("variant", BOTH)
    def test_matches_finite_differences(self, rng, variant):
        d = 6
        p, q = random_stats(rng, d), random_stats(rng, d)
        gm, gc = gaussian_w2_grad(p, q, variant)
        h = 1e-6

        for k in range(d):
            mp, mm = q.mean.copy(), q.mean.copy()
            mp[k] += h
            mm[k] -= h
            fd = (
                gaussian_w2(p, GaussStats(mp, q.cov), variant)
                - gaussian_w2(p, GaussStats(mm, q.cov), variant)
            ) / (2 * h)
            assert abs(gm[k] - fd) <= 1e-6 * max(abs(fd), 1.0)

        for _ in range(15):
            i, j = rng.integers(0, d, 2)
            e = np.zeros((d, d))
            e[i, j] += 0.5
            e[j, i] += 0.5
            up = gaussian_w2(p, GaussStats(q.mean, q.cov + h * e), variant)
            dn = gaussian_w2(p, GaussStats(q.mean, q.cov - h * e), variant)
            fd = (up - dn) / (2 * h)
            an = float((gc * e).sum())
            assert abs(an - fd) <= 1e-6 * max(abs(fd), 1.0)


class TestKl:
    def test_zero_at_prior(self):
        assert kl_diag_gauss(np.zeros(3), np.zeros(3)) == 0.0

    def test_hand_values(self):
        assert abs(kl_diag_gauss(np.array([1.0]), np.array([0.0])) - 0.5) < 1e-12
        want = 0.5 * (np.e - 2.0)
        assert abs(kl_diag_gauss(np.array([0.0]), np.array([1.0])) - want) < 1e-12

    def test_extreme_logvar_clamped(self):
        # values beyond +-30 clamp instead of overflowing
        v = kl_diag_gauss(np.zeros(2), np.array([1000.0, -1000.0]))
        assert np.isfinite(v)


class TestMmd:
    def test_hand_expansion(self):
        # two equal point sets, kernel C = 1: the unbiased U-statistic
        # evaluates to 2*(0.2) - (1/2)*(2 + 2*0.2) = -0.8
        x = np.array([[0.0, 0.0], [2.0, 0.0]])
        assert abs(mmd_imq(x, x.copy(), scale_c=0.25) - (-0.8)) < 1e-12

    def test_null_distribution_small(self):
        rng = Rng(11)
        x, y = rng.normal(500, 2), rng.normal(500, 2)
        assert abs(mmd_imq(x, y, 1.0)) < 0.02

    def test_unbiased_null_mean(self):
        rng = Rng(13)
        trials = np.array(
            [mmd_imq(rng.normal(20, 2), rng.normal(20, 2), 1.0) for _ in range(200)]
        )
        se = trials.std(ddof=1) / np.sqrt(len(trials))
        assert abs(trials.mean()) <= 3.0 * se

    def test_preconditions(self):
        one = np.ones((1, 2))
        two = np.ones((2, 2))
        with pytest.raises(ValueError):
            mmd_imq(one, two, 1.0)
        with pytest.raises(ValueError):
            mmd_imq(two, two, 0.0)

    def test_grad_y_matches_finite_differences(self, rng):
        x, y = rng.normal(6, 3), rng.normal(5, 3)
        g = mmd_imq_grad_y(x, y, 1.0)
        h = 1e-6
        for _ in range(20):
            i = int(rng.integers(0, 5, 1)[0])
            j = int(rng.integers(0, 3, 1)[0])
            yp, ym = y.copy(), y.copy()
            yp[i, j] += h
            ym[i, j] -= h
            fd = (mmd_imq(x, yp, 1.0) - mmd_imq(x, ym, 1.0)) / (2 * h)
            assert abs(g[i, j] - fd) <= 1e-6 * max(abs(fd), 1.0)


class TestW21d:
    def test_identical(self):
        x = np.array([1.0, 2.0, 3.0])
        assert w2_1d_empirical(x, x.copy()) == 0.0

    def test_monotone_pairing(self):
        assert abs(w2_1d_empirical(np.array([0.0, 1.0]), np.array([1.0, 2.0])) - 1.0) < 1e-12
        # unsorted input is sorted internally: {0,2} vs {3,1} pairs as (0,1),(2,3)
        assert abs(w2_1d_empirical(np.array([0.0, 2.0]), np.array([3.0, 1.0])) - 1.0) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            w2_1d_empirical(np.zeros(3), np.zeros(4))

    def test_against_gaussian_closed_form(self):
        # two Gaussian samples: empirical coupling vs closed form on the fits
        rng = Rng(17)
        n = 10_000
        x = 1.5 * rng.normal(n, 1).ravel() + 0.3
        y = 0.7 * rng.normal(n, 1).ravel() - 0.5
        emp = w2_1d_empirical(x, y)
        cf = gaussian_w2(
            batch_stats(x[:, None]), batch_stats(y[:, None]), W2Variant.BURES
        )
        assert abs(emp - cf) <= 0.05 * max(emp, cf)
