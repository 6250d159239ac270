import numpy as np
import pytest

from umforge import (
    DimensionMismatchError,
    FeatureSet,
    GaussianSummary,
    InsufficientSamplesError,
    frechet_distance,
    gaussian_summary,
    sqrtm_psd,
)


def fset(matrix, scale=128, task="imagenet", dataset="d"):
    return FeatureSet(matrix=np.asarray(matrix, dtype=np.float64), scale=scale,
                      task_id=task, dataset_id=dataset)


def analytic_frechet(mu_a, cov_a, mu_b, cov_b):
    """Independent closed-form oracle via scipy's general matrix sqrt."""
    from scipy import linalg

    mu_a, mu_b = np.atleast_1d(mu_a), np.atleast_1d(mu_b)
    cov_a, cov_b = np.atleast_2d(cov_a), np.atleast_2d(cov_b)
    covmean = linalg.sqrtm(cov_a @ cov_b)
    if np.iscomplexobj(covmean):
        covmean = covmean.real
    return float(
        np.sum((mu_a - mu_b) ** 2) + np.trace(cov_a + cov_b - 2.0 * covmean)
    )


class TestGaussianSummary:
    def test_hand_computed_2d(self):
        s = gaussian_summary(fset([(0, 0), (2, 0), (0, 2), (2, 2)]))
        assert np.allclose(s.mean, [1.0, 1.0])
        assert np.allclose(s.cov, np.diag([4.0 / 3.0, 4.0 / 3.0]))
        assert s.n == 4

    def test_identical_rows_zero_cov(self):
        s = gaussian_summary(fset([(3, 1, 4)] * 5))
        assert np.allclose(s.cov, 0.0)

    def test_single_dim(self):
        s = gaussian_summary(fset([[0.0], [2.0]]))
        assert s.mean[0] == 1.0
        assert s.cov[0, 0] == 2.0  # ((0-1)^2 + (2-1)^2) / (2-1)

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamplesError):
            fset([[1.0, 2.0]])

    def test_covariance_symmetric(self):
        rng = np.random.default_rng(0)
        s = gaussian_summary(fset(rng.normal(size=(50, 6))))
        assert np.array_equal(s.cov, s.cov.T)


class TestSqrtmPsd:
    def test_square_root_squares_back(self):
        rng = np.random.default_rng(1)
        for d in (1, 2, 5, 8):
            a = rng.normal(size=(d, d))
            mat = a @ a.T
            root = sqrtm_psd(mat)
            err = np.linalg.norm(root @ root - mat) / max(np.linalg.norm(mat), 1e-300)
            assert err < 1e-9
            assert np.allclose(root, root.T)

    def test_zero_matrix(self):
        assert np.allclose(sqrtm_psd(np.zeros((3, 3))), 0.0)


class TestFrechetDistance:
    def test_identity_is_zero(self):
        rng = np.random.default_rng(2)
        s = gaussian_summary(fset(rng.normal(size=(40, 5))))
        assert frechet_distance(s, s) < 1e-9

    def test_1d_closed_form(self):
        a = GaussianSummary(mean=[0.0], cov=[[1.0]], n=10)
        b = GaussianSummary(mean=[1.0], cov=[[1.0]], n=10)
        # (mu1-mu2)^2 + (sigma1-sigma2)^2 = 1
        assert frechet_distance(a, b) == pytest.approx(1.0, abs=1e-9)

    def test_2d_diagonal_closed_form(self):
        a = GaussianSummary(mean=[0.0, 0.0], cov=np.eye(2), n=10)
        b = GaussianSummary(mean=[1.0, 1.0], cov=4.0 * np.eye(2), n=10)
        # 2 + tr(I + 4I - 2*2I) = 2 + 2 = 4
        assert frechet_distance(a, b) == pytest.approx(4.0, abs=1e-9)

    def test_matches_general_sqrtm_oracle(self):
        rng = np.random.default_rng(3)
        for d in (1, 2, 4, 8):
            qa = rng.normal(size=(d, d))
            qb = rng.normal(size=(d, d))
            a = GaussianSummary(mean=rng.normal(size=d), cov=qa @ qa.T + 0.1 * np.eye(d), n=100)
            b = GaussianSummary(mean=rng.normal(size=d), cov=qb @ qb.T + 0.1 * np.eye(d), n=100)
            expected = analytic_frechet(a.mean, a.cov, b.mean, b.cov)
            assert frechet_distance(a, b) == pytest.approx(expected, rel=1e-8, abs=1e-10)

    def test_symmetric(self):
        rng = np.random.default_rng(4)
        qa = rng.normal(size=(6, 6))
        qb = rng.normal(size=(6, 6))
        a = GaussianSummary(mean=rng.normal(size=6), cov=qa @ qa.T, n=50)
        b = GaussianSummary(mean=rng.normal(size=6), cov=qb @ qb.T, n=50)
        ab = frechet_distance(a, b)
        ba = frechet_distance(b, a)
        assert ab == pytest.approx(ba, rel=1e-8)
        assert ab >= 0.0

    def test_monte_carlo_oracle(self):
        # sampled summaries converge to the analytic value for random
        # Gaussians of dimension <= 8
        rng = np.random.default_rng(5)
        for d in (2, 5, 8):
            qa = rng.normal(size=(d, d))
            qb = rng.normal(size=(d, d))
            mu_a = rng.normal(size=d) * 2
            mu_b = rng.normal(size=d) * 2
            cov_a = qa @ qa.T + 0.5 * np.eye(d)
            cov_b = qb @ qb.T + 0.5 * np.eye(d)
            analytic = analytic_frechet(mu_a, cov_a, mu_b, cov_b)
            xa = rng.multivariate_normal(mu_a, cov_a, size=100_000)
            xb = rng.multivariate_normal(mu_b, cov_b, size=100_000)
            sampled = frechet_distance(
                gaussian_summary(fset(xa)), gaussian_summary(fset(xb))
            )
            assert sampled == pytest.approx(analytic, rel=0.05)

    def test_rank_deficient_flags_regularization(self):
        # second dimension is an exact copy of the first -> singular cov
        rows = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]])
        a = gaussian_summary(fset(rows))
        b = gaussian_summary(fset(rows + [0.5, 0.5]))
        value, details = frechet_distance(a, b, return_details=True)
        assert details.regularized
        assert details.epsilon > 0
        assert np.isfinite(value) and value >= 0

    def test_full_rank_not_flagged(self):
        rng = np.random.default_rng(6)
        a = gaussian_summary(fset(rng.normal(size=(60, 4))))
        b = gaussian_summary(fset(rng.normal(size=(60, 4))))
        _, details = frechet_distance(a, b, return_details=True)
        assert not details.regularized

    def test_dimension_mismatch(self):
        a = GaussianSummary(mean=[0.0], cov=[[1.0]], n=5)
        b = GaussianSummary(mean=[0.0, 0.0], cov=np.eye(2), n=5)
        with pytest.raises(DimensionMismatchError):
            frechet_distance(a, b)
