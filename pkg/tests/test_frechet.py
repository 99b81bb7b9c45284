import math

import numpy as np
import pytest

from distmetric import (
    DomainError,
    EmbeddingSet,
    GaussianSummary,
    InsufficientData,
    fbd,
    fbd_from_sets,
    fit_gaussian,
    sqrtm_psd,
)


def diagonal_fbd_oracle(mu_r, diag_r, mu_g, diag_g):
    """Closed form for diagonal covariances: ||dmu||^2 + sum (sqrt(a)-sqrt(b))^2."""
    dmu = np.asarray(mu_r) - np.asarray(mu_g)
    return float(dmu @ dmu + ((np.sqrt(diag_r) - np.sqrt(diag_g)) ** 2).sum())


def eigendecomposition_oracle(r: GaussianSummary, g: GaussianSummary) -> float:
    """Brute-force evaluation through an independent eigendecomposition path."""
    dmu = r.mean - g.mean
    w, v = np.linalg.eigh(g.cov)
    root_g = v @ np.diag(np.sqrt(np.clip(w, 0, None))) @ v.T
    inner = root_g @ r.cov @ root_g
    w2 = np.linalg.eigvalsh(inner)
    trace_cross = np.sqrt(np.clip(w2, 0, None)).sum()
    return float(dmu @ dmu + np.trace(r.cov) + np.trace(g.cov) - 2 * trace_cross)


class TestFitGaussian:
    def test_hand_case(self):
        emb = EmbeddingSet(np.array([[0.0, 0.0], [2.0, 2.0]]))
        summary = fit_gaussian(emb)
        assert np.allclose(summary.mean, [1.0, 1.0])
        assert np.allclose(summary.cov, [[2.0, 2.0], [2.0, 2.0]])

    def test_biased_divisor(self):
        emb = EmbeddingSet(np.array([[0.0, 0.0], [2.0, 2.0]]))
        summary = fit_gaussian(emb, divisor="n")
        assert np.allclose(summary.cov, [[1.0, 1.0], [1.0, 1.0]])

    def test_constant_rows_zero_cov(self):
        emb = EmbeddingSet(np.tile([1.5, -2.0, 3.0], (10, 1)))
        summary = fit_gaussian(emb)
        assert np.allclose(summary.cov, 0.0, atol=1e-15)

    def test_single_row_rejected(self):
        with pytest.raises(InsufficientData):
            fit_gaussian(EmbeddingSet(np.ones((1, 3))))

    def test_ridge_adds_identity(self, make_embeddings):
        emb = make_embeddings(50, 4)
        base = fit_gaussian(emb)
        ridged = fit_gaussian(emb, ridge=0.25)
        assert np.allclose(ridged.cov - base.cov, 0.25 * np.eye(4))

    def test_bad_divisor(self, make_embeddings):
        with pytest.raises(DomainError):
            fit_gaussian(make_embeddings(5, 2), divisor="n-2")


class TestSqrtmPsd:
    def test_diagonal(self):
        assert np.allclose(sqrtm_psd(np.diag([4.0, 9.0])), np.diag([2.0, 3.0]))

    def test_identity(self):
        assert np.allclose(sqrtm_psd(np.eye(5)), np.eye(5))

    def test_defining_property_random_spd(self, rng):
        m = rng.normal(size=(8, 8))
        a = m.T @ m
        s = sqrtm_psd(a)
        assert np.allclose(s, s.T)
        rel = np.linalg.norm(s @ s - a) / np.linalg.norm(a)
        assert rel <= 1e-6

    def test_rank_deficient(self, rng):
        m = rng.normal(size=(3, 6))
        a = m.T @ m  # rank 3 of 6
        s = sqrtm_psd(a)
        rel = np.linalg.norm(s @ s - a) / np.linalg.norm(a)
        assert rel <= 1e-6

    def test_asymmetric_rejected(self):
        a = np.array([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(DomainError):
            sqrtm_psd(a)

    def test_non_square_rejected(self):
        with pytest.raises(DomainError):
            sqrtm_psd(np.ones((2, 3)))


class TestFbd:
    def test_identity_is_zero(self, rng):
        m = rng.normal(size=(6, 6))
        summary = GaussianSummary(mean=rng.normal(size=6), cov=m.T @ m, n=100)
        assert fbd(summary, summary) <= 1e-8

    def test_one_dimensional_closed_form(self):
        r = GaussianSummary(mean=np.array([0.0]), cov=np.array([[1.0]]), n=10)
        g = GaussianSummary(mean=np.array([2.0]), cov=np.array([[4.0]]), n=10)
        assert fbd(r, g) == pytest.approx(5.0, abs=1e-8)

    def test_plain_mean_norm(self):
        r = GaussianSummary(mean=np.array([0.0]), cov=np.array([[1.0]]), n=10)
        g = GaussianSummary(mean=np.array([2.0]), cov=np.array([[4.0]]), n=10)
        # ||dmu|| = 2 instead of 4, covariance term unchanged at 1
        assert fbd(r, g, mean_norm="plain") == pytest.approx(3.0, abs=1e-8)

    def test_diagonal_closed_form_seeded(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            d = int(rng.integers(2, 12))
            mu_r, mu_g = rng.normal(size=d), rng.normal(size=d)
            diag_r = rng.uniform(0.1, 4.0, size=d)
            diag_g = rng.uniform(0.1, 4.0, size=d)
            r = GaussianSummary(mean=mu_r, cov=np.diag(diag_r), n=50)
            g = GaussianSummary(mean=mu_g, cov=np.diag(diag_g), n=50)
            expected = diagonal_fbd_oracle(mu_r, diag_r, mu_g, diag_g)
            assert fbd(r, g) == pytest.approx(expected, rel=1e-8)

    def test_matches_eigendecomposition_oracle(self, rng):
        for _ in range(10):
            d = 5
            mr, mg = rng.normal(size=(d, d)), rng.normal(size=(d, d))
            r = GaussianSummary(mean=rng.normal(size=d), cov=mr.T @ mr, n=99)
            g = GaussianSummary(mean=rng.normal(size=d), cov=mg.T @ mg, n=99)
            assert fbd(r, g) == pytest.approx(eigendecomposition_oracle(r, g), rel=1e-9, abs=1e-9)

    def test_symmetry(self, rng):
        for _ in range(5):
            d = 4
            mr, mg = rng.normal(size=(d, d)), rng.normal(size=(d, d))
            r = GaussianSummary(mean=rng.normal(size=d), cov=mr.T @ mr, n=10)
            g = GaussianSummary(mean=rng.normal(size=d), cov=mg.T @ mg, n=10)
            ab, ba = fbd(r, g), fbd(g, r)
            assert abs(ab - ba) <= 1e-6 * max(1.0, ab)

    def test_dimension_mismatch(self):
        r = GaussianSummary(mean=np.zeros(2), cov=np.eye(2), n=5)
        g = GaussianSummary(mean=np.zeros(3), cov=np.eye(3), n=5)
        with pytest.raises(DomainError):
            fbd(r, g)

    def test_bad_mean_norm(self):
        r = GaussianSummary(mean=np.zeros(2), cov=np.eye(2), n=5)
        with pytest.raises(DomainError):
            fbd(r, r, mean_norm="cubed")


class TestFbdFromSets:
    def test_same_set_near_zero(self, make_embeddings):
        emb = make_embeddings(200, 12)
        assert fbd_from_sets(emb, emb) <= 1e-6

    def test_mean_shift_closed_form(self, rng):
        data = rng.normal(size=(500, 6))
        shift = np.array([1.0, -2.0, 0.5, 0.0, 3.0, -1.0])
        real = EmbeddingSet(data)
        gen = EmbeddingSet(data + shift)
        expected = float(shift @ shift)
        assert fbd_from_sets(real, gen) == pytest.approx(expected, rel=1e-6)

    def test_monte_carlo_isotropic(self):
        rng = np.random.default_rng(7)
        d = 16
        real = EmbeddingSet(rng.normal(size=(5000, d)))
        gen = EmbeddingSet(2.0 * rng.normal(size=(5000, d)))
        value = fbd_from_sets(real, gen)
        assert value == pytest.approx(float(d), rel=0.10)

    def test_monotonic_in_noise(self):
        rng = np.random.default_rng(11)
        real = EmbeddingSet(rng.normal(size=(2000, 16)))
        values = []
        for sigma in (0.1, 0.2, 0.4, 0.8):
            gen = EmbeddingSet(real.data + sigma * rng.normal(size=real.data.shape))
            values.append(fbd_from_sets(real, gen))
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_translation_covariance(self, rng):
        data = rng.normal(size=(300, 4))
        real = EmbeddingSet(data)
        shift = np.array([0.5, 0.5, -0.5, 1.0])
        base = fbd_from_sets(real, real)
        shifted = fbd_from_sets(real, EmbeddingSet(data + shift))
        assert shifted - base == pytest.approx(float(shift @ shift), rel=1e-6)

    def test_dim_mismatch(self, make_embeddings):
        with pytest.raises(DomainError):
            fbd_from_sets(make_embeddings(10, 3), make_embeddings(10, 4))

    def test_high_dim_low_n(self, rng):
        # D > N: rank-deficient covariance must still produce a clean zero.
        data = rng.normal(size=(10, 64))
        emb = EmbeddingSet(data)
        assert fbd_from_sets(emb, emb) <= 1e-6
