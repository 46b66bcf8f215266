import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stylematrix.stylemat import (
    NotSymmetricError,
    StyleMatrix,
    apply_neutralize,
    apply_stylize,
    compute_style_matrix,
    make_neutralizer,
    make_stylizer,
    symmetric_eigen,
)


def random_psd(d, rng, rank=None):
    A = rng.normal(size=(d, rank or d))
    return A @ A.T / d


def full_rank_samples(d=16, n=1000, seed=0):
    rng = np.random.default_rng(seed)
    L = np.linalg.cholesky(random_psd(d, rng) + 0.1 * np.eye(d))
    return L @ rng.normal(size=(d, n)) + rng.normal(size=(d, 1))


class TestComputeStyleMatrix:
    def test_hand_example(self):
        sm = compute_style_matrix(np.array([[1.0, -1.0], [0.0, 0.0]]))
        np.testing.assert_array_equal(sm.mean, [0.0, 0.0])
        np.testing.assert_array_equal(sm.S, [[2.0, 0.0], [0.0, 0.0]])
        assert sm.n == 2

    def test_identical_columns(self):
        sm = compute_style_matrix(np.tile([[1.0], [2.0], [3.0]], (1, 5)))
        assert not sm.S.any()

    def test_single_sample(self):
        with pytest.raises(ValueError, match="at least 2 samples"):
            compute_style_matrix(np.ones((3, 1)))

    def test_matches_numpy_cov(self):
        Z = full_rank_samples(8, 50)
        np.testing.assert_allclose(compute_style_matrix(Z).S, np.cov(Z), atol=1e-12)

    def test_deterministic(self):
        Z = full_rank_samples(8, 200)
        a, b = compute_style_matrix(Z), compute_style_matrix(Z.copy())
        np.testing.assert_array_equal(a.S, b.S)


class TestSymmetricEigen:
    def test_diagonal(self):
        ef = symmetric_eigen(np.diag([2.0, 0.0]))
        np.testing.assert_array_equal(ef.lam, [2.0, 0.0])
        np.testing.assert_array_equal(ef.P, np.eye(2))

    def test_analytic_2x2(self):
        ef = symmetric_eigen(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(ef.lam, [3.0, 1.0], atol=1e-14)
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(np.abs(ef.P), [[s, s], [s, s]], atol=1e-14)
        np.testing.assert_allclose(ef.P[:, 0], [s, s], atol=1e-14)

    @pytest.mark.parametrize("d", [1, 3, 17, 64])
    def test_residuals_and_oracle(self, d):
        rng = np.random.default_rng(d)
        S = random_psd(d, rng)
        ef = symmetric_eigen(S)
        norm = max(1.0, np.linalg.norm(S))
        assert np.linalg.norm(ef.reconstruct() - S) / norm < 1e-10
        assert np.linalg.norm(ef.P.T @ ef.P - np.eye(d)) < 1e-10
        assert np.all(np.diff(ef.lam) <= 0)
        np.testing.assert_allclose(ef.lam, np.linalg.eigvalsh(S)[::-1], atol=1e-10 * norm)

    def test_sign_convention(self):
        ef = symmetric_eigen(random_psd(12, np.random.default_rng(1)))
        for col in ef.P.T:
            k = np.argmax(np.abs(col))
            assert col[k] > 0

    def test_rank_deficient_clamped(self):
        ef = symmetric_eigen(random_psd(10, np.random.default_rng(2), rank=3))
        assert np.all(ef.lam >= 0)
        assert np.all(ef.lam[3:] < 1e-12)

    def test_not_symmetric(self):
        with pytest.raises(NotSymmetricError):
            symmetric_eigen(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_non_square(self):
        with pytest.raises(ValueError):
            symmetric_eigen(np.ones((2, 3)))

    def test_deterministic(self):
        S = random_psd(20, np.random.default_rng(3))
        a, b = symmetric_eigen(S), symmetric_eigen(S.copy())
        np.testing.assert_array_equal(a.P, b.P)
        np.testing.assert_array_equal(a.lam, b.lam)


def _sm(S, mean=None):
    S = np.asarray(S, dtype=float)
    return StyleMatrix(S, np.zeros(len(S)) if mean is None else np.asarray(mean, float), 10)


class TestOperators:
    def test_identity_neutralizer(self):
        op = make_neutralizer(_sm(np.eye(3)))
        np.testing.assert_allclose(op.inv_sqrt_lambda, 1.0)
        Z = np.random.default_rng(0).normal(size=(3, 4))
        np.testing.assert_allclose(apply_neutralize(op, Z), Z, atol=1e-14)

    def test_clamped_inverse_sqrt(self):
        op = make_neutralizer(_sm(np.diag([4.0, 0.0])), eps=1e-4)
        np.testing.assert_allclose(op.inv_sqrt_lambda, [0.5, 100.0])

    def test_eps_must_be_positive(self):
        for make in (make_neutralizer, make_stylizer):
            with pytest.raises(ValueError, match="eps must be positive"):
                make(_sm(np.eye(2)), eps=0.0)

    def test_identity_stylizer(self):
        op = make_stylizer(_sm(np.eye(3)))
        np.testing.assert_allclose(op.sqrt_lambda, 1.0)
        Z = np.random.default_rng(1).normal(size=(3, 4))
        np.testing.assert_allclose(apply_stylize(op, Z), Z, atol=1e-14)

    def test_stylizer_sqrt(self):
        np.testing.assert_allclose(make_stylizer(_sm(np.diag([4.0, 0.0]))).sqrt_lambda, [2.0, 0.0])

    def test_single_column_and_vector(self):
        Z = full_rank_samples(4, 100)
        op = make_neutralizer(compute_style_matrix(Z))
        full = apply_neutralize(op, Z)
        np.testing.assert_allclose(apply_neutralize(op, Z[:, :1]), full[:, :1], atol=1e-13)
        np.testing.assert_allclose(apply_neutralize(op, Z[:, 0]), full[:, 0], atol=1e-13)

    def test_dimension_mismatch(self):
        op = make_neutralizer(_sm(np.eye(3)))
        with pytest.raises(ValueError):
            apply_neutralize(op, np.ones((4, 2)))
        with pytest.raises(ValueError):
            apply_stylize(make_stylizer(_sm(np.eye(3))), np.ones((2, 2)))

    def test_whitening_and_means(self):
        Z = full_rank_samples()
        W = apply_neutralize(make_neutralizer(compute_style_matrix(Z)), Z)
        assert np.linalg.norm(np.cov(W) - np.eye(16)) < 1e-8
        assert np.abs(W.mean(axis=1)).max() < 1e-10

    def test_coloring(self):
        X, Y = full_rank_samples(seed=0), full_rank_samples(seed=1)
        sy = compute_style_matrix(Y)
        W = apply_neutralize(make_neutralizer(compute_style_matrix(X)), X)
        out = apply_stylize(make_stylizer(sy), W)
        assert np.linalg.norm(np.cov(out) - sy.S) < 1e-8
        assert np.abs(out.mean(axis=1) - sy.mean).max() < 1e-10

    def test_round_trip(self):
        Z = full_rank_samples()
        sm = compute_style_matrix(Z)
        back = apply_stylize(make_stylizer(sm), apply_neutralize(make_neutralizer(sm), Z))
        assert np.linalg.norm(back - Z) / np.linalg.norm(Z) < 1e-8

    @settings(max_examples=40, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(2, 12)),
                  elements=st.floats(-1, 1, allow_nan=False)))
    def test_any_style_matrix_is_accepted(self, Z):
        sm = compute_style_matrix(Z)
        np.testing.assert_array_equal(sm.S, sm.S.T)
        assert np.all(np.isfinite(make_stylizer(sm).sqrt_lambda))
        assert np.all(make_neutralizer(sm).inv_sqrt_lambda > 0)
