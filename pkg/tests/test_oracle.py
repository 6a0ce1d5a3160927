"""Brute-force oracle checks: materialized operators against direct
convolution loops, the Jacobi singular-value engine against closed forms
and numpy's LAPACK SVD, and the Monte-Carlo estimator's moments."""

import numpy as np
import pytest

from gramcert import oracle as oc
from gramcert.errors import EvenKernel, InputTooSmall, TooLarge

HILBERT5_SIGMA1 = 1.567050691098231  # frozen LAPACK cross-check


def hilbert(n):
    return np.array([[1.0 / (i + j + 1) for j in range(n)] for i in range(n)])


class TestExactSvd:
    def test_diagonal(self):
        assert oc.exact_svd_sigma1(np.diag([3.0, 1.0])) == pytest.approx(3.0, abs=1e-13)

    def test_nilpotent(self):
        assert oc.exact_svd_sigma1(np.array([[0.0, 1.0], [0.0, 0.0]])) == \
            pytest.approx(1.0, abs=1e-13)

    def test_hilbert(self):
        got = oc.exact_svd_sigma1(hilbert(5))
        assert got == pytest.approx(HILBERT5_SIGMA1, abs=1e-10)
        assert got == pytest.approx(1.5671, abs=1e-4)

    def test_zero(self):
        assert oc.exact_svd_sigma1(np.zeros((3, 4))) == 0.0

    def test_cross_check_lapack(self):
        rng = np.random.default_rng(0)
        for shape in [(30, 30), (80, 40), (40, 80), (3, 200)]:
            W = rng.standard_normal(shape)
            ref = np.linalg.svd(W, compute_uv=False)[0]
            assert abs(oc.exact_svd_sigma1(W) - ref) / ref < 1e-12

    def test_transpose_and_permutation_invariance(self):
        rng = np.random.default_rng(1)
        W = rng.standard_normal((12, 9))
        s = oc.exact_svd_sigma1(W)
        assert abs(oc.exact_svd_sigma1(W.T) - s) <= 1e-12 * s
        P = np.eye(12)[rng.permutation(12)]
        Q = np.eye(9)[rng.permutation(9)]
        assert abs(oc.exact_svd_sigma1(P @ W @ Q) - s) <= 1e-12 * s

    def test_extreme_scales(self):
        rng = np.random.default_rng(2)
        W = rng.standard_normal((10, 10))
        s = oc.exact_svd_sigma1(W)
        for c in (1e-200, 1e200):
            assert abs(oc.exact_svd_sigma1(c * W) - c * s) <= 1e-12 * c * s

    def test_size_guard(self):
        with pytest.raises(TooLarge):
            oc.exact_svd_sigma1(np.zeros((2501, 2501)))


class TestJacobiEigh:
    def test_matches_lapack(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((20, 20))
        A = (A + A.T) / 2.0
        vals, vecs = oc.jacobi_eigh(A)
        ref = np.linalg.eigvalsh(A)[::-1]
        np.testing.assert_allclose(vals, ref, rtol=0, atol=1e-12)
        np.testing.assert_allclose(vecs.T @ vecs, np.eye(20), rtol=0, atol=1e-12)
        np.testing.assert_allclose(A @ vecs, vecs @ np.diag(vals),
                                   rtol=0, atol=1e-11)


class TestMaterialization:
    @pytest.mark.parametrize("circular", [True, False])
    def test_matches_direct_convolution_grid(self, circular):
        rng = np.random.default_rng(4)
        build = oc.materialize_circulant if circular else oc.materialize_toeplitz
        for n in range(3, 13):
            for c in (1, 2, 3):
                for k in (1, 3):
                    K = rng.standard_normal((c, c, k, k))
                    M = build(K, n)
                    for _ in range(3):
                        X = rng.standard_normal((c, n, n))
                        got = M.matrix @ X.ravel()
                        want = oc.direct_conv2d(K, X, circular).ravel()
                        assert np.abs(got - want).max() < 1e-12

    def test_identity_filters(self):
        one = np.ones((1, 1, 1, 1))
        assert np.array_equal(oc.materialize_circulant(one, 2).matrix, np.eye(4))
        assert np.array_equal(oc.materialize_toeplitz(one, 3).matrix, np.eye(9))
        delta = np.zeros((1, 1, 3, 3))
        delta[0, 0, 1, 1] = 1.0
        assert np.array_equal(oc.materialize_toeplitz(delta, 5).matrix, np.eye(25))

    def test_scalar_filter_is_scaled_identity(self):
        K = np.full((1, 1, 1, 1), -2.5)
        M = oc.materialize_circulant(K, 3)
        assert np.array_equal(M.matrix, -2.5 * np.eye(9))

    def test_rejects_even_kernel_and_small_n(self):
        with pytest.raises(EvenKernel):
            oc.materialize_toeplitz(np.ones((1, 1, 2, 2)), 6)
        with pytest.raises(InputTooSmall):
            oc.materialize_circulant(np.ones((1, 1, 3, 3)), 2)

    def test_strided_subsamples_rows(self):
        rng = np.random.default_rng(5)
        K = rng.standard_normal((2, 2, 3, 3))
        full = oc.materialize_toeplitz(K, 6).matrix
        sub = oc.materialize_strided(K, 6, 2).matrix
        assert sub.shape == (2 * 9, 2 * 36)
        rows = [(j * 6 + u) * 6 + v for j in range(2)
                for u in range(0, 6, 2) for v in range(0, 6, 2)]
        assert np.array_equal(sub, full[rows])

    def test_strided_even_kernel_patches(self):
        rng = np.random.default_rng(6)
        K = rng.standard_normal((1, 1, 2, 2))
        M = oc.materialize_strided(K, 4, 2)
        # non-overlapping windows: sigma1 equals the reshaped kernel norm
        ref = np.linalg.norm(K.reshape(-1))
        assert oc.exact_svd_sigma1(M.matrix) == pytest.approx(ref, rel=1e-12)


class TestSpectrumConsistency:
    def test_circulant_sigma_equals_max_block_sigma(self):
        rng = np.random.default_rng(7)
        for n, c, k in [(4, 2, 3), (8, 3, 3), (6, 2, 1)]:
            K = rng.standard_normal((c, c, k, k))
            sigma_full = oc.exact_svd_sigma1(oc.materialize_circulant(K, n).matrix)
            blocks = oc.naive_dft_blocks(K, n)
            per_block = max(
                oc.exact_svd_sigma1(np.vstack([
                    np.hstack([blocks[u, v].real, -blocks[u, v].imag]),
                    np.hstack([blocks[u, v].imag, blocks[u, v].real])]))
                for u in range(n) for v in range(n))
            assert abs(sigma_full - per_block) <= 1e-10 * max(1.0, sigma_full)


class TestMcExpectation:
    def test_constant(self):
        mean, var = oc.mc_expectation(lambda B: np.full(B.shape[0], 3.25),
                                      np.zeros(2), 1.0, 1000, seed=0)
        assert mean == 3.25
        assert var == 0.0

    def test_linear_moments(self):
        mean, var = oc.mc_expectation(lambda B: B[:, 0], np.zeros(3), 1.0,
                                      10 ** 6, seed=1)
        assert abs(mean) < 4e-3
        assert abs(var - 1.0) < 0.01

    def test_deterministic_given_seed(self):
        args = (lambda B: B[:, 0] ** 2, np.ones(2), 0.7, 5000, 9)
        assert oc.mc_expectation(*args) == oc.mc_expectation(*args)
