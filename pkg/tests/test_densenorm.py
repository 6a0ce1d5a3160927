"""Dense spectral-norm estimators: closed forms, oracle comparisons,
invariants (upper-bound chain, monotone tightening, scale equivariance,
determinism), and the finite-difference gradient check."""

import numpy as np
import pytest

from gramcert import densenorm as dn
from gramcert import oracle as oc
from gramcert.errors import (DegenerateSpectrum, InvalidParameter, NonFinite,
                             ShapeMismatch, ZeroMatrix)


class TestPowerIteration:
    def test_identity(self):
        for seed in (0, 5):
            b = dn.power_iteration(np.eye(2), 3, seed=seed)
            assert b.value == pytest.approx(1.0, abs=1e-12)
            assert b.direction == dn.LOWER

    def test_diagonal(self):
        b = dn.power_iteration(np.diag([3.0, 1.0]), 50, seed=0)
        assert 3.0 - 1e-9 <= b.value <= 3.0

    def test_random_vs_oracle(self):
        rng = np.random.default_rng(10)
        W = rng.standard_normal((200, 100))
        ref = oc.exact_svd_sigma1(W)
        b = dn.power_iteration(W, 100, seed=1)
        assert abs(b.value - ref) / ref <= 1e-2
        assert b.value <= ref * (1.0 + 1e-9)

    def test_deterministic_given_seed(self):
        W = np.random.default_rng(11).standard_normal((30, 20))
        v1 = dn.power_iteration(W, 40, seed=7).value
        v2 = dn.power_iteration(W, 40, seed=7).value
        assert v1 == v2

    def test_errors(self):
        with pytest.raises(ZeroMatrix):
            dn.power_iteration(np.zeros((3, 3)), 5)
        with pytest.raises(NonFinite):
            dn.power_iteration(np.array([[np.nan, 0.0], [0.0, 1.0]]), 5)
        with pytest.raises(InvalidParameter):
            dn.power_iteration(np.eye(2), 0)


class TestGramIteration:
    # n_iter counts Gram squarings (the algorithm's loop count), so the
    # identity closed form is value = ||I_3||_F^(2^-n_iter) = 3^(2^-(n_iter+1))
    def test_identity_closed_forms(self):
        assert dn.gram_iteration(np.eye(3), 0).value == pytest.approx(3 ** 0.5, abs=1e-14)
        assert dn.gram_iteration(np.eye(3), 1).value == pytest.approx(3 ** 0.25, abs=1e-14)
        got = dn.gram_iteration(np.eye(3), 12).value
        assert got == pytest.approx(3.0 ** (2.0 ** -13), abs=1e-12)

    def test_random_vs_oracle_tight(self):
        rng = np.random.default_rng(0)
        W = rng.standard_normal((200, 100))
        ref = oc.exact_svd_sigma1(W)
        v = dn.gram_iteration(W, 12).value
        assert abs(v - ref) / ref <= 1e-10
        assert v >= ref * (1.0 - 1e-12)

    def test_upper_bound_chain_and_monotone(self):
        rng = np.random.default_rng(1)
        for shape in [(12, 8), (6, 17), (9, 9)]:
            W = rng.standard_normal(shape)
            ref = oc.exact_svd_sigma1(W)
            prev = np.inf
            for t in range(0, 10):
                v = dn.gram_iteration(W, t).value
                assert v >= ref * (1.0 - 1e-12)
                assert v <= prev * (1.0 + 1e-12)
                prev = v

    def test_fast_convergence_when_gap_large(self):
        # sigma2/sigma1 <= 0.9 converges far below 1e-10 by 12 squarings
        rng = np.random.default_rng(2)
        U, _ = np.linalg.qr(rng.standard_normal((30, 30)))
        V, _ = np.linalg.qr(rng.standard_normal((20, 20)))
        svals = np.concatenate([[5.0, 4.5], rng.uniform(0.1, 4.4, 18)])
        W = U[:, :20] @ np.diag(svals) @ V
        ref = oc.exact_svd_sigma1(W)
        assert abs(dn.gram_iteration(W, 12).value - ref) / ref <= 1e-10

    def test_pi_gi_sandwich(self):
        rng = np.random.default_rng(3)
        W = rng.standard_normal((80, 50))
        ref = oc.exact_svd_sigma1(W)
        lo = dn.power_iteration(W, 100, seed=0).value
        hi = dn.gram_iteration(W, 12).value
        assert lo <= ref * (1.0 + 1e-9)
        assert hi >= ref * (1.0 - 1e-9)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(4)
        W = rng.standard_normal((10, 7))
        base = dn.gram_iteration(W, 6).value
        for c in (1e-30, 1.0, 1e30):
            v = dn.gram_iteration(c * W, 6).value
            assert abs(v - c * base) <= 1e-12 * c * base

    def test_bit_identical_reruns(self):
        W = np.random.default_rng(5).standard_normal((25, 25))
        a = dn.gram_iteration(W, 8)
        b = dn.gram_iteration(W, 8)
        assert a.value == b.value and a.log_rescale == b.log_rescale

    def test_zero_matrix_exact(self):
        b = dn.gram_iteration(np.zeros((4, 4)), 5)
        assert b.value == 0.0 and b.direction == dn.EXACT

    def test_nonfinite_rejected(self):
        with pytest.raises(NonFinite):
            dn.gram_iteration(np.array([[np.inf, 0.0]]), 1)


class TestSingularVector:
    def test_diagonal(self):
        tr = dn.gram_singular_vector(np.diag([2.0, 1.0]), 6)
        assert tr.sigma == pytest.approx(2.0, abs=1e-12)
        assert abs(tr.right[0]) == pytest.approx(1.0, abs=1e-12)

    def test_permuted_diagonal(self):
        tr = dn.gram_singular_vector(np.array([[0.0, 3.0], [1.0, 0.0]]), 6)
        assert tr.sigma == pytest.approx(3.0, abs=1e-12)
        assert abs(tr.right[1]) == pytest.approx(1.0, abs=1e-12)
        assert abs(tr.left[0]) == pytest.approx(1.0, abs=1e-12)

    def test_random_vs_oracle(self):
        rng = np.random.default_rng(6)
        W = rng.standard_normal((50, 30))
        sig, vref = oc.svd_oracle_right_vector(W)
        tr = dn.gram_singular_vector(W, 12)
        assert abs(tr.sigma - sig) <= 1e-8
        assert abs(float(tr.right @ vref)) >= 1.0 - 1e-8
        assert np.linalg.norm(tr.left) == pytest.approx(1.0, abs=1e-10)
        assert np.linalg.norm(tr.right) == pytest.approx(1.0, abs=1e-10)


class TestSquaringEigenpair:
    def test_diagonal(self):
        lam, vec = dn.squaring_eigenpair(np.diag([5.0, 2.0, 1.0]), 8)
        assert lam == pytest.approx(5.0, abs=1e-12)
        assert abs(vec[0]) == pytest.approx(1.0, abs=1e-12)

    def test_fully_degenerate(self):
        lam, vec = dn.squaring_eigenpair(2.0 * np.eye(2), 8)
        assert lam == pytest.approx(2.0, abs=1e-12)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_matches_oracle(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((20, 20))
        A = (A + A.T) / 2.0
        vals, _ = oc.jacobi_eigh(A)
        dominant = vals[int(np.argmax(np.abs(vals)))]
        lam, vec = dn.squaring_eigenpair(A, 12)
        assert abs(lam - dominant) <= 1e-8 * abs(dominant)
        assert np.linalg.norm(A @ vec - lam * vec) <= 1e-8 * abs(lam)

    def test_negative_dominant(self):
        lam, _ = dn.squaring_eigenpair(np.diag([-5.0, 2.0]), 10)
        assert lam == pytest.approx(-5.0, abs=1e-10)

    def test_complex_pair_rejected(self):
        rotation = np.array([[0.0, -1.0], [1.0, 0.0]])
        with pytest.raises(DegenerateSpectrum):
            dn.squaring_eigenpair(rotation, 10)

    def test_rectangular_rejected(self):
        with pytest.raises(ShapeMismatch):
            dn.squaring_eigenpair(np.ones((2, 3)), 4)


class TestGradient:
    def test_depth_zero_is_normalized_matrix(self):
        W = np.random.default_rng(8).standard_normal((6, 4))
        g = dn.gram_bound_gradient(W, 0)
        np.testing.assert_allclose(g, W / np.linalg.norm(W), rtol=0, atol=1e-14)

    @pytest.mark.parametrize("t", [1, 3, 5])
    def test_matches_central_differences(self, t):
        rng = np.random.default_rng(40 + t)
        W = rng.standard_normal((10, 8))
        g = dn.gram_bound_gradient(W, t)
        h = 1e-6
        fd = np.zeros_like(W)
        for i in range(W.shape[0]):
            for j in range(W.shape[1]):
                Wp = W.copy()
                Wp[i, j] += h
                Wm = W.copy()
                Wm[i, j] -= h
                fd[i, j] = (dn.gram_iteration(Wp, t).value
                            - dn.gram_iteration(Wm, t).value) / (2.0 * h)
        assert np.abs(g - fd).max() <= 1e-5

    def test_converges_to_rank_one_subgradient(self):
        g = dn.gram_bound_gradient(np.diag([2.0, 1.0]), 12)
        np.testing.assert_allclose(g, np.array([[1.0, 0.0], [0.0, 0.0]]),
                                   rtol=0, atol=1e-9)

    def test_zero_matrix_rejected(self):
        with pytest.raises(ZeroMatrix):
            dn.gram_bound_gradient(np.zeros((3, 3)), 2)
