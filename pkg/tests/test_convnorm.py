"""Convolution bounds against the materialized-operator oracle: Fourier
blocks vs the naive DFT, circular exactness, zero-padding upper bounds and
monotone tightening, cross-padding and reduced-input correction factors,
strided bounds, and the orthogonality gap."""

import numpy as np
import pytest

from gramcert import convnorm as cn
from gramcert import oracle as oc
from gramcert.errors import (HypothesisViolated, InputTooSmall,
                             InvalidParameter, ShapeMismatch)

SEVEN_SIXTH_FACTOR = 1.0048288301480616  # (7/6)^(1/32), mpmath


def toep_sigma(K, n):
    return oc.exact_svd_sigma1(oc.materialize_toeplitz(K, n).matrix)


def circ_sigma(K, n):
    return oc.exact_svd_sigma1(oc.materialize_circulant(K, n).matrix)


def _rot(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def paraunitary_filter_3x3(rng):
    """2-channel filter whose frequency response is unitary everywhere.

    Alternates constant rotations with one-sample delays on the second
    channel (two per axis), i.e. a lossless FIR cascade; spatial support
    comes out 3 x 3.
    """
    taps = {(0, 0): _rot(rng.uniform(0, 2 * np.pi))}

    def delay(taps, axis):
        out = {}
        for (a, b), M in taps.items():
            out[(a, b)] = out.get((a, b), np.zeros((2, 2)))
            out[(a, b)] = out[(a, b)] + np.diag([1.0, 0.0]) @ M * 1.0
            key = (a + (axis == 0), b + (axis == 1))
            out[key] = out.get(key, np.zeros((2, 2)))
            out[key] = out[key] + np.diag([0.0, 1.0]) @ M
        return out

    def rotate(taps):
        Q = _rot(rng.uniform(0, 2 * np.pi))
        return {key: Q @ M for key, M in taps.items()}

    for axis in (0, 0, 1, 1):
        taps = delay(taps, axis)
        taps = rotate(taps)
    K = np.zeros((2, 2, 3, 3))
    for (a, b), M in taps.items():
        K[:, :, a, b] = M
    return K


class TestFourierBlocks:
    def test_delta_filter_all_ones(self):
        K = np.ones((1, 1, 1, 1))
        blocks = cn.fourier_blocks(K, 4).blocks
        np.testing.assert_allclose(blocks, np.ones((4, 4, 1, 1)), atol=1e-14)

    def test_dc_gain_of_averaging_filter(self):
        k = 3
        K = np.full((1, 1, k, k), 1.0 / k ** 2)
        blocks = cn.fourier_blocks(K, k).blocks
        assert blocks[0, 0, 0, 0] == pytest.approx(1.0, abs=1e-14)
        assert np.abs(blocks).max() <= 1.0 + 1e-12

    def test_matches_naive_dft(self):
        rng = np.random.default_rng(0)
        K = rng.standard_normal((2, 3, 3, 3))
        got = cn.fourier_blocks(K, 8).blocks
        want = oc.naive_dft_blocks(K, 8)
        assert np.abs(got - want).max() < 1e-12

    def test_small_n_rejected(self):
        with pytest.raises(InputTooSmall):
            cn.fourier_blocks(np.ones((1, 1, 3, 3)), 2)


class TestNormCirc:
    def test_identity_filter(self):
        rep = cn.norm2_circ(np.ones((1, 1, 1, 1)), 6, 12)
        assert abs(rep.bound.value - 1.0) <= 1e-10

    def test_all_ones_dc_dominates(self):
        rep = cn.norm2_circ(np.ones((1, 1, 3, 3)), 8, 12)
        assert abs(rep.bound.value - 9.0) <= 1e-9

    def test_matches_materialized_svd(self):
        rng = np.random.default_rng(1)
        K = rng.standard_normal((3, 3, 3, 3))
        ref = circ_sigma(K, 8)
        v = cn.norm2_circ(K, 8, 12).bound.value
        assert abs(v - ref) / ref <= 1e-8
        assert v >= ref * (1.0 - 1e-12)

    def test_upper_bound_at_low_iterates(self):
        rng = np.random.default_rng(2)
        K = rng.standard_normal((2, 2, 3, 3))
        ref = circ_sigma(K, 6)
        for t in range(1, 8):
            assert cn.norm2_circ(K, 6, t).bound.value >= ref * (1.0 - 1e-12)

    def test_zero_filter_exact(self):
        rep = cn.norm2_circ(np.zeros((2, 2, 3, 3)), 8, 5)
        assert rep.bound.value == 0.0 and rep.bound.direction == "exact"


class TestNormToep:
    def test_identity_filter_every_depth(self):
        for t in range(1, 7):
            assert cn.norm2_toep(np.ones((1, 1, 1, 1)), t).bound.value == \
                pytest.approx(1.0, abs=1e-12)

    def test_all_ones_single_step(self):
        # one self-correlation of the all-ones 3x3 has absolute mass 81
        rep = cn.norm2_toep(np.ones((1, 1, 3, 3)), 1)
        assert rep.bound.value == pytest.approx(9.0, abs=1e-12)

    def test_upper_bound_and_calibrated_gap(self):
        rng = np.random.default_rng(77)
        gaps = []
        for _ in range(10):
            K = rng.standard_normal((2, 2, 3, 3))
            ref = toep_sigma(K, 10)
            v6 = cn.norm2_toep(K, 6).bound.value
            assert v6 >= ref * (1.0 - 1e-12)
            gaps.append((v6 - ref) / ref)
        # calibrated on this fixture: observed gaps land in [0.02, 0.07]
        assert max(gaps) <= 0.08

    def test_monotone_tightening(self):
        rng = np.random.default_rng(3)
        K = rng.standard_normal((2, 2, 3, 3))
        values = [cn.norm2_toep(K, t).bound.value for t in range(1, 7)]
        assert all(values[i + 1] <= values[i] * (1.0 + 1e-12) for i in range(5))

    def test_input_size_independent_and_valid_for_circular(self):
        rng = np.random.default_rng(4)
        K = rng.standard_normal((2, 2, 3, 3))
        v = cn.norm2_toep(K, 5).bound.value
        for n in (5, 8, 12):
            assert v >= toep_sigma(K, n) * (1.0 - 1e-12)
            assert v >= circ_sigma(K, n) * (1.0 - 1e-12)

    def test_frobenius_readout_is_also_a_bound(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            K = rng.standard_normal((2, 2, 3, 3))
            ref = toep_sigma(K, 9)
            vf = cn.norm2_toep(K, 4, readout="fro").bound.value
            assert vf >= ref * (1.0 - 1e-12)

    def test_depth_cap(self):
        with pytest.raises(InvalidParameter):
            cn.norm2_toep(np.ones((1, 1, 3, 3)), 9)


class TestGramFilterOrientation:
    def test_interior_band_entries_match_materialized_gram(self):
        # the one-step filter self-correlation must reproduce the banded
        # entries of W^T W away from the boundary: rows (i1, p, q) against
        # columns (i2, p + d1, q + d2) carry corr(K[:, i1], K[:, i2])[d]
        rng = np.random.default_rng(21)
        K = rng.standard_normal((2, 2, 3, 3))
        n, k = 7, 3
        W = oc.materialize_toeplitz(K, n).matrix
        G = W.T @ W
        from gramcert.convnorm import _gram_filter_step
        C = _gram_filter_step(np.ascontiguousarray(K))  # (c_in, c_in, 5, 5)
        c_in, s = 2, k
        for i1 in range(c_in):
            for i2 in range(c_in):
                for p in range(k - 1, n - k + 1):
                    for q in range(k - 1, n - k + 1):
                        for d1 in range(-(s - 1), s):
                            for d2 in range(-(s - 1), s):
                                pp, qq = p + d1, q + d2
                                if not (0 <= pp < n and 0 <= qq < n):
                                    continue
                                r1 = (i1 * n + p) * n + q
                                r2 = (i2 * n + pp) * n + qq
                                assert abs(G[r1, r2]
                                           - C[i1, i2, d1 + s - 1, d2 + s - 1]) \
                                    < 1e-12


class TestCrossPaddingFactor:
    def test_pointwise_filter_no_correction(self):
        K = np.random.default_rng(6).standard_normal((2, 2, 1, 1))
        rep = cn.circ_to_zero_bound(K, 8, 4)
        assert rep.alpha == 0.0 and rep.factor == 1.0
        assert rep.bound.value == pytest.approx(
            cn.norm2_circ(K, 8, 4).bound.value, rel=1e-14)

    def test_factor_closed_form(self):
        K = np.ones((1, 1, 3, 3))
        rep = cn.circ_to_zero_bound(K, 224, 5)
        assert rep.alpha == pytest.approx(32.0 / 224.0, abs=0)
        assert abs(rep.factor - SEVEN_SIXTH_FACTOR) <= 1e-12

    def test_factor_decreases_with_n(self):
        K = np.ones((1, 1, 3, 3))
        factors = [cn.circ_to_zero_bound(K, n, 3).factor for n in (16, 32, 64, 128)]
        assert all(f >= 1.0 for f in factors)
        assert all(factors[i + 1] < factors[i] for i in range(3))

    def test_upper_bounds_toeplitz(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            K = rng.standard_normal((2, 2, 3, 3))
            rep = cn.circ_to_zero_bound(K, 12, 3)
            assert rep.bound.value >= toep_sigma(K, 12) * (1.0 - 1e-12)

    def test_hypothesis_guard(self):
        with pytest.raises(HypothesisViolated):
            cn.circ_to_zero_bound(np.ones((1, 1, 3, 3)), 8, 3)  # need n >= 9


class TestReducedInput:
    def test_equals_cross_padding_at_full_size(self):
        K = np.random.default_rng(8).standard_normal((2, 2, 3, 3))
        a = cn.reduced_input_bound(K, 12, 12, 3)
        b = cn.circ_to_zero_bound(K, 12, 3)
        assert a.bound.value == pytest.approx(b.bound.value, rel=1e-14)
        assert a.alpha == b.alpha and a.factor == b.factor

    def test_boundary_factor(self):
        # k=3, t=1, n0=3: alpha = 2/3, factor = 3^(1/2)
        K = np.ones((1, 1, 3, 3))
        rep = cn.reduced_input_bound(K, 10, 3, 1)
        assert rep.alpha == pytest.approx(2.0 / 3.0, abs=0)
        assert rep.factor == pytest.approx(3.0 ** 0.5, abs=1e-14)

    def test_bounds_both_paddings_at_target_size(self):
        rng = np.random.default_rng(9)
        for _ in range(6):
            K = rng.standard_normal((2, 2, 3, 3))
            rep = cn.reduced_input_bound(K, 16, 9, 3)
            assert rep.bound.value >= circ_sigma(K, 16) * (1.0 - 1e-12)
            assert rep.bound.value >= toep_sigma(K, 16) * (1.0 - 1e-12)

    def test_hypothesis_guard(self):
        with pytest.raises(HypothesisViolated):
            cn.reduced_input_bound(np.ones((1, 1, 3, 3)), 16, 4, 3)


class TestStrided:
    def test_stride_one_equals_toeplitz_bound(self):
        K = np.random.default_rng(10).standard_normal((2, 2, 3, 3))
        assert cn.strided_bound(K, 8, 1, 4).bound.value == \
            cn.norm2_toep(K, 4).bound.value

    def test_nonoverlapping_delta(self):
        K = np.zeros((1, 1, 2, 2))
        K[0, 0, 0, 0] = 1.0
        rep = cn.strided_bound(K, 8, 2, 10)
        assert rep.bound.value == pytest.approx(1.0, abs=1e-10)

    def test_nonoverlapping_matches_reshaped_kernel(self):
        rng = np.random.default_rng(11)
        K = rng.standard_normal((2, 2, 2, 2))
        rep = cn.strided_bound(K, 8, 2, 12)
        ref = oc.exact_svd_sigma1(oc.materialize_strided(K, 8, 2).matrix)
        assert rep.bound.value >= ref * (1.0 - 1e-12)
        assert rep.bound.value == pytest.approx(ref, rel=1e-8)

    def test_odd_kernel_stride_bound(self):
        rng = np.random.default_rng(12)
        K = rng.standard_normal((2, 2, 3, 3))
        rep = cn.strided_bound(K, 6, 2, 5)
        ref = oc.exact_svd_sigma1(oc.materialize_strided(K, 6, 2).matrix)
        assert rep.bound.value >= ref * (1.0 - 1e-12)

    def test_stride_must_divide(self):
        with pytest.raises(HypothesisViolated):
            cn.strided_bound(np.ones((1, 1, 3, 3)), 8, 3, 4)


class TestOrthogonalityGap:
    def test_identity_filter(self):
        assert cn.orthogonality_gap(np.ones((1, 1, 1, 1)), 5) == 0.0

    def test_doubled_identity(self):
        # per 1x1 block: |4 - 1| = 3
        assert cn.orthogonality_gap(2.0 * np.ones((1, 1, 1, 1)), 5) == \
            pytest.approx(3.0, abs=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeMismatch):
            cn.orthogonality_gap(np.ones((2, 3, 1, 1)), 5)

    def test_polar_projected_filter_is_grid_orthogonal(self):
        # projecting every Fourier block to its nearest unitary makes the
        # circular operator orthogonal; the back-transform fills the whole
        # n x n support, so the zero-padding ordering does NOT follow (the
        # polynomial-sampling hypothesis needs k << n) and is not asserted
        rng = np.random.default_rng(13)
        c, k, n = 2, 3, 9
        K = rng.standard_normal((c, c, k, k))
        blocks = cn.fourier_blocks(K, n).blocks
        U, _, Vh = np.linalg.svd(blocks)
        Ko = np.fft.ifft2(np.transpose(U @ Vh, (2, 3, 0, 1)), axes=(2, 3)).real
        assert cn.orthogonality_gap(Ko, n) <= 1e-8
        assert abs(circ_sigma(Ko, n) - 1.0) <= 1e-6

    def test_paraunitary_filter_is_contractive_for_zero_padding(self):
        # a filter unitary at EVERY frequency (not just the n^2 grid
        # points): delay-rotation cascade with 3x3 spatial support; its
        # zero-padded operator is provably a contraction
        Ko = paraunitary_filter_3x3(np.random.default_rng(14))
        for n in (5, 9):
            assert cn.orthogonality_gap(Ko, n) <= 1e-12
            assert abs(circ_sigma(Ko, n) - 1.0) <= 1e-10
            assert toep_sigma(Ko, n) <= 1.0 + 1e-6
        assert cn.norm2_toep(Ko, 4).bound.value <= 1.0 + 1e-6
