"""Certified spectral-norm upper bounds for multichannel 2-D convolutions.

Circular padding: the operator is unitarily equivalent to a block-diagonal
matrix of n^2 Fourier blocks of shape (c_out, c_in); running the Gram
squaring on every block and taking the max Frobenius readout upper-bounds
sigma1 and converges to it.  ``n_iter`` here indexes the readout iterate
(t), i.e. t-1 squarings per block, so the cross-padding correction factor

    (1 / (1 - alpha))^{2^{-t}},   alpha = 2^t floor(k/2) / n,

applies at exactly the same t.

Zero padding: iterated filter self-correlation with maximal nontrivial
zero padding; after ``n_iter`` correlation steps the max-row-sum readout
raised to 2^{-n_iter} upper-bounds sigma1 for every input size, and the
same value also bounds the circular operator.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _accel
from ._accel import njit
from .densenorm import EXACT, UPPER, SpectralBound, gram_iteration
from .errors import (HypothesisViolated, InputTooSmall, InvalidParameter,
                     NonFinite, ShapeMismatch)
from .oracle import _check_filter

CIRC_FFT = "circ-fft"
TOEP_GRAM = "toep-gram"
CIRC_TO_ZERO = "circ-to-zero"
REDUCED_INPUT = "reduced-input"
STRIDED = "strided"

_ZERO_TOL = 1e-300
_MAX_TOEP_ITER = 8


@dataclass
class ConvBoundReport:
    """A certified convolution bound plus the correction metadata."""

    bound: SpectralBound
    method: str
    n: int | None = None
    n0: int | None = None
    t: int = 0
    alpha: float | None = None
    factor: float | None = None


@dataclass
class FourierBlockSet:
    """The n^2 per-frequency blocks of a circularly padded convolution."""

    n: int
    blocks: np.ndarray = field(repr=False)  # (n, n, c_out, c_in) complex


def fourier_blocks(K, n) -> FourierBlockSet:
    """2-D DFT of the zero-extended filter along its spatial axes.

    Block (u, v) equals sum_{k1,k2} exp(-2i pi k1 u / n) exp(-2i pi k2 v / n)
    K[:, :, k1, k2]; computed with numpy's FFT, which matches the naive
    double sum to ~1e-13.
    """
    K = _check_filter(K, require_odd=False)
    n = int(n)
    if n < K.shape[2]:
        raise InputTooSmall("n must be at least the kernel side")
    c_out, c_in, k, _ = K.shape
    padded = np.zeros((c_out, c_in, n, n))
    padded[:, :, :k, :k] = K
    blocks = np.transpose(np.fft.fft2(padded, axes=(2, 3)), (2, 3, 0, 1))
    return FourierBlockSet(n=n, blocks=np.ascontiguousarray(blocks))


def _blockwise_gram_value(blocks, t):
    """max_i ||D_i^{(t)}||_F^{2^{1-t}} over a (m, c_out, c_in) block stack."""
    B = blocks.astype(np.complex128).copy()
    m = B.shape[0]
    logs = np.zeros(m)
    alive = np.ones(m, dtype=bool)
    for _ in range(t - 1):
        fro = np.sqrt(np.sum(np.abs(B) ** 2, axis=(1, 2)))
        alive &= fro > _ZERO_TOL
        safe = np.where(alive, fro, 1.0)
        logs[alive] = 2.0 * (logs[alive] + np.log(safe[alive]))
        B = B / safe[:, None, None]
        B[~alive] = 0.0
        B = np.conj(np.swapaxes(B, 1, 2)) @ B
    expo = 2.0 ** (1 - t)
    fro = np.sqrt(np.sum(np.abs(B) ** 2, axis=(1, 2)))
    alive &= fro > _ZERO_TOL
    vals = np.zeros(m)
    vals[alive] = fro[alive] ** expo * np.exp(expo * logs[alive])
    return float(np.max(vals)) if m else 0.0


def norm2_circ(K, n, n_iter) -> ConvBoundReport:
    """Upper bound on sigma1 of the circularly padded operator at side n.

    Per-block Gram squaring with independent log rescaling; ``n_iter`` is
    the readout iterate index t (t-1 squarings), so the value is
    max_i ||D_i^{(t)}||_F^{2^{1-t}} and converges to max_i sigma1(D_i)
    = sigma1(W_circ) from above.
    """
    K = _check_filter(K, require_odd=False)
    n = int(n)
    n_iter = int(n_iter)
    if n_iter < 1:
        raise InvalidParameter("n_iter must be >= 1")
    if n < K.shape[2]:
        raise InputTooSmall("n must be at least the kernel side")
    if float(np.abs(K).max(initial=0.0)) < _ZERO_TOL:
        return ConvBoundReport(SpectralBound(0.0, n_iter, EXACT), CIRC_FFT,
                               n=n, t=n_iter)
    blocks = fourier_blocks(K, n).blocks.reshape(n * n, K.shape[0], K.shape[1])
    value = _blockwise_gram_value(blocks, n_iter)
    return ConvBoundReport(SpectralBound(value, n_iter, UPPER), CIRC_FFT,
                           n=n, t=n_iter)


# ---------------------------------------------------------------------------
# filter self-correlation (zero padding)

@njit()
def _gram_filter_step_nb(G):
    """New[i1, i2] = sum_j full cross-correlation of G[j, i1] with G[j, i2]."""
    a, b, s, _ = G.shape
    m = 2 * s - 1
    out = np.zeros((b, b, m, m))
    for i1 in range(b):
        for i2 in range(b):
            for j in range(a):
                for d1 in range(-(s - 1), s):
                    for d2 in range(-(s - 1), s):
                        acc = 0.0
                        for p in range(max(0, -d1), min(s, s - d1)):
                            for q in range(max(0, -d2), min(s, s - d2)):
                                acc += G[j, i1, p, q] * G[j, i2, p + d1, q + d2]
                        out[i1, i2, d1 + s - 1, d2 + s - 1] += acc
    return out


def _gram_filter_step_np(G):
    a, b, s, _ = G.shape
    m = 2 * s - 1
    F = np.fft.rfft2(G, s=(m, m))
    # corr(A, B)[d] = sum_p A[p] B[p+d]  ==  ifft(conj(FA) * FB), recentered
    prod = np.einsum("jiuv,jkuv->ikuv", np.conj(F), F)
    C = np.fft.irfft2(prod, s=(m, m))
    return np.roll(C, (s - 1, s - 1), axis=(2, 3))


def _gram_filter_step(G):
    # direct loops win only while the filter is small; the FFT twin is
    # exact to ~1e-13 and far faster once the side has grown
    if _accel.USE_NUMBA and G.shape[-1] <= 9:
        return _gram_filter_step_nb(G)
    return _gram_filter_step_np(G)


def norm2_toep(K, n_iter, readout="inf") -> ConvBoundReport:
    """Input-size-independent upper bound for the zero-padded operator.

    Runs ``n_iter`` filter self-correlation steps (each under maximal
    nontrivial zero padding, with Frobenius rescaling), then reads out

    * ``"inf"``:  (max_{i2} sum_{i1,d} |G[i1,i2,d]|)^{2^{-n_iter}}  (default,
      tighter in practice), or
    * ``"fro"``:  (s^2 sum |G|^2)^{2^{-(n_iter+1)}} with s the final filter
      side (the side-squared prefactor keeps this a certified bound; see
      README notes).

    The value also upper-bounds the circularly padded operator.
    """
    K = _check_filter(K, require_odd=True)
    n_iter = int(n_iter)
    if n_iter < 1:
        raise InvalidParameter("n_iter must be >= 1")
    if n_iter > _MAX_TOEP_ITER:
        raise InvalidParameter(
            f"n_iter capped at {_MAX_TOEP_ITER}: the filter side doubles per step")
    if readout not in ("inf", "fro"):
        raise InvalidParameter("readout must be 'inf' or 'fro'")
    if float(np.abs(K).max(initial=0.0)) < _ZERO_TOL:
        return ConvBoundReport(SpectralBound(0.0, n_iter, EXACT), TOEP_GRAM,
                               t=n_iter)
    G = K.astype(np.float64)
    rho = 0.0
    for _ in range(n_iter):
        fro = float(np.sqrt(np.sum(G * G)))
        if fro < _ZERO_TOL:
            return ConvBoundReport(SpectralBound(0.0, n_iter, EXACT), TOEP_GRAM,
                                   t=n_iter)
        rho = 2.0 * (rho + np.log(fro))
        G = _gram_filter_step(np.ascontiguousarray(G / fro))
    expo = 2.0 ** (-n_iter)
    if readout == "inf":
        row = float(np.max(np.sum(np.abs(G), axis=(0, 2, 3))))
        value = row ** expo * float(np.exp(expo * rho))
    else:
        side = G.shape[-1]
        total = float(np.sum(G * G)) * side * side
        value = total ** (expo / 2.0) * float(np.exp(expo * rho))
    return ConvBoundReport(SpectralBound(value, n_iter, UPPER), TOEP_GRAM,
                           t=n_iter)


# ---------------------------------------------------------------------------
# cross-padding and reduced-input corrections

def _correction(k, side, t):
    alpha = (2.0 ** t) * (k // 2) / side
    if side < 2 ** t * (k // 2) + 1:
        raise HypothesisViolated(
            f"need side >= 2^t * floor(k/2) + 1 = {2 ** t * (k // 2) + 1}, got {side}")
    factor = (1.0 / (1.0 - alpha)) ** (2.0 ** (-t))
    return alpha, factor


def circ_to_zero_bound(K, n, n_iter) -> ConvBoundReport:
    """Zero-padding bound from the circular method at the same side n.

    Multiplies norm2_circ's iterate-t readout by (1/(1-alpha))^{2^{-t}},
    alpha = 2^t floor(k/2) / n, valid whenever n >= 2^t floor(k/2) + 1.
    """
    K = _check_filter(K, require_odd=False)
    n = int(n)
    n_iter = int(n_iter)
    alpha, factor = _correction(K.shape[2], n, n_iter)
    base = norm2_circ(K, n, n_iter)
    value = factor * base.bound.value
    direction = base.bound.direction if base.bound.value == 0.0 else UPPER
    return ConvBoundReport(SpectralBound(value, n_iter, direction), CIRC_TO_ZERO,
                           n=n, t=n_iter, alpha=alpha, factor=factor)


def reduced_input_bound(K, n, n0, n_iter) -> ConvBoundReport:
    """Bound at side n from the circular method evaluated at side n0 <= n.

    Valid for both the circular and the zero-padded operator at side n,
    with alpha computed from n0.
    """
    K = _check_filter(K, require_odd=False)
    n, n0, n_iter = int(n), int(n0), int(n_iter)
    if not (K.shape[2] <= n0 <= n):
        raise HypothesisViolated("need k <= n0 <= n")
    alpha, factor = _correction(K.shape[2], n0, n_iter)
    base = norm2_circ(K, n0, n_iter)
    value = factor * base.bound.value
    direction = base.bound.direction if base.bound.value == 0.0 else UPPER
    return ConvBoundReport(SpectralBound(value, n_iter, direction), REDUCED_INPUT,
                           n=n, n0=n0, t=n_iter, alpha=alpha, factor=factor)


def strided_bound(K, n, stride, n_iter) -> ConvBoundReport:
    """Upper bound for a strided convolution.

    stride = k (non-overlapping windows): the operator's sigma1 equals the
    spectral norm of the kernel reshaped to (c_out, c_in k^2), bounded by
    the dense Gram squaring.  Any other stride: downsampling is a
    contraction, so the dense-stride-1 zero-padding bound applies.
    """
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 4 or K.shape[2] != K.shape[3]:
        raise ShapeMismatch("filter must have shape (c_out, c_in, k, k)")
    if not np.all(np.isfinite(K)):
        raise NonFinite("filter has non-finite entries")
    n, stride, n_iter = int(n), int(stride), int(n_iter)
    if stride < 1 or n % stride != 0:
        raise HypothesisViolated("stride must be positive and divide n")
    k = K.shape[2]
    if stride == k:
        flat = K.reshape(K.shape[0], -1)
        dense = gram_iteration(flat, n_iter)
        return ConvBoundReport(dense, STRIDED, n=n, t=n_iter)
    base = norm2_toep(K, n_iter)
    return ConvBoundReport(base.bound, STRIDED, n=n, t=n_iter)


def orthogonality_gap(K, n) -> float:
    """max over frequencies of ||D_{u,v}^* D_{u,v} - I||_F.

    Zero exactly when the circularly padded operator is orthogonal, in
    which case the zero-padded operator is a contraction.
    """
    K = _check_filter(K, require_odd=False)
    if K.shape[0] != K.shape[1]:
        raise ShapeMismatch("orthogonality gap needs c_in == c_out")
    blocks = fourier_blocks(K, n).blocks
    c = K.shape[0]
    gram = np.einsum("uvji,uvjk->uvik", np.conj(blocks), blocks)
    gram -= np.eye(c)[None, None]
    return float(np.sqrt(np.sum(np.abs(gram) ** 2, axis=(2, 3))).max())
