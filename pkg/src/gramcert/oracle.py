"""Brute-force ground truth for small instances.

Materializes convolution operators as explicit matrices, computes exact
largest singular values with a dependency-free Jacobi scheme, provides a
naive DFT and direct convolution loops as independent references, and a
seeded Monte-Carlo expectation estimator.

Hot kernels carry a numba twin selected via :mod:`gramcert._accel`; the
numpy fallbacks are vectorized, so both paths stay usable.
"""

from dataclasses import dataclass

import numpy as np

from . import _accel
from ._accel import njit
from .errors import (EvenKernel, InputTooSmall, InvalidParameter, NonFinite,
                     ShapeMismatch, TooFewSamples, TooLarge)
from .rng import SplitMix64

_MAX_ORACLE_SIDE = 2500
_MAX_MATERIALIZED_ENTRIES = 32_000_000

CIRCULANT = "circulant"
TOEPLITZ = "toeplitz"
STRIDED = "strided"


@dataclass
class MaterializedOperator:
    """Explicit matrix of a multichannel 2-D convolution at side n."""

    matrix: np.ndarray
    layout: str
    n: int
    c_out: int
    c_in: int
    k: int


def _check_filter(K, require_odd=True):
    K = np.asarray(K, dtype=np.float64)
    if K.ndim != 4 or K.shape[2] != K.shape[3]:
        raise ShapeMismatch("filter must have shape (c_out, c_in, k, k)")
    if not np.all(np.isfinite(K)):
        raise NonFinite("filter has non-finite entries")
    if require_odd and K.shape[2] % 2 == 0:
        raise EvenKernel("kernel side must be odd for centered layouts")
    return K


# ---------------------------------------------------------------------------
# direct convolution references ("same" size, centered cross-correlation)

@njit()
def _direct_conv_nb(K, X, circular):
    c_out, c_in, k, _ = K.shape
    n = X.shape[1]
    h = k // 2
    Y = np.zeros((c_out, n, n))
    for j in range(c_out):
        for i in range(c_in):
            for a in range(k):
                for b in range(k):
                    w = K[j, i, a, b]
                    if w == 0.0:
                        continue
                    for u in range(n):
                        uu = u + a - h
                        if circular:
                            uu %= n
                        elif uu < 0 or uu >= n:
                            continue
                        for v in range(n):
                            vv = v + b - h
                            if circular:
                                vv %= n
                            elif vv < 0 or vv >= n:
                                continue
                            Y[j, u, v] += w * X[i, uu, vv]
    return Y


def _direct_conv_np(K, X, circular):
    c_out, c_in, k, _ = K.shape
    n = X.shape[1]
    h = k // 2
    Y = np.zeros((c_out, n, n))
    for a in range(k):
        for b in range(k):
            if circular:
                shifted = np.roll(X, shift=(-(a - h), -(b - h)), axis=(1, 2))
            else:
                shifted = np.zeros_like(X)
                u0, u1 = max(0, a - h), min(n, n + a - h)
                v0, v1 = max(0, b - h), min(n, n + b - h)
                shifted[:, u0 - (a - h):u1 - (a - h), v0 - (b - h):v1 - (b - h)] = \
                    X[:, u0:u1, v0:v1]
            Y += np.einsum("ji,iuv->juv", K[:, :, a, b], shifted)
    return Y


def direct_conv2d(K, X, circular=False):
    """Reference convolution: Y[j,u,v] = sum_{i,a,b} K[j,i,a,b] X[i,u+a-h,v+b-h].

    h = k//2 (centered); out-of-range input indices wrap when ``circular``
    and read zero otherwise.  A centered delta kernel is the identity.
    """
    K = _check_filter(K)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 3 or X.shape[0] != K.shape[1]:
        raise ShapeMismatch("input must have shape (c_in, n, n)")
    if X.shape[1] != X.shape[2]:
        raise ShapeMismatch("input spatial dimensions must be square")
    if X.shape[1] < K.shape[2]:
        raise InputTooSmall("input side smaller than kernel side")
    if _accel.USE_NUMBA:
        return _direct_conv_nb(K, X, circular)
    return _direct_conv_np(K, X, circular)


# ---------------------------------------------------------------------------
# materialized operators

@njit()
def _materialize_nb(K, n, circular):
    c_out, c_in, k, _ = K.shape
    h = k // 2
    W = np.zeros((c_out * n * n, c_in * n * n))
    for j in range(c_out):
        for i in range(c_in):
            for u in range(n):
                for v in range(n):
                    row = (j * n + u) * n + v
                    for a in range(k):
                        uu = u + a - h
                        if circular:
                            uu %= n
                        elif uu < 0 or uu >= n:
                            continue
                        for b in range(k):
                            vv = v + b - h
                            if circular:
                                vv %= n
                            elif vv < 0 or vv >= n:
                                continue
                            col = (i * n + uu) * n + vv
                            W[row, col] += K[j, i, a, b]
    return W


def _materialize_np(K, n, circular):
    c_out, c_in, k, _ = K.shape
    h = k // 2
    W = np.zeros((c_out, n, n, c_in, n, n))
    u = np.arange(n)
    for a in range(k):
        for b in range(k):
            uu = u + a - h
            vv = u + b - h
            if circular:
                uu, vv = uu % n, vv % n
                uok = np.ones(n, dtype=bool)
                vok = np.ones(n, dtype=bool)
            else:
                uok = (uu >= 0) & (uu < n)
                vok = (vv >= 0) & (vv < n)
                uu = np.clip(uu, 0, n - 1)
                vv = np.clip(vv, 0, n - 1)
            sel_u = u[uok]
            sel_v = u[vok]
            # advanced indices separated by slices land in front: (U, V, c_out, c_in)
            W[:, sel_u[:, None], sel_v[None, :], :,
              uu[uok][:, None], vv[vok][None, :]] += \
                K[:, :, a, b][None, None, :, :]
    return W.reshape(c_out * n * n, c_in * n * n)


def _guard_size(K, n):
    c_out, c_in = K.shape[0], K.shape[1]
    if c_out * c_in * n ** 4 > _MAX_MATERIALIZED_ENTRIES:
        raise TooLarge("materialized operator exceeds the desk-scale guard")


def materialize_circulant(K, n) -> MaterializedOperator:
    """Block matrix of doubly circulant blocks for circular padding."""
    K = _check_filter(K, require_odd=False)
    n = int(n)
    if n < K.shape[2]:
        raise InputTooSmall("n must be at least the kernel side")
    _guard_size(K, n)
    mat = _materialize_nb(K, n, True) if _accel.USE_NUMBA else _materialize_np(K, n, True)
    return MaterializedOperator(mat, CIRCULANT, n, K.shape[0], K.shape[1], K.shape[2])


def materialize_toeplitz(K, n) -> MaterializedOperator:
    """Banded doubly block-Toeplitz matrix for same-size zero padding."""
    K = _check_filter(K, require_odd=True)
    n = int(n)
    if n < K.shape[2]:
        raise InputTooSmall("n must be at least the kernel side")
    _guard_size(K, n)
    mat = _materialize_nb(K, n, False) if _accel.USE_NUMBA else _materialize_np(K, n, False)
    return MaterializedOperator(mat, TOEPLITZ, n, K.shape[0], K.shape[1], K.shape[2])


def materialize_strided(K, n, stride) -> MaterializedOperator:
    """Strided operator: row-subsampled Toeplitz (odd k) or patch layout (k even, stride=k)."""
    K = np.asarray(K, dtype=np.float64)
    stride = int(stride)
    n = int(n)
    if stride < 1 or n % stride != 0:
        raise InvalidParameter("stride must be positive and divide n")
    k = K.shape[2]
    if k % 2 == 1:
        full = materialize_toeplitz(K, n)
        c_out = K.shape[0]
        keep = []
        for j in range(c_out):
            for u in range(0, n, stride):
                for v in range(0, n, stride):
                    keep.append((j * n + u) * n + v)
        return MaterializedOperator(full.matrix[np.asarray(keep)], STRIDED, n,
                                    K.shape[0], K.shape[1], k)
    if stride != k:
        raise EvenKernel("even kernels are only supported for stride = k")
    K = _check_filter(K, require_odd=False)
    _guard_size(K, n)
    c_out, c_in = K.shape[0], K.shape[1]
    m = n // stride
    W = np.zeros((c_out * m * m, c_in * n * n))
    for j in range(c_out):
        for i in range(c_in):
            for u in range(m):
                for v in range(m):
                    row = (j * m + u) * m + v
                    for a in range(k):
                        for b in range(k):
                            col = (i * n + u * k + a) * n + v * k + b
                            W[row, col] += K[j, i, a, b]
    return MaterializedOperator(W, STRIDED, n, c_out, c_in, k)


# ---------------------------------------------------------------------------
# naive DFT reference (exact O(n^2 k^2) double sum)

@njit()
def _naive_dft_nb(K, n):
    c_out, c_in, k, _ = K.shape
    out = np.zeros((n, n, c_out, c_in), dtype=np.complex128)
    for u in range(n):
        for v in range(n):
            for k1 in range(k):
                for k2 in range(k):
                    w = np.exp(-2j * np.pi * (k1 * u + k2 * v) / n)
                    for j in range(c_out):
                        for i in range(c_in):
                            out[u, v, j, i] += w * K[j, i, k1, k2]
    return out


def _naive_dft_np(K, n):
    k = K.shape[2]
    freq = np.arange(n)
    tap = np.arange(k)
    tw = np.exp(-2j * np.pi * np.outer(freq, tap) / n)  # (n, k)
    return np.einsum("ua,vb,jiab->uvji", tw, tw, K)


def naive_dft_blocks(K, n):
    """Per-frequency blocks D[u,v] = sum_{k1,k2} e^{-2pi i(k1 u + k2 v)/n} K[:,:,k1,k2]."""
    K = _check_filter(K, require_odd=False)
    n = int(n)
    if n < K.shape[2]:
        raise InputTooSmall("n must be at least the kernel side")
    if _accel.USE_NUMBA:
        return _naive_dft_nb(K, n)
    return _naive_dft_np(K, n)


# ---------------------------------------------------------------------------
# exact largest singular value (one-sided Jacobi on the smaller Gram)

@njit(fastmath=True)
def _jacobi_rows_nb(X, tol, max_sweeps):
    """Orthogonalize the rows of X by Jacobi rotations.

    Stops once the off-diagonal Frobenius mass of the implicit Gram X X^T,
    measured at sweep start, drops below tol times its Frobenius norm.
    Returns the vector of squared row norms.
    """
    m, n = X.shape
    a = np.empty(m)
    for sweep in range(max_sweeps):
        for i in range(m):
            s = 0.0
            for kk in range(n):
                s += X[i, kk] * X[i, kk]
            a[i] = s
        off2 = 0.0
        diag2 = 0.0
        for i in range(m):
            diag2 += a[i] * a[i]
        rotated = False
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = 0.0
                for kk in range(n):
                    apq += X[p, kk] * X[q, kk]
                off2 += 2.0 * apq * apq
                denom = np.sqrt(a[p] * a[q])
                if denom <= 0.0 or abs(apq) <= 1e-16 * denom:
                    continue
                rotated = True
                tau = (a[q] - a[p]) / (2.0 * apq)
                if tau != 0.0:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for kk in range(n):
                    xp = X[p, kk]
                    xq = X[q, kk]
                    X[p, kk] = c * xp - s * xq
                    X[q, kk] = s * xp + c * xq
                a[p] = a[p] - t * apq
                a[q] = a[q] + t * apq
        if not rotated or off2 <= tol * tol * (diag2 + off2):
            break
    return a


def _jacobi_rows_np(X, tol, max_sweeps):
    """Round-robin parallel one-sided Jacobi (vectorized numpy twin)."""
    m, n = X.shape
    mm = m + (m % 2)
    if mm != m:
        X = np.vstack([X, np.zeros((1, n))])
    perm = np.arange(mm)
    for _ in range(max_sweeps):
        a = np.einsum("ij,ij->i", X, X)
        G_off2 = 0.0
        rotated = False
        order = perm.copy()
        for _round in range(mm - 1):
            ps = order[: mm // 2]
            qs = order[mm // 2:][::-1]
            Xp = X[ps]
            Xq = X[qs]
            apq = np.einsum("ij,ij->i", Xp, Xq)
            G_off2 += 2.0 * np.sum(apq * apq)
            ap = a[ps]
            aq = a[qs]
            denom = np.sqrt(ap * aq)
            act = (denom > 0.0) & (np.abs(apq) > 1e-16 * denom)
            if act.any():
                rotated = True
                tau = np.zeros_like(apq)
                tau[act] = (aq[act] - ap[act]) / (2.0 * apq[act])
                t = np.where(tau != 0.0,
                             np.sign(tau) / (np.abs(tau) + np.sqrt(1.0 + tau * tau)),
                             1.0)
                t = np.where(act, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                X[ps] = c[:, None] * Xp - s[:, None] * Xq
                X[qs] = s[:, None] * Xp + c[:, None] * Xq
                a[ps] = ap - t * apq
                a[qs] = aq + t * apq
            # round-robin tournament rotation (fixed head)
            order = np.concatenate([order[:1], order[-1:], order[1:-1]])
        diag2 = float(np.sum(a * a))
        if not rotated or G_off2 <= tol * tol * (diag2 + G_off2):
            break
    return np.einsum("ij,ij->i", X, X)


def exact_svd_sigma1(W) -> float:
    """Largest singular value via one-sided Jacobi on the smaller Gram matrix.

    The operand is prescaled by its Frobenius norm, the smaller of W^T W /
    W W^T is formed, and its rows are orthogonalized by Jacobi rotations
    until the off-diagonal Frobenius mass of the implicit Gram falls below
    1e-14 of its Frobenius norm.
    """
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2:
        raise ShapeMismatch("expected a 2-D matrix")
    if not np.all(np.isfinite(W)):
        raise NonFinite("matrix has non-finite entries")
    if min(W.shape) > _MAX_ORACLE_SIDE:
        raise TooLarge("matrix exceeds the desk-scale oracle guard")
    # max-abs prescale: immune to Frobenius under/overflow at extreme scales
    scale = float(np.abs(W).max())
    if scale == 0.0:
        return 0.0
    A = W / scale
    G = A.T @ A if A.shape[1] <= A.shape[0] else A @ A.T
    G = np.ascontiguousarray(G)
    if _accel.USE_NUMBA:
        a = _jacobi_rows_nb(G, 1e-14, 60)
    else:
        a = _jacobi_rows_np(G, 1e-14, 60)
    # rows of G converge to eigvals(G) = sigma(A)^2, so |row| = sigma^2
    return scale * float(np.max(a)) ** 0.25


@njit(fastmath=True)
def _jacobi_sym_nb(A, V, tol, max_sweeps):
    """Cyclic two-sided Jacobi on symmetric A, accumulating rotations in V."""
    n = A.shape[0]
    for sweep in range(max_sweeps):
        off = 0.0
        total = 0.0
        for i in range(n):
            for j in range(n):
                v = A[i, j] * A[i, j]
                total += v
                if i != j:
                    off += v
        if off <= tol * tol * total:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q]) + 1e-300):
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                if tau != 0.0:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                else:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for kk in range(n):
                    akp = A[kk, p]
                    akq = A[kk, q]
                    A[kk, p] = c * akp - s * akq
                    A[kk, q] = s * akp + c * akq
                for kk in range(n):
                    apk = A[p, kk]
                    aqk = A[q, kk]
                    A[p, kk] = c * apk - s * aqk
                    A[q, kk] = s * apk + c * aqk
                for kk in range(n):
                    vkp = V[kk, p]
                    vkq = V[kk, q]
                    V[kk, p] = c * vkp - s * vkq
                    V[kk, q] = s * vkp + c * vkq
    return A, V


def _jacobi_sym_np(A, V, tol, max_sweeps):
    n = A.shape[0]
    for _ in range(max_sweeps):
        off = np.sum(A * A) - np.sum(np.diag(A) ** 2)
        if off <= tol * tol * np.sum(A * A):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q]) + 1e-300):
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0.0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp, colq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * colp - s * colq
                A[:, q] = s * colp + c * colq
                rowp, rowq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * rowp - s * rowq
                A[q, :] = s * rowp + c * rowq
                vp, vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * vp - s * vq
                V[:, q] = s * vp + c * vq
    return A, V


def jacobi_eigh(A):
    """Eigen decomposition of a symmetric matrix by cyclic Jacobi.

    Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue;
    eigenvectors are the columns of the second output.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch("expected a square matrix")
    if not np.all(np.isfinite(A)):
        raise NonFinite("matrix has non-finite entries")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, float(np.abs(A).max()))):
        raise ShapeMismatch("matrix must be symmetric")
    if A.shape[0] > _MAX_ORACLE_SIDE:
        raise TooLarge("matrix exceeds the desk-scale oracle guard")
    scale = float(np.abs(A).max())
    if scale == 0.0:
        return np.zeros(A.shape[0]), np.eye(A.shape[0])
    B = np.ascontiguousarray(A / scale)
    V = np.eye(A.shape[0])
    if _accel.USE_NUMBA:
        B, V = _jacobi_sym_nb(B, V, 1e-14, 60)
    else:
        B, V = _jacobi_sym_np(B, V, 1e-14, 60)
    vals = np.diag(B) * scale
    order = np.argsort(-vals)
    return vals[order], V[:, order]


def svd_oracle_right_vector(W):
    """(sigma1, dominant right-singular vector) via the Jacobi eigensolver."""
    W = np.asarray(W, dtype=np.float64)
    vals, vecs = jacobi_eigh(W.T @ W)
    lam = max(float(vals[0]), 0.0)
    return np.sqrt(lam), vecs[:, 0]


# ---------------------------------------------------------------------------
# Monte-Carlo expectation under Gaussian input noise

def mc_expectation(fn, x, sigma, n_samples, seed):
    """Mean and unbiased sample variance of fn(x + delta), delta ~ N(0, sigma^2 I).

    ``fn`` receives the whole perturbed batch as an (n_samples, d) array
    and must return n_samples scalars.  Noise comes from the splitmix
    stream (Box-Muller), so results are bit-reproducible given the seed.
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    n_samples = int(n_samples)
    if n_samples < 2:
        raise TooFewSamples("need at least 2 samples")
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    gen = SplitMix64(seed)
    batch = 200_000 // max(1, x.size) + 1
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        delta = gen.normal_matrix((b, x.size)) * sigma
        vals = np.asarray(fn(x[None, :] + delta), dtype=np.float64).reshape(b)
        total += float(vals.sum())
        total_sq += float((vals * vals).sum())
        done += b
    mean = total / n_samples
    var = max(0.0, (total_sq - n_samples * mean * mean) / (n_samples - 1))
    return mean, var
