"""Spectral-norm estimation for explicit matrices.

Power iteration gives a lower bound that converges linearly at rate
sigma2/sigma1.  Repeated Gram-matrix squaring with a Frobenius readout,

    value = ||W^{(t+1)}||_F^{2^{-t}},   W^{(1)} = W,  W^{(t+1)} = W^{(t)T} W^{(t)},

gives a deterministic upper bound after t squarings that tightens
supergeometrically (error ~ (sigma2/sigma1)^{2^t}).  Every iteration
rescales by the Frobenius norm and accumulates the log-scale so the
readout can be unscaled exactly (no overflow for any t).

``n_iter`` counts Gram multiplications throughout this module: n_iter=0
reads out ||W||_F directly, n_iter=1 reads out ||W^T W||_F^{1/2}, and so
on.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateSpectrum, InvalidParameter, NonFinite,
                     ShapeMismatch, ZeroMatrix)
from .rng import SplitMix64

UPPER = "upper"
LOWER = "lower"
EXACT = "exact"

_ZERO_TOL = 1e-300


@dataclass
class SpectralBound:
    """A one-sided estimate of sigma1 with its provenance."""

    value: float
    iterations: int
    direction: str
    log_rescale: float = 0.0


@dataclass
class SingularTriplet:
    sigma: float
    left: np.ndarray = field(repr=False)
    right: np.ndarray = field(repr=False)


def _check_matrix(W):
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] < 1 or W.shape[1] < 1:
        raise ShapeMismatch("expected a nonempty 2-D matrix")
    if not np.all(np.isfinite(W)):
        raise NonFinite("matrix has non-finite entries")
    return W


def power_iteration(W, n_iter, seed=0) -> SpectralBound:
    """Classical power iteration; the returned value never exceeds sigma1.

    The start vector is drawn componentwise standard normal from the
    splitmix stream for ``seed`` and normalized, so runs are reproducible.
    """
    W = _check_matrix(W)
    n_iter = int(n_iter)
    if n_iter < 1:
        raise InvalidParameter("n_iter must be >= 1")
    if np.linalg.norm(W) < _ZERO_TOL:
        raise ZeroMatrix("power iteration needs a nonzero matrix")
    gen = SplitMix64(seed)
    u = gen.normals(W.shape[1])
    u /= np.linalg.norm(u)
    v = np.zeros(W.shape[0])
    for _ in range(n_iter):
        wu = W @ u
        nu = np.linalg.norm(wu)
        if nu < _ZERO_TOL:
            # start vector fell in the kernel; redraw from the same stream
            u = gen.normals(W.shape[1])
            u /= np.linalg.norm(u)
            continue
        v = wu / nu
        wv = W.T @ v
        nv = np.linalg.norm(wv)
        if nv < _ZERO_TOL:
            break
        u = wv / nv
    value = float(v @ (W @ u))
    return SpectralBound(value=value, iterations=n_iter, direction=LOWER)


def _gram_sequence(W, n_iter):
    """Run n_iter rescaled Gram squarings.

    Returns (final normalized iterate, final log scale, list of normalized
    iterates A_2..A_{n_iter+1}, list of their log scales).  The true
    iterate is W^{(tau)} = A_tau * exp(rho_tau).
    """
    A = W
    rho = 0.0
    iterates = []
    scales = []
    for _ in range(n_iter):
        fro = float(np.linalg.norm(A))
        if fro < _ZERO_TOL:
            return None, None, iterates, scales
        rho = 2.0 * (rho + np.log(fro))
        A = A / fro
        A = A.T @ A
        iterates.append(A)
        scales.append(rho)
    return A, rho, iterates, scales


def gram_iteration(W, n_iter) -> SpectralBound:
    """Certified upper bound on sigma1 from n_iter Gram squarings.

    Deterministic; the value decreases (tightens) as n_iter grows and
    equals ||W^{(n_iter+1)}||_F^{2^{-n_iter}} after exact unscaling via
    the accumulated log factor.  A numerically zero operand returns an
    exact 0.
    """
    W = _check_matrix(W)
    n_iter = int(n_iter)
    if n_iter < 0:
        raise InvalidParameter("n_iter must be >= 0")
    A, rho, _, _ = _gram_sequence(W, n_iter)
    if A is None:
        return SpectralBound(value=0.0, iterations=n_iter, direction=EXACT)
    fro = float(np.linalg.norm(A))
    if fro < _ZERO_TOL:
        return SpectralBound(value=0.0, iterations=n_iter, direction=EXACT)
    expo = 2.0 ** (-n_iter)
    value = fro ** expo * float(np.exp(expo * rho))
    return SpectralBound(value=value, iterations=n_iter, direction=UPPER,
                         log_rescale=rho)


def gram_iteration_curve(W, max_iter):
    """Values of gram_iteration(W, t) for every t in 0..max_iter, one pass.

    Shares the iterate chain across depths, so the whole curve costs the
    same as the deepest single call.
    """
    W = _check_matrix(W)
    max_iter = int(max_iter)
    if max_iter < 0:
        raise InvalidParameter("max_iter must be >= 0")
    values = []
    A = W
    rho = 0.0
    for t in range(max_iter + 1):
        fro = float(np.linalg.norm(A))
        if fro < _ZERO_TOL:
            values.extend([0.0] * (max_iter + 1 - t))
            break
        expo = 2.0 ** (-t)
        values.append(fro ** expo * float(np.exp(expo * rho)))
        if t == max_iter:
            break
        rho = 2.0 * (rho + np.log(fro))
        A = A / fro
        A = A.T @ A
    return np.asarray(values)


def gram_singular_vector(W, n_iter) -> SingularTriplet:
    """Dominant singular triplet from the columns of the final Gram iterate.

    After enough squarings the iterate is numerically rank one; its
    largest-norm column is proportional to the dominant right-singular
    vector (sign ambiguous).  Requires a nondegenerate top singular value.
    """
    W = _check_matrix(W)
    n_iter = int(n_iter)
    if n_iter < 4:
        raise InvalidParameter("n_iter must be >= 4")
    A, _, _, _ = _gram_sequence(W, n_iter)
    if A is None:
        raise ZeroMatrix("matrix is numerically zero")
    norms = np.linalg.norm(A, axis=0)
    best = int(np.argmax(norms))
    if norms[best] < _ZERO_TOL:
        raise DegenerateSpectrum("all candidate columns vanished")
    right = A[:, best] / norms[best]
    wr = W @ right
    sigma = float(np.linalg.norm(wr))
    if sigma < _ZERO_TOL:
        raise DegenerateSpectrum("dominant direction maps to zero")
    return SingularTriplet(sigma=sigma, left=wr / sigma, right=right)


def squaring_eigenpair(W, n_iter):
    """Dominant eigenpair of a square matrix by repeated matrix squaring.

    Valid for diagonalizable matrices whose dominant eigenvalue is real
    and simple; complex dominant pairs keep the squared iterates from
    settling and are rejected as DegenerateSpectrum.
    """
    W = _check_matrix(W)
    if W.shape[0] != W.shape[1]:
        raise ShapeMismatch("expected a square matrix")
    n_iter = int(n_iter)
    if n_iter < 1:
        raise InvalidParameter("n_iter must be >= 1")
    B = W
    for _ in range(n_iter):
        fro = float(np.linalg.norm(B))
        if fro < _ZERO_TOL:
            raise ZeroMatrix("matrix power collapsed to zero")
        B = B / fro
        B = B @ B
    norms = np.linalg.norm(B, axis=0)
    best = int(np.argmax(norms))
    if norms[best] < _ZERO_TOL:
        raise DegenerateSpectrum("all candidate columns vanished")
    vec = B[:, best] / norms[best]
    lam = float(vec @ (W @ vec))
    resid = float(np.linalg.norm(W @ vec - lam * vec))
    scale = max(abs(lam), float(np.linalg.norm(W)))
    if resid > 1e-3 * max(scale, _ZERO_TOL):
        raise DegenerateSpectrum(
            "iterates did not settle on a real dominant eigenvector "
            f"(residual {resid:.3e})")
    return lam, vec


def gram_bound_gradient(W, n_iter) -> np.ndarray:
    """Gradient of gram_iteration's value with respect to W.

    Closed form: d||W^{(t)}||_F^{2^{1-t}} / dW
               = W (W^T W)^{2^{t-1}-1} / ||W^{(t)}||_F^{2(1-2^{-t})}
    with t = n_iter + 1.  The matrix power is assembled as the product of
    the stored (per-step renormalized) Gram iterates, with all scale
    factors folded into one exponential, so the evaluation stays finite
    for any depth.
    """
    W = _check_matrix(W)
    n_iter = int(n_iter)
    if n_iter < 0:
        raise InvalidParameter("n_iter must be >= 0")
    froW = float(np.linalg.norm(W))
    if froW < _ZERO_TOL:
        raise ZeroMatrix("gradient undefined at the zero matrix")
    A, rho, iterates, scales = _gram_sequence(W, n_iter)
    if A is None:
        raise ZeroMatrix("a Gram iterate vanished")
    # product P = prod_{tau} A_tau, renormalized with its own log accumulator
    P = np.eye(W.shape[1])
    log_p = 0.0
    for A_tau in iterates:
        P = P @ A_tau
        nrm = float(np.linalg.norm(P))
        if nrm < _ZERO_TOL:
            raise ZeroMatrix("gradient product underflowed")
        P = P / nrm
        log_p += np.log(nrm)
    log_p += float(np.sum(scales))
    fro_t = float(np.linalg.norm(A))
    expo = 2.0 ** (-n_iter)
    log_den = (2.0 - expo) * (np.log(fro_t) + (scales[-1] if scales else 0.0))
    num = W @ P
    nrm_num = float(np.linalg.norm(num))
    if nrm_num < _ZERO_TOL:
        raise ZeroMatrix("gradient numerator underflowed")
    return num / nrm_num * float(np.exp(np.log(nrm_num) + log_p - log_den))
