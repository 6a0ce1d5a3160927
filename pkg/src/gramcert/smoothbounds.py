"""Closed-form Lipschitz bounds for Gaussian-smoothed functions.

For f bounded in an interval of length r and L-Lipschitz, the Gaussian
smoothing f~ = f * N(0, sigma^2 I) satisfies

    L(f~) <= L erf( r / (2^{3/2} L sigma) ) <= min{ L, r / (sqrt(2 pi) sigma) },

with the erf bound tight (an explicit extremal profile attains it).  The
gap between the erf bound and the min envelope is maximized at
sigma* = r / (L sqrt(2 pi)), where the bound is erf(sqrt(pi)/2) * L,
about 0.79 L, i.e. roughly a 27% improvement when converted to a radius.

The quantile-composed bound: Phi^{-1} o f~ is locally Lipschitz with
constant  L [Phi_sigma(s0 + 1/L) - Phi_sigma(s0)] / phi(Phi^{-1}(p))
at any point where f~ = p, with s0 solving
    p = 1 - L * integral_{s0}^{s0+1/L} Phi_sigma(s) ds.
The solver here brackets s0 by doubling and bisects; the integral uses
adaptive Simpson quadrature at 1e-12 absolute tolerance (a closed form
exists and is used by the tests as an independent check).

Also here: the smoothed cross-entropy surrogate (an sigma^2/2 ||h||^2
penalty), its small-sigma Taylor refinement, the curvature analogue
H erf(eps / (sqrt(2) H sigma)), and the Gaussian-Poincare variance check
V[h(Z)] <= sigma^2 L(h)^2.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .errors import (DegenerateP, InvalidParameter, LabelOutOfRange,
                     RootBracketFailure, ShapeMismatch)
from .special import SQRT2PI, erf, norm_cdf, norm_pdf, norm_ppf

_ERF_SQRTPI_HALF = float(erf(math.sqrt(math.pi) / 2.0))  # ~0.7899086


@dataclass
class SmoothingContext:
    """Base Lipschitz constant, noise scale, and output range mass."""

    L: float
    sigma: float
    r: float = 1.0

    def __post_init__(self):
        if not (self.L > 0.0 and self.sigma > 0.0 and self.r > 0.0):
            raise InvalidParameter("L, sigma and r must be positive")
        if not all(map(math.isfinite, (self.L, self.sigma, self.r))):
            raise InvalidParameter("L, sigma and r must be finite")


@dataclass
class ProbitModel:
    """Linear-probit scorer x -> Phi(lambda (w.x + b))."""

    w: np.ndarray = field(repr=False)
    b: float = 0.0
    lam: float = math.sqrt(math.pi / 8.0)

    def __post_init__(self):
        self.w = np.atleast_1d(np.asarray(self.w, dtype=np.float64))
        if self.lam <= 0.0:
            raise InvalidParameter("lambda must be positive")


def lip_bound_bounded(sigma):
    """sqrt(2/pi)/sigma: smoothing bound that uses only |f| <= 1."""
    if sigma <= 0:
        raise InvalidParameter("sigma must be positive")
    return math.sqrt(2.0 / math.pi) / sigma


def lip_bound_bounded_refined(sigma, r=1.0):
    """r/(sqrt(2 pi) sigma): the factor-2 refinement of the bounded-output bound."""
    if sigma <= 0 or r <= 0:
        raise InvalidParameter("sigma and r must be positive")
    return r / (SQRT2PI * sigma)


def lip_bound_weierstrass(ctx: SmoothingContext):
    """L erf(r / (2^{3/2} L sigma)): the combined Lipschitz+smoothing bound."""
    return ctx.L * float(erf(ctx.r / (2.0 ** 1.5 * ctx.L * ctx.sigma)))


def weierstrass_gap(sigma, L, r=1.0):
    """Improvement of the erf bound over min{L, refined} at this sigma."""
    env = min(L, lip_bound_bounded_refined(sigma, r))
    return env - lip_bound_weierstrass(SmoothingContext(L=L, sigma=sigma, r=r))


def optimal_sigma(L, r=1.0):
    """(sigma*, bound at sigma*, radius gain) maximizing the smoothing gap.

    sigma* = r / (L sqrt(2 pi)); there the erf bound equals
    erf(sqrt(pi)/2) L ~ 0.79 L and the refined envelope equals L, so the
    certified radius grows by 1/erf(sqrt(pi)/2) ~ 1.27.
    """
    if L <= 0 or r <= 0:
        raise InvalidParameter("L and r must be positive")
    sigma_star = r / (L * SQRT2PI)
    return sigma_star, L * _ERF_SQRTPI_HALF, 1.0 / _ERF_SQRTPI_HALF


# ---------------------------------------------------------------------------
# closed-form smoothed probit model

def probit_smoothed(model: ProbitModel, sigma, x):
    """Exact Gaussian smoothing of the probit scorer.

    E_{delta ~ N(0, sigma^2 I)} Phi(lambda (w.(x+delta) + b))
      = Phi( lambda (w.x + b) / sqrt(1 + lambda^2 sigma^2 |w|^2) ).
    sigma = 0 recovers the unsmoothed model.
    """
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if x.shape != model.w.shape:
        raise ShapeMismatch("x must match the weight vector")
    z = model.lam * (float(model.w @ x) + model.b)
    denom = math.sqrt(1.0 + (model.lam * sigma) ** 2 * float(model.w @ model.w))
    return float(norm_cdf(z / denom))


def probit_smoothed_gradient_sup(model: ProbitModel, sigma):
    """sup_x |grad probit_smoothed| = lambda |w| phi(0) / sqrt(1 + lambda^2 sigma^2 |w|^2)."""
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    wn = float(np.linalg.norm(model.w))
    denom = math.sqrt(1.0 + (model.lam * sigma) ** 2 * wn * wn)
    return model.lam * wn * float(norm_pdf(0.0)) / denom


# ---------------------------------------------------------------------------
# quantile-composed local bound

def _simpson(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return (_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + _simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1))


def adaptive_simpson(f, a, b, tol=1e-12, max_depth=40):
    """Adaptive Simpson quadrature to absolute tolerance ``tol``."""
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _phi_sigma_cdf(s, sigma):
    # scalar hot path of the quadrature; math.erfc avoids array overhead
    return 0.5 * math.erfc(-s / (sigma * math.sqrt(2.0)))


def _mean_window_cdf(s0, L, sigma):
    """L * integral_{s0}^{s0+1/L} Phi_sigma(s) ds via adaptive Simpson."""
    return L * adaptive_simpson(lambda s: _phi_sigma_cdf(s, sigma),
                                s0, s0 + 1.0 / L, tol=1e-12)


def local_lip_quantile(p, L, sigma):
    """Local Lipschitz bound of Phi^{-1} composed with the smoothed function.

    Finds the extremal-profile offset s0 with p = 1 - L int Phi_sigma over
    [s0, s0 + 1/L] (bisection to |delta p| <= 1e-10 after bracket doubling),
    then returns L [Phi_sigma(s0 + 1/L) - Phi_sigma(s0)] / phi(Phi^{-1}(p)).
    """
    if not (L > 0 and sigma > 0):
        raise InvalidParameter("L and sigma must be positive")
    if not (1e-12 < p < 1.0 - 1e-12):
        raise DegenerateP("p must lie in (1e-12, 1 - 1e-12)")

    def g(s0):
        return 1.0 - _mean_window_cdf(s0, L, sigma)

    # g decreases from 1 to 0; bracket by doubling from the initial window
    lo, hi = -10.0 * sigma - 1.0 / L, 10.0 * sigma
    lo_lim, hi_lim = -50.0 * sigma - 1.0 / L, 50.0 * sigma
    while g(lo) < p:
        lo *= 2.0
        if lo < lo_lim:
            raise RootBracketFailure("no lower bracket for the profile offset")
    while g(hi) > p:
        hi *= 2.0
        if hi > hi_lim:
            raise RootBracketFailure("no upper bracket for the profile offset")
    s0 = 0.5 * (lo + hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val = g(mid)
        if val > p:
            lo = mid
        else:
            hi = mid
        if abs(val - p) <= 1e-10:
            s0 = mid
            break
        s0 = 0.5 * (lo + hi)
    num = L * (_phi_sigma_cdf(s0 + 1.0 / L, sigma) - _phi_sigma_cdf(s0, sigma))
    return float(num / norm_pdf(norm_ppf(p)))


def local_lip_quantile_ball(p_lo, p_hi, L, sigma, grid=257):
    """Max of the pointwise bound over a geometric-in-logit p grid."""
    if not (0.0 < p_lo <= p_hi < 1.0):
        raise InvalidParameter("need 0 < p_lo <= p_hi < 1")
    if p_lo == p_hi:
        return local_lip_quantile(p_lo, L, sigma)
    logits = np.linspace(math.log(p_lo / (1.0 - p_lo)),
                         math.log(p_hi / (1.0 - p_hi)), int(grid))
    ps = 1.0 / (1.0 + np.exp(-logits))
    ps[0], ps[-1] = p_lo, p_hi
    return max(local_lip_quantile(float(p), L, sigma) for p in ps)


# ---------------------------------------------------------------------------
# smoothed-loss surrogates

def cross_entropy(logits, label):
    logits = np.asarray(logits, dtype=np.float64)
    label = int(label)
    if not 0 <= label < logits.size:
        raise LabelOutOfRange(f"label {label} outside {logits.size} classes")
    m = float(np.max(logits))
    return float(m + np.log(np.sum(np.exp(logits - m))) - logits[label])


def smoothed_ce_bound(logits, label, h_norm_sq, sigma):
    """Upper bound on the expected cross-entropy under final-layer weight noise.

    E CE((W + Delta) h, y) <= CE(W h, y) + sigma^2/2 * |h|^2.
    """
    if h_norm_sq < 0 or sigma < 0:
        raise InvalidParameter("h_norm_sq and sigma must be nonnegative")
    return cross_entropy(logits, label) + 0.5 * sigma ** 2 * float(h_norm_sq)


def smoothed_ce_taylor(logits, label, h_norm_sq, sigma):
    """Second-order small-sigma approximation of the smoothed cross-entropy.

    CE + sigma^2/2 |h|^2 sum_i yhat_i (1 - yhat_i); not an upper bound.
    """
    logits = np.asarray(logits, dtype=np.float64)
    base = cross_entropy(logits, label)
    z = logits - np.max(logits)
    yhat = np.exp(z) / np.sum(np.exp(z))
    curv = float(np.sum(yhat * (1.0 - yhat)))
    return base + 0.5 * sigma ** 2 * float(h_norm_sq) * curv


def smoothed_curvature_bound(H, eps, sigma):
    """H erf(eps / (sqrt(2) H sigma)): curvature of the smoothed loss near a minimum."""
    if H <= 0 or sigma <= 0 or eps < 0:
        raise InvalidParameter("need H > 0, sigma > 0, eps >= 0")
    return H * float(erf(eps / (math.sqrt(2.0) * H * sigma)))


def gaussian_poincare_check(fn, L_f, x, sigma, n_samples, seed=0):
    """(empirical variance of fn(x + delta), sigma^2 L_f^2).

    The Gaussian-Poincare inequality guarantees the first never exceeds
    the second (up to sampling error) when fn is L_f-Lipschitz.
    """
    _, var = oracle.mc_expectation(fn, x, sigma, n_samples, seed)
    return var, sigma ** 2 * L_f ** 2
