"""Randomized-smoothing certification from Monte-Carlo score samples.

Certified radii from Gaussian smoothing at scale sigma:

    mono:   max(0, sigma * Phi^{-1}(p1))           (trivial below p1 = 1/2)
    mult:   max(0, sigma/2 (Phi^{-1}(p1) - Phi^{-1}(p2)))
    coord:  margin / (2 L),   global: margin / (sqrt(2) L)

Risk control: per-class confidence bounds at level alpha/m (Bonferroni,
valid under dependence), with m = c classes, or m = c* buckets after
grouping the tail classes into a meta-class whose total count stays below
the runner-up (the class-partitioning procedure).  Intervals: exact
Clopper-Pearson (hardmax counts), Hoeffding, or the variance-adaptive
empirical Bernstein bound

    shift = sqrt(2 S_n log(2/a) / n) + 7 log(2/a) / (3 (n - 1)).

The variance-margin selection procedure maps raw logits through a grid of
(simplex map, temperature) candidates, picks the pair maximizing the
risk-corrected multi-class radius on a selection sample, and certifies on
a disjoint estimation sample under the chosen map only.

Tie-breaking for every argmax: lowest index wins.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (EmptyCounts, EmptyGrid, InvalidParameter, NonFinite,
                     ShapeMismatch, TooFewSamples)
from .special import beta_ppf, norm_ppf

HARDMAX = "hardmax"
SOFTMAX = "softmax"
SPARSEMAX = "sparsemax"

CLOPPER_PEARSON = "clopper-pearson"
HOEFFDING = "hoeffding"
BERNSTEIN = "bernstein"

LOWER = "lower"
UPPER = "upper"
TWO_SIDED = "two-sided"


@dataclass
class SimplexMap:
    """A scaled map of logits onto the mass-r simplex."""

    kind: str
    temperature: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if self.kind not in (HARDMAX, SOFTMAX, SPARSEMAX):
            raise InvalidParameter(f"unknown simplex map {self.kind!r}")
        if self.temperature <= 0 or self.mass <= 0:
            raise InvalidParameter("temperature and mass must be positive")
        if self.kind == HARDMAX and self.mass != 1.0:
            raise InvalidParameter("hardmax is only defined for mass 1")


@dataclass
class ConfidenceInterval:
    lower: float
    upper: float
    method: str
    alpha: float


@dataclass
class CertificationResult:
    predicted: int
    radius: float
    alpha: float
    radius_kind: str
    meta: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# radii

def radius_mono(p1, sigma):
    """sigma * Phi^{-1}(p1), clamped at zero (trivial unless p1 > 1/2)."""
    if not 0.0 <= p1 <= 1.0:
        raise InvalidParameter("p1 must lie in [0, 1]")
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    if p1 <= 0.5:
        return 0.0
    return max(0.0, sigma * float(norm_ppf(p1)))


def radius_mult(p1, p2, sigma):
    """sigma/2 (Phi^{-1}(p1) - Phi^{-1}(p2)), clamped at zero."""
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise InvalidParameter("p1 and p2 must lie in [0, 1]")
    if sigma < 0:
        raise InvalidParameter("sigma must be nonnegative")
    if p2 >= p1:
        return 0.0
    return max(0.0, 0.5 * sigma * float(norm_ppf(p1) - norm_ppf(p2)))


def radius_coord(margin, L_coord):
    """margin / (2 L) for per-coordinate Lipschitz constant L."""
    if margin < 0 or L_coord <= 0:
        raise InvalidParameter("need margin >= 0 and L > 0")
    return margin / (2.0 * L_coord)


def radius_global(margin, L_global):
    """margin / (sqrt(2) L) for a global Lipschitz constant L."""
    if margin < 0 or L_global <= 0:
        raise InvalidParameter("need margin >= 0 and L > 0")
    return margin / (math.sqrt(2.0) * L_global)


# ---------------------------------------------------------------------------
# simplex maps

def _check_scores(z):
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise NonFinite("scores contain non-finite entries")
    return z


def simplex_map(z, m: SimplexMap):
    """Map logits (1-D, or 2-D rowwise) onto the mass-r simplex.

    hardmax: one-hot at the rowwise argmax.  softmax: r softmax(z/T).
    sparsemax: Euclidean projection of z/T onto the mass-r simplex via
    the sorted-threshold rule.
    """
    z = _check_scores(z)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    if m.kind == HARDMAX:
        out = np.zeros_like(Z)
        out[np.arange(Z.shape[0]), np.argmax(Z, axis=1)] = 1.0
    elif m.kind == SOFTMAX:
        S = Z / m.temperature
        S = S - S.max(axis=1, keepdims=True)
        E = np.exp(S)
        out = m.mass * E / E.sum(axis=1, keepdims=True)
    else:
        S = Z / m.temperature
        srt = -np.sort(-S, axis=1)
        csum = np.cumsum(srt, axis=1)
        ks = np.arange(1, S.shape[1] + 1)
        feasible = m.mass + ks[None, :] * srt > csum
        kappa = feasible.shape[1] - 1 - np.argmax(feasible[:, ::-1], axis=1)
        rho = (csum[np.arange(S.shape[0]), kappa] - m.mass) / (kappa + 1.0)
        out = np.maximum(S - rho[:, None], 0.0)
    return out[0] if single else out


# ---------------------------------------------------------------------------
# confidence intervals

def _side_alpha(alpha, side):
    if side not in (LOWER, UPPER, TWO_SIDED):
        raise InvalidParameter("side must be 'lower', 'upper' or 'two-sided'")
    if not 0.0 < alpha < 1.0:
        raise InvalidParameter("alpha must lie in (0, 1)")
    return alpha / 2.0 if side == TWO_SIDED else alpha


def ci_clopper_pearson(successes, n, alpha, side=TWO_SIDED) -> ConfidenceInterval:
    """Exact binomial bounds through Beta quantiles."""
    successes = int(successes)
    n = int(n)
    if not 0 <= successes <= n or n < 1:
        raise InvalidParameter("need 0 <= successes <= n")
    a = _side_alpha(alpha, side)
    lower = 0.0
    upper = 1.0
    if side in (LOWER, TWO_SIDED) and successes > 0:
        lower = float(beta_ppf(a, successes, n - successes + 1))
    if side in (UPPER, TWO_SIDED) and successes < n:
        upper = float(beta_ppf(1.0 - a, successes + 1, n - successes))
    return ConfidenceInterval(lower, upper, CLOPPER_PEARSON, alpha)


def ci_hoeffding(mean, n, alpha, range_r=1.0, side=TWO_SIDED) -> ConfidenceInterval:
    """Distribution-free bounds: shift = r sqrt(log(1/a) / (2 n))."""
    n = int(n)
    if n < 1 or range_r <= 0:
        raise InvalidParameter("need n >= 1 and range_r > 0")
    if not 0.0 <= mean <= range_r:
        raise InvalidParameter("mean must lie in [0, range_r]")
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameter("alpha must lie in (0, 1]")
    a = alpha / 2.0 if side == TWO_SIDED else alpha
    shift = range_r * math.sqrt(math.log(1.0 / a) / (2.0 * n))
    return ConfidenceInterval(max(0.0, mean - shift), min(range_r, mean + shift),
                              HOEFFDING, alpha)


def bernstein_shift(sample_var, n, alpha):
    """Empirical Bernstein deviation for [0, 1]-valued i.i.d. samples."""
    if n < 2:
        raise TooFewSamples("Bernstein bound needs n >= 2")
    log_term = math.log(2.0 / alpha)
    return math.sqrt(2.0 * sample_var * log_term / n) \
        + 7.0 * log_term / (3.0 * (n - 1.0))


def ci_bernstein(samples, alpha, side=TWO_SIDED, range_r=1.0) -> ConfidenceInterval:
    """Variance-adaptive bounds for samples in [0, range_r].

    Internally rescales to [0, 1]; the shift is symmetric about the mean.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size < 2:
        raise TooFewSamples("need a 1-D array with at least 2 samples")
    if range_r <= 0:
        raise InvalidParameter("range_r must be positive")
    if np.any(samples < -1e-12) or np.any(samples > range_r * (1 + 1e-12)):
        raise InvalidParameter("samples must lie in [0, range_r]")
    a = _side_alpha(alpha, side)
    z = samples / range_r
    mean = float(np.mean(z))
    var = float(np.var(z, ddof=1))
    shift = range_r * bernstein_shift(var, z.size, a)
    mean_r = mean * range_r
    return ConfidenceInterval(max(0.0, mean_r - shift),
                              min(range_r, mean_r + shift), BERNSTEIN, alpha)


def _bernstein_bounds_per_class(mapped, alpha_each, range_r):
    """Vectorized per-class (lower, upper) Bernstein bounds at alpha_each."""
    n = mapped.shape[0]
    z = mapped / range_r
    means = z.mean(axis=0)
    var = z.var(axis=0, ddof=1)
    log_term = math.log(2.0 / alpha_each)
    shift = np.sqrt(2.0 * var * log_term / n) + 7.0 * log_term / (3.0 * (n - 1.0))
    lower = np.clip((means - shift) * range_r, 0.0, range_r)
    upper = np.clip((means + shift) * range_r, 0.0, range_r)
    return lower, upper


# ---------------------------------------------------------------------------
# certification procedures

def _check_samples(samples, what="samples"):
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 2 or samples.shape[1] < 2:
        raise ShapeMismatch(f"{what} must be (n >= 2, c >= 2)")
    if not np.all(np.isfinite(samples)):
        raise NonFinite(f"{what} contain non-finite entries")
    return samples


def certify_bonferroni(samples, sigma, alpha, method=CLOPPER_PEARSON,
                       range_r=1.0) -> CertificationResult:
    """Multi-class certificate with per-class bounds at level alpha/c.

    ``samples`` must already be simplex-mapped.  The winner is the class
    with the largest lower bound; the radius pits it against the largest
    upper bound among the others.
    """
    samples = _check_samples(samples)
    n, c = samples.shape
    a_each = alpha / c
    if method == CLOPPER_PEARSON:
        if not np.all((np.abs(samples) < 1e-12) | (np.abs(samples - 1.0) < 1e-12)):
            raise InvalidParameter("Clopper-Pearson needs hardmax (0/1) samples")
        counts = np.rint(samples.sum(axis=0)).astype(int)
        lower = np.array([ci_clopper_pearson(k, n, a_each, LOWER).lower
                          for k in counts])
        upper = np.array([ci_clopper_pearson(k, n, a_each, UPPER).upper
                          for k in counts])
    elif method == HOEFFDING:
        means = samples.mean(axis=0)
        shift = range_r * math.sqrt(math.log(1.0 / a_each) / (2.0 * n))
        lower = np.clip(means - shift, 0.0, range_r)
        upper = np.clip(means + shift, 0.0, range_r)
    elif method == BERNSTEIN:
        lower, upper = _bernstein_bounds_per_class(samples, a_each, range_r)
    else:
        raise InvalidParameter(f"unknown CI method {method!r}")
    i1 = int(np.argmax(lower))
    rest_upper = upper.copy()
    rest_upper[i1] = -np.inf
    i2 = int(np.argmax(rest_upper))
    radius = radius_mult(float(lower[i1] / range_r),
                         float(upper[i2] / range_r), sigma)
    return CertificationResult(predicted=i1, radius=radius, alpha=alpha,
                               radius_kind="mult",
                               meta={"method": method, "i2": i2,
                                     "lower": float(lower[i1]),
                                     "upper": float(upper[i2])})


def cpm_partition(counts):
    """Bucket the classes: winner, runner-up, escalated classes, meta-class.

    While the meta-class outweighs the runner-up count, its largest member
    is promoted to a singleton bucket.  Returns (i1, attack_buckets) where
    each bucket is a list of class indices.
    """
    counts = np.asarray(counts)
    if counts.ndim != 1 or counts.size < 2:
        raise ShapeMismatch("counts must be a 1-D vector with c >= 2")
    if counts.sum() < 1:
        raise EmptyCounts("selection counts sum to zero")
    order = np.argsort(-counts, kind="stable")
    i1, i2 = int(order[0]), int(order[1])
    meta = [int(i) for i in range(counts.size) if i not in (i1, i2)]
    attack = [[i2]]
    while meta and sum(int(counts[i]) for i in meta) > int(counts[i2]):
        k = meta[int(np.argmax([counts[i] for i in meta]))]
        meta.remove(k)
        attack.append([k])
    if meta:
        attack.append(meta)
    return i1, attack


def certify_cpm(selection_counts, samples, sigma, alpha) -> CertificationResult:
    """Two-phase class-partitioning certificate with Clopper-Pearson bounds.

    Phase one (the ``selection_counts`` vector) fixes the partition; phase
    two (disjoint hardmax ``samples``) is bucketed accordingly and bounded
    at level alpha/c*, c* = number of buckets including the winner.
    """
    samples = _check_samples(samples, "estimation samples")
    counts0 = np.asarray(selection_counts)
    if counts0.size != samples.shape[1]:
        raise ShapeMismatch("selection counts and samples disagree on c")
    i1, attack = cpm_partition(counts0)
    n = samples.shape[0]
    est_counts = np.bincount(np.argmax(samples, axis=1),
                             minlength=samples.shape[1])
    c_star = len(attack) + 1
    a_each = alpha / c_star
    lower_1 = ci_clopper_pearson(int(est_counts[i1]), n, a_each, LOWER).lower
    upper_max = 0.0
    for bucket in attack:
        k = int(sum(est_counts[i] for i in bucket))
        upper_max = max(upper_max,
                        ci_clopper_pearson(k, n, a_each, UPPER).upper)
    radius = radius_mult(lower_1, upper_max, sigma)
    return CertificationResult(predicted=i1, radius=radius, alpha=alpha,
                               radius_kind="mult",
                               meta={"c_star": c_star,
                                     "attack_buckets": attack,
                                     "lower": lower_1, "upper": upper_max})


def default_temperature_grid(lo=0.01, hi=50.0, count=50):
    """Log-spaced temperature grid used by the selection procedure."""
    return np.exp(np.linspace(math.log(lo), math.log(hi), int(count)))


def lvm_rs(samples_select, samples_estimate, sigma, alpha,
           temp_grid=None, map_kinds=(SPARSEMAX, SOFTMAX, HARDMAX),
           mass=1.0) -> CertificationResult:
    """Variance-margin selection over (simplex map, temperature) candidates.

    Selection uses only ``samples_select``: for every candidate the raw
    logits are mapped, per-class Bernstein bounds at alpha/c are formed,
    and the candidate maximizing the corrected multi-class radius wins
    (first maximum on ties, iterating maps within each temperature).
    The certificate is then recomputed from scratch on the held-out
    ``samples_estimate`` under the winning candidate only.
    """
    S0 = _check_samples(samples_select, "selection samples")
    S1 = _check_samples(samples_estimate, "estimation samples")
    if S0.shape[1] != S1.shape[1]:
        raise ShapeMismatch("sample sets disagree on the class count")
    if temp_grid is None:
        temp_grid = default_temperature_grid()
    temp_grid = np.asarray(temp_grid, dtype=np.float64)
    if temp_grid.size == 0 or not map_kinds:
        raise EmptyGrid("need at least one temperature and one map kind")
    c = S0.shape[1]
    a_each = alpha / c

    def corrected_radius(samples, m):
        mapped = simplex_map(samples, m)
        r = 1.0 if m.kind == HARDMAX else mass
        lower, upper = _bernstein_bounds_per_class(mapped, a_each, r)
        i1 = int(np.argmax(lower))
        rest = upper.copy()
        rest[i1] = -np.inf
        i2 = int(np.argmax(rest))
        rad = radius_mult(float(lower[i1] / r), float(upper[i2] / r), sigma)
        return rad, mapped, i1

    best = None
    for T in temp_grid:
        for kind in map_kinds:
            m = SimplexMap(kind, temperature=float(T),
                           mass=1.0 if kind == HARDMAX else mass)
            rad, _, _ = corrected_radius(S0, m)
            if best is None or rad > best[0]:
                best = (rad, m)
    chosen = best[1]
    final_rad, final_mapped, i1 = corrected_radius(S1, chosen)
    predicted = int(np.argmax(final_mapped.mean(axis=0)))
    return CertificationResult(predicted=predicted, radius=final_rad,
                               alpha=alpha, radius_kind="mult",
                               meta={"map": chosen.kind,
                                     "temperature": chosen.temperature,
                                     "mass": chosen.mass,
                                     "selection_radius": best[0],
                                     "certified_class": i1})
