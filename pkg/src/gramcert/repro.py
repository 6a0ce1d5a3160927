"""Desk-scale CSV tables behind the ``repro`` CLI subcommand.

Each preset regenerates one study deterministically from the seed:

* ``3.3``   mean absolute estimation error per iteration, squaring bound
            vs power iteration (errors floored at 1e-15 relative so the
            converged tail stays flat);
* ``3.4``   signed error ratios (estimate/reference - 1) per iteration;
* ``4.10``  singular-value ratios sigma_i/sigma_1 after the three
            rescalings (spectral normalization, absolute-row-sum, depth-4
            Gram rescaling) plus sigma_1 of the rescaled matrix per depth;
* ``6.4-desk`` certification-procedure comparison on simulated
            multinomial score samples: certify rate and mean radius.
"""

import numpy as np

from . import certify as ct
from . import densenorm as dn
from . import oracle, rescale
from .errors import InvalidParameter
from .rng import SplitMix64

FIGURES = ("3.3", "3.4", "4.10", "6.4-desk")


def _rows_to_csv(header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(f"{v:.12g}" if isinstance(v, float) else str(v)
                              for v in row))
    return "\n".join(lines) + "\n"


def _error_curves(seed, n_mats=10, shape=(120, 80), iters=12):
    gen = SplitMix64(seed)
    gi_err = np.zeros(iters)
    pi_err = np.zeros(iters)
    gi_ratio = np.zeros(iters)
    pi_ratio = np.zeros(iters)
    for _ in range(n_mats):
        W = gen.normal_matrix(shape)
        ref = oracle.exact_svd_sigma1(W)
        floor = 1e-15 * ref
        for t in range(1, iters + 1):
            gv = dn.gram_iteration(W, t).value
            pv = dn.power_iteration(W, t, seed=seed).value
            gi_err[t - 1] += max(abs(gv - ref), floor)
            pi_err[t - 1] += max(abs(pv - ref), floor)
            gi_ratio[t - 1] += gv / ref - 1.0
            pi_ratio[t - 1] += pv / ref - 1.0
    return (gi_err / n_mats, pi_err / n_mats,
            gi_ratio / n_mats, pi_ratio / n_mats)


def figure_33(seed=0):
    gi_err, pi_err, _, _ = _error_curves(seed)
    rows = [(t + 1, float(gi_err[t]), float(pi_err[t]))
            for t in range(gi_err.size)]
    return _rows_to_csv(("iter", "gi_error", "pi_error"), rows)


def figure_34(seed=0):
    _, _, gi_ratio, pi_ratio = _error_curves(seed)
    rows = [(t + 1, float(gi_ratio[t]), float(pi_ratio[t]))
            for t in range(gi_ratio.size)]
    return _rows_to_csv(("iter", "gi_error_ratio", "pi_error_ratio"), rows)


def figure_410(seed=0, shape=(24, 16)):
    gen = SplitMix64(seed)
    W = gen.normal_matrix(shape)
    sigma1 = oracle.exact_svd_sigma1(W)

    def ratios(R):
        M = W * R[None, :]
        G = M.T @ M
        vals, _ = oracle.jacobi_eigh(G)
        s = np.sqrt(np.maximum(vals, 0.0))
        return s / s[0]

    sn = ratios(np.full(shape[1], 1.0 / sigma1))
    aol = ratios(rescale.spectral_rescaling(W, t=1))
    sr = ratios(rescale.spectral_rescaling(W, t=4))
    rows = [(i + 1, float(sn[i]), float(aol[i]), float(sr[i]))
            for i in range(shape[1])]
    return _rows_to_csv(("i", "sn_ratio", "aol_ratio", "sr_ratio"), rows)


def figure_64_desk(seed=0, n_inputs=60, n0=100, n=2000, c=6, sigma=0.5,
                   alpha=1e-3):
    gen = np.random.default_rng(SplitMix64(seed).uint64(1)[0])
    stats = {"cp-mono": [0, 0.0], "bonferroni": [0, 0.0], "cpm": [0, 0.0]}
    for _ in range(n_inputs):
        logits = gen.normal(0.0, 1.0, size=c)
        logits[gen.integers(c)] += 2.5
        p = np.exp(logits) / np.exp(logits).sum()
        counts0 = gen.multinomial(n0, p)
        draws = gen.choice(c, size=n, p=p)
        hard = np.zeros((n, c))
        hard[np.arange(n), draws] = 1.0
        counts = hard.sum(axis=0).astype(int)
        # mono: winner from phase one, one-sided lower bound at alpha
        i1 = int(np.argmax(counts0))
        lo = ct.ci_clopper_pearson(int(counts[i1]), n, alpha, ct.LOWER).lower
        r_mono = ct.radius_mono(lo, sigma)
        res_b = ct.certify_bonferroni(hard, sigma, alpha)
        res_c = ct.certify_cpm(counts0, hard, sigma, alpha)
        for name, val in (("cp-mono", r_mono), ("bonferroni", res_b.radius),
                          ("cpm", res_c.radius)):
            stats[name][0] += int(val > 0.0)
            stats[name][1] += val
    rows = [(name, v[0] / n_inputs, float(v[1] / n_inputs))
            for name, v in stats.items()]
    return _rows_to_csv(("method", "certify_rate", "mean_radius"), rows)


def figure_table(name, seed=0):
    if name == "3.3":
        return figure_33(seed)
    if name == "3.4":
        return figure_34(seed)
    if name == "4.10":
        return figure_410(seed)
    if name == "6.4-desk":
        return figure_64_desk(seed)
    raise InvalidParameter(f"unknown figure preset {name!r}; choose from {FIGURES}")
