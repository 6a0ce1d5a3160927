"""1-Lipschitz constructions from Gram-iterate rescalings.

The diagonal rescaling at depth t,

    R_ii = ( sum_j |W^{(t)}|_ij q_i / q_j )^{-2^{-t}},   W^{(0)} = W,

guarantees sigma1(W R) <= 1 for every t >= 1 and every positive weight
vector q, tightening toward plain spectral normalization as t grows; at
t = 1 it reproduces the absolute-row-sum (AOL) rescaling exactly.  The
t = 0 member is defined as the t = 1 formula applied to |W| (entrywise
absolute value); the literal t = 0 row-sum of W itself is not a valid
1-Lipschitz rescaling (counterexample: two identical columns), while the
|W| surrogate provably is and stays coarser than t = 1.

Also here: the affine and residual 1-Lipschitz layer forms, a per-channel
rescaling for convolution filters, and the product upper bound (PUB) over
layer stacks.
"""

from dataclasses import dataclass, field

import numpy as np

from .convnorm import _gram_filter_step, norm2_circ, norm2_toep
from .densenorm import SpectralBound, _check_matrix, gram_iteration
from .errors import (InvalidParameter, NonPositiveQ, ShapeMismatch)
from .oracle import _check_filter

_ZERO_TOL = 1e-300

DENSE = "dense"
CONV = "conv"
BATCHNORM = "batchnorm"
POOL = "pool"
ACTIVATION = "activation"
RESIDUAL = "residual"


@dataclass
class RescaleSpec:
    """Gram depth t and optional positive anisotropy weights."""

    t: int = 1
    q: np.ndarray | None = None


@dataclass
class LayerDescriptor:
    kind: str
    matrix: np.ndarray | None = None
    filt: np.ndarray | None = None
    gamma: np.ndarray | None = None
    running_var: np.ndarray | None = None
    eps: float = 1e-5
    main: list | None = None


@dataclass
class PubReport:
    per_layer: list = field(default_factory=list)  # (index, SpectralBound)
    total: float = 1.0


def _check_q(q, m):
    if q is None:
        return np.ones(m)
    q = np.asarray(q, dtype=np.float64)
    if q.shape != (m,):
        raise ShapeMismatch(f"q must have length {m}")
    if not np.all(np.isfinite(q)) or np.any(q <= 0.0):
        raise NonPositiveQ("q entries must be positive and finite")
    return q


def spectral_rescaling(W, spec: RescaleSpec | None = None, *, t=None, q=None):
    """Diagonal vector R with sigma1(W diag(R)) <= 1.

    Rows of the Gram iterate whose weighted absolute sum vanishes get
    R_ii = 0 (the matching output coordinate becomes constant).
    """
    if spec is None:
        spec = RescaleSpec(t=1 if t is None else int(t), q=q)
    W = _check_matrix(W)
    depth = int(spec.t)
    if depth < 0:
        raise InvalidParameter("t must be >= 0")
    m = W.shape[1]
    qv = _check_q(spec.q, m)
    ratio = qv[:, None] / qv[None, :]

    if depth == 0:
        A = np.abs(W)
        s = (A.T @ A * ratio).sum(axis=1)
        return np.where(s > 0.0, np.power(s, -0.5, where=s > 0.0), 0.0)

    M = W.T @ W
    log_scale = 0.0
    for _ in range(depth - 1):
        fro = float(np.linalg.norm(M))
        if fro < _ZERO_TOL:
            return np.zeros(m)
        log_scale = 2.0 * (log_scale + np.log(fro))
        M = M / fro
        M = M.T @ M
    s = (np.abs(M) * ratio).sum(axis=1)
    expo = 2.0 ** (-depth)
    out = np.zeros(m)
    pos = s > 0.0
    out[pos] = s[pos] ** (-expo) * np.exp(-expo * log_scale)
    return out


def conv_spectral_rescaling(K, t):
    """Per-input-channel rescaling for a zero-padded convolution filter.

    Runs t filter self-correlation steps and converts the per-channel
    absolute mass m_i = sum over the other indices of |G[:, i]| into
    R_i = m_i^{-2^{-t}}, so the rescaled operator has sigma1 <= 1.
    """
    K = _check_filter(K, require_odd=True)
    t = int(t)
    if t < 1:
        raise InvalidParameter("t must be >= 1 for filters")
    G = K.astype(np.float64)
    rho = 0.0
    for _ in range(t):
        fro = float(np.sqrt(np.sum(G * G)))
        if fro < _ZERO_TOL:
            return np.zeros(K.shape[1])
        rho = 2.0 * (rho + np.log(fro))
        G = _gram_filter_step(np.ascontiguousarray(G / fro))
    mass = np.sum(np.abs(G), axis=(0, 2, 3))
    expo = 2.0 ** (-t)
    out = np.zeros_like(mass)
    pos = mass > 0.0
    out[pos] = mass[pos] ** (-expo) * np.exp(-expo * rho)
    return out


def apply_affine_1lip(W, b, R, x):
    """x -> W diag(R) x + b (1-Lipschitz when R comes from spectral_rescaling)."""
    W = _check_matrix(W)
    R = np.asarray(R, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if R.shape != (W.shape[1],) or x.shape != (W.shape[1],) or b.shape != (W.shape[0],):
        raise ShapeMismatch("affine layer shapes do not conform")
    return W @ (R * x) + b


def apply_residual_1lip(W, b, R, x):
    """x -> x - 2 W diag(R)^2 relu(W^T x + b)."""
    W = _check_matrix(W)
    R = np.asarray(R, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if R.shape != (W.shape[1],) or x.shape != (W.shape[0],) or b.shape != (W.shape[1],):
        raise ShapeMismatch("residual layer shapes do not conform")
    pre = np.maximum(W.T @ x + b, 0.0)
    return x - 2.0 * (W @ (R * R * pre))


# ---------------------------------------------------------------------------
# product upper bound over a layer stack

def _layer_bound(layer: LayerDescriptor, n, t, conv_padding) -> SpectralBound:
    if layer.kind == DENSE:
        return gram_iteration(layer.matrix, t)
    if layer.kind == CONV:
        if conv_padding == "circ":
            return norm2_circ(layer.filt, n, t).bound
        return norm2_toep(layer.filt, min(t, 8)).bound
    if layer.kind == BATCHNORM:
        gamma = np.asarray(layer.gamma, dtype=np.float64)
        var = np.asarray(layer.running_var, dtype=np.float64)
        if gamma.shape != var.shape:
            raise ShapeMismatch("batchnorm gamma/var shapes differ")
        val = float(np.max(np.abs(gamma / np.sqrt(var + layer.eps))))
        return SpectralBound(val, 0, "exact")
    if layer.kind in (POOL, ACTIVATION):
        return SpectralBound(1.0, 0, "exact")
    if layer.kind == RESIDUAL:
        inner = pub(layer.main, n=n, t=t, conv_padding=conv_padding)
        return SpectralBound(1.0 + inner.total, t, "upper")
    raise InvalidParameter(f"unknown layer kind: {layer.kind!r}")


def pub(layers, n=8, t=4, conv_padding="zero") -> PubReport:
    """Product of per-layer Lipschitz bounds over a layer stack.

    Dense layers use the Gram squaring bound, convolutions the
    zero-padding bound by default (``conv_padding="circ"`` switches),
    inference-time batchnorm contributes max |gamma / sqrt(var + eps)|,
    pooling and 1-Lipschitz activations contribute 1, and a residual
    block contributes 1 + (bound of its main path).
    """
    if not layers:
        raise InvalidParameter("layer list must be nonempty")
    if conv_padding not in ("zero", "circ"):
        raise InvalidParameter("conv_padding must be 'zero' or 'circ'")
    report = PubReport()
    total = 1.0
    for idx, layer in enumerate(layers):
        bound = _layer_bound(layer, n, t, conv_padding)
        report.per_layer.append((idx, bound))
        total *= bound.value
    report.total = total
    return report


def layer_from_dict(obj) -> LayerDescriptor:
    """Build a LayerDescriptor from a JSON-style dict (see README schema)."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise InvalidParameter("each layer needs a 'kind' field")
    kind = obj["kind"]
    if kind == DENSE:
        return LayerDescriptor(DENSE, matrix=np.asarray(obj["matrix"], dtype=np.float64))
    if kind == CONV:
        return LayerDescriptor(CONV, filt=np.asarray(obj["filter"], dtype=np.float64))
    if kind == BATCHNORM:
        return LayerDescriptor(BATCHNORM,
                               gamma=np.asarray(obj["gamma"], dtype=np.float64),
                               running_var=np.asarray(obj["var"], dtype=np.float64),
                               eps=float(obj.get("eps", 1e-5)))
    if kind in (POOL, ACTIVATION):
        return LayerDescriptor(kind)
    if kind == RESIDUAL:
        return LayerDescriptor(RESIDUAL,
                               main=[layer_from_dict(o) for o in obj["main"]])
    raise InvalidParameter(f"unknown layer kind: {kind!r}")
