"""Deterministic, platform-independent random streams.

A splitmix-style 64-bit counter hash drives every random draw in the
package (power-iteration starts, Monte-Carlo noise).  The stream for a
given seed is reproducible bit-for-bit across platforms and numpy
versions, which the determinism contracts rely on.  Gaussian variates are
produced by the Box-Muller transform on consecutive uniforms.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_U53 = 2.0 ** -53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> _S30)) * _MIX1
    z = (z ^ (z >> _S27)) * _MIX2
    return z ^ (z >> _S31)


class SplitMix64:
    """Counter-based splitmix64 stream seeded by a caller integer."""

    def __init__(self, seed: int):
        self._base = np.uint64(np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
        self._counter = 0

    def uint64(self, n: int) -> np.ndarray:
        idx = np.arange(self._counter + 1, self._counter + n + 1, dtype=np.uint64)
        self._counter += n
        with np.errstate(over="ignore"):
            return _mix(self._base + idx * _GAMMA)

    def uniforms(self, n: int) -> np.ndarray:
        """n uniforms in [0, 1) with 53-bit resolution."""
        return (self.uint64(n) >> _S11).astype(np.float64) * _U53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive uniform pairs."""
        m = (n + 1) // 2
        # shift into (0, 1] so log() is finite
        u1 = (self.uint64(m) >> _S11).astype(np.float64) * _U53 + _U53 / 2.0
        u2 = (self.uint64(m) >> _S11).astype(np.float64) * _U53
        rad = np.sqrt(-2.0 * np.log(u1))
        ang = 2.0 * np.pi * u2
        out = np.empty(2 * m)
        out[0::2] = rad * np.cos(ang)
        out[1::2] = rad * np.sin(ang)
        return out[:n]

    def normal_matrix(self, shape) -> np.ndarray:
        return self.normals(int(np.prod(shape))).reshape(shape)
