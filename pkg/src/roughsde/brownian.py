"""Brownian motion on dyadic grids from a counter-based generator.

Every Gaussian draw is a pure function of ``(seed, replicate, level,
position, stream)``, so paths can be regenerated bit-for-bit, refined by
Brownian-bridge midpoints, and coupled across levels.

Seed derivation (all arithmetic mod 2**64)::

    G = 0x9E3779B97F4A7C15
    mix(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
            z ^= z >> 27; z *= 0x94D049BB133111EB
            z ^= z >> 31
    h = mix(seed + G)
    for w in (replicate, (stream << 32) | level, position):
        h = mix((h ^ w) + G)

Coordinate ``c`` of the normal attached to ``h`` uses ``a = mix(h + (2c+1) G)``
and ``b = mix(h + (2c+2) G)``, ``u1 = ((a >> 11) + 1) 2^-53``,
``u2 = (b >> 11) 2^-53`` and ``z = sqrt(-2 log u1) cos(2 pi u2)``.

``sample_bm`` draws the increment ``k`` (over ``[k 2^-K, (k+1) 2^-K]``) from
stream 0 at position ``k``; ``dyadic_refine`` draws the midpoint with new index
``2k + 1`` at level ``K + 1`` from stream 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ResourceError
from .lift import _sig_depth2
from .path_space import PointPath, SampledRoughPath, Subdivision

__all__ = [
    "mix64",
    "derive_seed",
    "normals",
    "uniforms",
    "BrownianSample",
    "sample_bm",
    "dyadic_refine",
    "linear_approx",
    "reference_lift",
    "scale_lift",
    "MAX_LEVEL",
]

MAX_LEVEL = 24
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TWO53 = 2.0**-53


def _u64(v):
    return np.asarray(v, dtype=np.uint64)


def mix64(z):
    """splitmix64 finaliser on uint64 arrays."""
    z = np.array(z, dtype=np.uint64, ndmin=1)
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= _M1
        z ^= z >> np.uint64(27)
        z *= _M2
        z ^= z >> np.uint64(31)
    return z


def derive_seed(seed, replicate, level, position, stream=0):
    """Sub-seed for one draw; every argument broadcasts."""
    with np.errstate(over="ignore"):
        h = mix64(_u64(seed) + GOLDEN)
        h = mix64((h ^ _u64(replicate)) + GOLDEN)
        tag = (_u64(stream) << np.uint64(32)) | _u64(level)
        h = mix64((h ^ tag) + GOLDEN)
        h = mix64((h ^ _u64(position)) + GOLDEN)
    return h


def _unit_pair(h, c):
    with np.errstate(over="ignore"):
        a = mix64(h + np.uint64(2 * c + 1) * GOLDEN)
        b = mix64(h + np.uint64(2 * c + 2) * GOLDEN)
    u1 = ((a >> np.uint64(11)) + np.uint64(1)).astype(float) * _TWO53
    u2 = (b >> np.uint64(11)).astype(float) * _TWO53
    return u1, u2


def normals(seeds, dim):
    """Standard normals of shape ``seeds.shape + (dim,)``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty(seeds.shape + (dim,))
    for c in range(dim):
        u1, u2 = _unit_pair(seeds, c)
        out[..., c] = np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)
    return out


def uniforms(seeds, dim):
    """Uniforms on ``[0, 1)`` of shape ``seeds.shape + (dim,)``."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty(seeds.shape + (dim,))
    for c in range(dim):
        _, out[..., c] = _unit_pair(seeds, c)
    return out


@dataclass(frozen=True)
class BrownianSample:
    """Brownian path at times ``k 2^-level``; ``values[0] = 0``."""

    seed: int
    level: int
    dim: int
    values: np.ndarray
    replicate: int = 0

    def __post_init__(self):
        self.values.flags.writeable = False

    @property
    def times(self):
        return np.arange(2**self.level + 1) / 2.0**self.level

    @property
    def mesh(self):
        return 2.0**-self.level

    @property
    def path(self):
        return PointPath(self.times, self.values)

    def at_level(self, n):
        """Values on the coarser dyadic grid of level ``n``."""
        if not 0 <= n <= self.level:
            raise DomainError(f"level {n} not in [0, {self.level}]")
        return self.values[:: 2 ** (self.level - n)]


def _check_level(K):
    if K < 0:
        raise DomainError("level must be nonnegative")
    if K > MAX_LEVEL:
        raise ResourceError(f"level {K} exceeds the memory guard {MAX_LEVEL}")


def sample_bm(seed, K, d, replicate=0):
    _check_level(K)
    if d < 1:
        raise DomainError("dimension must be positive")
    n = 2**K
    seeds = derive_seed(seed, replicate, K, np.arange(n, dtype=np.uint64), stream=0)
    steps = normals(seeds, d) * math.sqrt(2.0**-K)
    values = np.zeros((n + 1, d))
    np.cumsum(steps, axis=0, out=values[1:])
    return BrownianSample(int(seed), int(K), int(d), values, int(replicate))


def dyadic_refine(b):
    """Brownian-bridge midpoints between every pair of neighbouring samples."""
    K = b.level + 1
    _check_level(K)
    n = 2**b.level
    pos = 2 * np.arange(n, dtype=np.uint64) + np.uint64(1)
    z = normals(derive_seed(b.seed, b.replicate, K, pos, stream=1), b.dim)
    left, right = b.values[:-1], b.values[1:]
    values = np.empty((2 * n + 1, b.dim))
    values[::2] = b.values
    values[1::2] = 0.5 * (left + right) + z * math.sqrt(2.0**-b.level / 4.0)
    return BrownianSample(b.seed, K, b.dim, values, b.replicate)


def linear_approx(b, D):
    """Piecewise-linear interpolation of ``b`` through the points of ``D``.

    Times off the sample grid are snapped to the nearest grid time (ties to
    even index), after which duplicates are dropped.
    """
    times = D.times if isinstance(D, Subdivision) else np.asarray(D, dtype=float).reshape(-1)
    if times.size == 0:
        raise DomainError("empty subdivision")
    idx = np.unique(np.rint(times * 2.0**b.level).astype(np.int64))
    if idx[0] < 0 or idx[-1] > 2**b.level:
        raise DomainError("subdivision leaves [0, 1]")
    return PointPath(idx / 2.0**b.level, b.values[idx])


def reference_lift(b, p=2.5):
    """Depth-2 canonical lift of the full-resolution piecewise-linear path."""
    return _sig_depth2(Subdivision(b.times), b.values, p)


def scale_lift(alpha, x):
    """Pointwise dilation by ``sqrt(alpha)``."""
    if not alpha > 0:
        raise DomainError("scale must be positive")
    lam = math.sqrt(alpha)
    levels = [blk if k == 0 else lam**k * blk for k, blk in enumerate(x.levels)]
    # level 2 is scaled by alpha itself rather than lam**2 to keep it exact
    if x.depth >= 2:
        levels[2] = alpha * x.levels[2]
    return SampledRoughPath(x.grid, levels, x.p)
