"""Sampled group-valued paths, controls, and the p-variation / modulus metrics.

Both metrics are evaluated on the sample grid: suprema run over subdivisions
(or pairs) made of sample times only.  Adding sample points can only increase
them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError
from .tensor_algebra import (
    GroupElement,
    _gdist_blocks,
    _hnorm_blocks,
    _inverse_blocks,
    _mul_blocks,
    gdist,
    identity,
    inverse,
)

__all__ = [
    "Control",
    "LINEAR",
    "control_eval",
    "Subdivision",
    "PointPath",
    "SampledRoughPath",
    "constant_path",
    "increment",
    "increment_distance_table",
    "dist_pvar",
    "dist_modulus",
    "modulus_norm",
    "dist_holder_points",
    "stride_indices",
    "auto_stride",
]

MAX_PAIR_GRID = 4096


@dataclass(frozen=True)
class Control:
    """A control ``omega(s, t)``; only the linear control ``t - s`` is provided."""

    kind: str = "linear"

    def __post_init__(self):
        if self.kind != "linear":
            raise DomainError(f"unsupported control kind {self.kind!r}")

    def __call__(self, s, t):
        return control_eval(self, s, t)


LINEAR = Control()


def control_eval(omega, s, t):
    if s > t:
        raise DomainError(f"control needs s <= t, got s={s}, t={t}")
    if omega.kind == "linear":
        return float(t) - float(s)
    raise DomainError(f"unsupported control kind {omega.kind!r}")


def _as_times(times):
    times = np.array(times, dtype=float).reshape(-1)
    if times.size == 0:
        raise DomainError("empty time grid")
    if not np.all(np.isfinite(times)):
        raise DomainError("time grid has non-finite entries")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise DomainError("time grid must be strictly increasing")
    times.flags.writeable = False
    return times


class Subdivision:
    """Strictly increasing times in [0, 1] that include both endpoints."""

    __slots__ = ("times",)

    def __init__(self, times):
        times = _as_times(times)
        if times[0] != 0.0 or times[-1] != 1.0 or times.size < 2:
            raise DomainError("a subdivision of [0, 1] must contain 0 and 1")
        object.__setattr__(self, "times", times)

    def __setattr__(self, name, value):
        raise AttributeError("Subdivision is immutable")

    @classmethod
    def uniform(cls, m):
        """``m`` equal steps."""
        if m < 1:
            raise DomainError("need at least one step")
        return cls(np.arange(m + 1) / m)

    @classmethod
    def dyadic(cls, n):
        return cls(np.arange(2**n + 1) / 2.0**n)

    @property
    def mesh(self):
        return float(np.max(np.diff(self.times)))

    def __len__(self):
        return self.times.size

    def __eq__(self, other):
        return isinstance(other, Subdivision) and np.array_equal(self.times, other.times)

    def __hash__(self):
        return hash(self.times.tobytes())

    def __repr__(self):
        return f"Subdivision(n={self.times.size}, mesh={self.mesh:.3g})"


class PointPath:
    """A piecewise-linear ``R^d`` path through ``points[i]`` at ``times[i]``."""

    __slots__ = ("times", "points")

    def __init__(self, times, points):
        times = _as_times(times.times if isinstance(times, Subdivision) else times)
        points = np.array(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] != times.size:
            raise ShapeError(f"points of shape {points.shape} do not match {times.size} times")
        if not np.all(np.isfinite(points)):
            raise DomainError("path has non-finite coordinates")
        points.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "points", points)

    def __setattr__(self, name, value):
        raise AttributeError("PointPath is immutable")

    @property
    def dim(self):
        return self.points.shape[1]

    def __len__(self):
        return self.times.size

    def __call__(self, t):
        """Linear interpolation at time(s) ``t``; returns ``(..., d)``."""
        t = np.asarray(t, dtype=float)
        cols = [np.interp(t, self.times, self.points[:, k]) for k in range(self.dim)]
        return np.stack(cols, axis=-1)

    def resample(self, times):
        """The same path sampled on ``times`` (exact if ``times`` contains every breakpoint)."""
        times = _as_times(times.times if isinstance(times, Subdivision) else times)
        return PointPath(times, self(times))

    def on_refinement(self, times):
        """Resample on ``times`` after checking it contains every breakpoint."""
        times = _as_times(times.times if isinstance(times, Subdivision) else times)
        if not np.all(np.isin(self.times, times)):
            raise ShapeError("grid does not contain every breakpoint of the path")
        return self.resample(times)

    def __add__(self, other):
        if not np.array_equal(self.times, other.times):
            raise ShapeError("paths live on different grids")
        return PointPath(self.times, self.points + other.points)

    def scaled(self, c):
        return PointPath(self.times, c * self.points)

    def __repr__(self):
        return f"PointPath(n={self.times.size}, dim={self.dim})"


class SampledRoughPath:
    """A ``G^N(R^d)``-valued path sampled on a subdivision of [0, 1].

    ``levels[k]`` has shape ``(M, d**k)`` and holds block ``k`` of the path
    value at each sample time.  Increments are ``x_s^{-1} ⊗ x_t``.
    """

    __slots__ = ("grid", "levels", "dim", "depth", "p")

    def __init__(self, times, levels, p=2.5):
        grid = times if isinstance(times, Subdivision) else Subdivision(times)
        M = len(grid)
        levels = [np.array(blk, dtype=float) for blk in levels]
        if len(levels) < 2:
            raise ShapeError("a rough path needs at least levels 0 and 1")
        dim = levels[1].reshape(M, -1).shape[1]
        for k, blk in enumerate(levels):
            blk = blk.reshape(M, -1) if blk.size == M * dim**k else blk
            if blk.shape != (M, dim**k):
                raise ShapeError(f"level {k} has shape {blk.shape}, expected {(M, dim**k)}")
            levels[k] = blk
            blk.flags.writeable = False
        if not np.all(levels[0] == 1.0):
            raise DomainError("level 0 must be identically 1")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "depth", len(levels) - 1)
        object.__setattr__(self, "p", float(p))

    def __setattr__(self, name, value):
        raise AttributeError("SampledRoughPath is immutable")

    @classmethod
    def from_elements(cls, times, elements, p=2.5):
        depth = elements[0].depth
        levels = [np.stack([g.blocks[k] for g in elements]) for k in range(depth + 1)]
        return cls(times, levels, p)

    @property
    def times(self):
        return self.grid.times

    @property
    def level1(self):
        return self.levels[1]

    @property
    def level2(self):
        return self.levels[2].reshape(len(self), self.dim, self.dim)

    def __len__(self):
        return len(self.grid)

    def value(self, i):
        return GroupElement([blk[i] for blk in self.levels], self.dim)

    @property
    def start(self):
        return self.value(0)

    def restrict(self, indices):
        """The path sampled at a sub-grid given by (sorted) indices, keeping 0 and 1."""
        indices = np.asarray(indices)
        return SampledRoughPath(self.times[indices], [blk[indices] for blk in self.levels], self.p)

    def underlying(self):
        """Level-1 projection as a piecewise-linear path."""
        return PointPath(self.times, self.level1)

    def __repr__(self):
        return f"SampledRoughPath(n={len(self)}, dim={self.dim}, depth={self.depth}, p={self.p})"


def constant_path(grid, dim, depth=2, p=2.5):
    """The path identically equal to the group identity."""
    grid = grid if isinstance(grid, Subdivision) else Subdivision(grid)
    M = len(grid)
    levels = [np.ones((M, 1))] + [np.zeros((M, dim**k)) for k in range(1, depth + 1)]
    return SampledRoughPath(grid, levels, p)


def increment(x, i, j):
    """The group increment ``x_{t_i}^{-1} ⊗ x_{t_j}``."""
    M = len(x)
    if not (0 <= i < M and 0 <= j < M):
        raise IndexError(f"indices ({i}, {j}) out of range for {M} samples")
    if i > j:
        raise DomainError(f"increment needs i <= j, got ({i}, {j})")
    if i == j:
        return identity(x.dim, x.depth)
    return inverse(x.value(i)) @ x.value(j)


def _check_pair(x, y):
    if (x.dim, x.depth) != (y.dim, y.depth):
        raise ShapeError(f"paths differ in shape: ({x.dim}, {x.depth}) vs ({y.dim}, {y.depth})")
    if x.grid != y.grid:
        raise ShapeError("paths are sampled on different grids; resample first")


def _increments_to(x, j):
    # increments x_{t_i, t_j} for all i < j, batched along the first axis
    inv = _inverse_blocks([blk[:j] for blk in x.levels])
    return _mul_blocks(inv, [blk[j] for blk in x.levels])


def increment_distance_table(x, y, p):
    """``table[i, j] = d(x_{t_i,t_j}, y_{t_i,t_j})**p`` for ``i < j`` (zero elsewhere)."""
    _check_pair(x, y)
    M = len(x)
    dist = np.zeros((M, M))
    for j in range(1, M):
        dist[:j, j] = _gdist_blocks(_increments_to(x, j), _increments_to(y, j))
    return dist**p


def dist_pvar(x, y, p):
    """p-variation distance, maximised exactly over subdivisions of the grid.

    ``best[j]`` is the largest sum of ``d(., .)**p`` over subdivisions of
    ``[t_0, t_j]``; the answer is ``d(x_0, y_0) + best[-1]**(1/p)``.
    """
    if p < 1:
        raise DomainError("p-variation needs p >= 1")
    table = increment_distance_table(x, y, p)
    M = len(x)
    best = np.zeros(M)
    for j in range(1, M):
        best[j] = np.max(best[:j] + table[:j, j])
    return gdist(x.start, y.start) + best[-1] ** (1.0 / p)


def stride_indices(M, stride):
    idx = np.arange(0, M, stride)
    if idx[-1] != M - 1:
        idx = np.append(idx, M - 1)
    return idx


def auto_stride(M, limit=MAX_PAIR_GRID):
    """Smallest power-of-two stride keeping at most ``limit + 1`` pair-grid points."""
    stride = 1
    while (M - 1) / stride > limit:
        stride *= 2
    return stride


def _modulus_sup_generic(x, y, p):
    M = len(x)
    best = 0.0
    t = x.times
    for j in range(1, M):
        d = _gdist_blocks(_increments_to(x, j), _increments_to(y, j))
        best = max(best, float(np.max(d / (t[j] - t[:j]) ** (1.0 / p))))
    return best


def dist_modulus(x, y, p, omega=LINEAR, stride=1):
    """``d(x_0, y_0) + sup_{s<t} d(x_{s,t}, y_{s,t}) / omega(s,t)^(1/p)`` over grid pairs.

    With ``stride > 1`` only every ``stride``-th sample (plus the last) enters
    the pair set.
    """
    _check_pair(x, y)
    if omega.kind != "linear":
        raise DomainError(f"unsupported control kind {omega.kind!r}")
    head = gdist(x.start, y.start)
    if len(x) < 2:
        return head
    if stride > 1:
        idx = stride_indices(len(x), stride)
        x, y = x.restrict(idx), y.restrict(idx)
    if x.depth != 2:
        return head + _modulus_sup_generic(x, y, p)
    uniform, table = _kernels.pair_weights(x.times, p)
    m1, m2 = _kernels.modulus_sup_depth2(
        _kernels.soa(x.level1),
        _kernels.soa(x.level2),
        _kernels.soa(y.level1),
        _kernels.soa(y.level2),
        x.times,
        uniform,
        table,
        p,
    )
    return head + math.sqrt(max(m1, 2.0 * math.sqrt(m2)))


def modulus_norm(x, p, omega=LINEAR, stride=1):
    """``d_{omega,p}(1, x)``."""
    return dist_modulus(constant_path(x.grid, x.dim, x.depth, x.p), x, p, omega, stride)


def dist_holder_points(y, z, p, stride=1):
    """Level-1 ``1/p``-Hölder distance between two ``R^n`` paths on a shared grid.

    ``y`` and ``z`` are ``(times, values)`` pairs or PointPaths.
    """
    ty, vy = (y.times, y.points) if isinstance(y, PointPath) else y
    tz, vz = (z.times, z.points) if isinstance(z, PointPath) else z
    if not np.array_equal(ty, tz) or np.shape(vy) != np.shape(vz):
        raise ShapeError("paths live on different grids")
    vy = np.asarray(vy, dtype=float)
    vz = np.asarray(vz, dtype=float)
    head = float(np.linalg.norm(vy[0] - vz[0]))
    idx = stride_indices(len(ty), stride)
    t = np.asarray(ty, dtype=float)[idx]
    uniform, table = _kernels.pair_weights(t, p)
    best = _kernels.holder_sup_level1(_kernels.soa(vy[idx]), _kernels.soa(vz[idx]), t, uniform, table, p)
    return head + math.sqrt(best)


def homogeneous_norms(x):
    """``hnorm(x_t)`` at every sample (mostly useful for diagnostics)."""
    return _hnorm_blocks(list(x.levels))
