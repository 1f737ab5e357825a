"""Canonical lifts of piecewise-linear paths, pair and diagonal lifts, and
good-sequence diagnostics.

Pair lifts live in dimension ``2d``: coordinates ``0..d-1`` carry the
bounded-variation path, coordinates ``d..2d-1`` the rough path.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError, ShapeError
from .path_space import (
    LINEAR,
    PointPath,
    SampledRoughPath,
    Subdivision,
    modulus_norm,
    stride_indices,
)
from .tensor_algebra import GroupElement, _exp_blocks, _mul_blocks, gdist

__all__ = [
    "sig_pwl",
    "young_cross",
    "pair_lift",
    "diag_lift",
    "DiagnosticsReport",
    "good_seq_diag",
    "cumulative_cross",
]


def cumulative_cross(yv, xv):
    """Trapezoid prefix ``∫_0^{t_m} y ⊗ dx`` for arrays ``(M, ..., a)`` and ``(M, ..., b)``.

    Returns ``(M, ..., a, b)`` starting at zero; exact when ``y`` is linear
    on every segment of the grid.
    """
    yv = np.asarray(yv, dtype=float)
    xv = np.asarray(xv, dtype=float)
    mid = 0.5 * (yv[1:] + yv[:-1])
    steps = mid[..., :, None] * np.diff(xv, axis=0)[..., None, :]
    out = np.zeros((xv.shape[0],) + steps.shape[1:])
    np.cumsum(steps, axis=0, out=out[1:])
    return out


def _sig_depth2(times, pts, p):
    M, d = pts.shape
    x0 = pts[0]
    lvl2 = 0.5 * np.outer(x0, x0)[None] + cumulative_cross(pts, pts)
    return SampledRoughPath(times, [np.ones((M, 1)), pts, lvl2.reshape(M, d * d)], p)


def sig_pwl(x, depth=2, p=2.5):
    """Signature prefixes ``exp(x_0) ⊗ S(x)_{0,t}`` of a piecewise-linear path at its sample times."""
    if depth < 1:
        raise DomainError("depth must be at least 1")
    grid = Subdivision(x.times)
    pts = x.points
    M, d = pts.shape
    if depth == 2:
        return _sig_depth2(grid, pts, p)
    if depth == 1:
        return SampledRoughPath(grid, [np.ones((M, 1)), pts], p)
    # exp of every segment at once, then Chen concatenation in time order
    first = [np.zeros((M, 1)), np.concatenate([pts[:1], np.diff(pts, axis=0)])]
    first += [np.zeros((M, d**k)) for k in range(2, depth + 1)]
    segs = _exp_blocks(first)
    levels = [np.empty((M, d**k)) for k in range(depth + 1)]
    cur = [blk[0] for blk in segs]
    for m in range(M):
        if m:
            cur = _mul_blocks(cur, [blk[m] for blk in segs])
        for k in range(depth + 1):
            levels[k][m] = cur[k]
    levels[0][:] = 1.0
    return SampledRoughPath(grid, levels, p)


def _values(path):
    if isinstance(path, PointPath):
        return path.times, path.points
    if isinstance(path, SampledRoughPath):
        return path.times, path.level1
    times, vals = path
    vals = np.asarray(vals, dtype=float)
    return np.asarray(times, dtype=float), vals.reshape(len(vals), -1)


def young_cross(y, x):
    """Prefix integrals ``∫_0^t y_u ⊗ dx_u`` for a pwl integrator ``x``.

    ``y`` may be a PointPath, a SampledRoughPath (its level 1 is used) or a
    ``(times, values)`` pair.  Both paths are put on the union of their grids
    (linear interpolation), and the integral is accumulated with the segment
    trapezoid rule.  Returns ``(times, values)`` with ``values`` of shape
    ``(M, dim_y, dim_x)``.
    """
    ty, vy = _values(y)
    tx, vx = _values(x)
    times = np.union1d(ty, tx)
    yv = np.stack([np.interp(times, ty, vy[:, k]) for k in range(vy.shape[1])], axis=1)
    xv = np.stack([np.interp(times, tx, vx[:, k]) for k in range(vx.shape[1])], axis=1)
    return times, cumulative_cross(yv, xv)


def _on_grid(x, grid):
    # xn must be pwl on ``grid``: every breakpoint is a grid time
    if not np.all(np.isin(x.times, grid.times)):
        raise ShapeError("approximant breakpoints are not contained in the rough path grid")
    if x.times[0] != grid.times[0] or x.times[-1] != grid.times[-1]:
        raise ShapeError("approximant does not span the rough path grid")
    return x(grid.times)


def _need_depth2(y):
    if y.depth != 2:
        raise DomainError("pair and diagonal lifts are implemented for depth 2 only")


def pair_lift(x, y):
    """Joint lift of a pwl path ``x`` and a depth-2 rough path ``y`` in ``R^{2d}``.

    Level-2 blocks are ``(∫x⊗dx, ∫x⊗dy¹, ∫y¹⊗dx, y²)`` (cross terms by
    young_cross on the grid of ``y``).
    """
    _need_depth2(y)
    if x.dim != y.dim:
        raise ShapeError(f"dimension mismatch: {x.dim} vs {y.dim}")
    d = y.dim
    xv = _on_grid(x, y.grid)
    yv = y.level1
    M = len(y)
    x0, y0 = xv[0], yv[0]
    z2 = np.empty((M, 2 * d, 2 * d))
    z2[:, :d, :d] = 0.5 * np.outer(x0, x0) + cumulative_cross(xv, xv)
    z2[:, :d, d:] = 0.5 * np.outer(x0, y0) + cumulative_cross(xv, yv)
    z2[:, d:, :d] = 0.5 * np.outer(y0, x0) + cumulative_cross(yv, xv)
    z2[:, d:, d:] = y.level2
    z1 = np.concatenate([xv, yv], axis=1)
    return SampledRoughPath(y.grid, [np.ones((M, 1)), z1, z2.reshape(M, 4 * d * d)], y.p)


def diag_lift(y):
    """``y`` seen as the lift of the doubled path ``(y, y)``."""
    _need_depth2(y)
    M = len(y)
    l2 = y.level2
    z2 = np.tile(l2, (1, 2, 2))
    z1 = np.concatenate([y.level1, y.level1], axis=1)
    return SampledRoughPath(y.grid, [np.ones((M, 1)), z1, z2.reshape(M, -1)], y.p)


@dataclass(frozen=True)
class DiagnosticsReport:
    """Good-sequence diagnostics for one approximant.

    ``a1`` is the Hölder-type sup of the level-1 error; ``a2``, ``a3``, ``a4``
    are the ``2/p``-weighted sups for ``∫xn⊗dxn``, ``∫xn⊗dx`` and ``∫x⊗dxn``
    against ``x²``.  ``distance`` is the full modulus distance between the
    pair lift and the diagonal lift, and ``x_norm`` the modulus norm of ``x``.
    """

    a1: float
    a2: float
    a3: float
    a4: float
    grid_size: int
    p: float
    mesh: float
    x_norm: float
    distance: float
    stride: int = 1

    @property
    def combined(self):
        return max(self.a1, math.sqrt(self.a2), math.sqrt(self.a3), math.sqrt(self.a4))

    @property
    def a3_bound(self):
        """``‖x‖ (A1 + A4)``, the bound on ``A3`` used in the convergence argument."""
        return self.x_norm * (self.a1 + self.a4)

    @property
    def a3_sharp_bound(self):
        """``‖x‖ A1 + A4``, which follows from integration by parts for any ``‖x‖``."""
        return self.x_norm * self.a1 + self.a4

    def as_dict(self):
        return {
            "a1": self.a1,
            "a2": self.a2,
            "a3": self.a3,
            "a4": self.a4,
            "combined": self.combined,
            "distance": self.distance,
        }


def _start_distance(xn0, x):
    d = x.dim
    x0 = x.level1[0]
    x20 = x.level2[0]
    pair = np.empty((2 * d, 2 * d))
    pair[:d, :d] = 0.5 * np.outer(xn0, xn0)
    pair[:d, d:] = 0.5 * np.outer(xn0, x0)
    pair[d:, :d] = 0.5 * np.outer(x0, xn0)
    pair[d:, d:] = x20
    diag = np.tile(x20, (2, 2))
    g = GroupElement([[1.0], np.concatenate([xn0, x0]), pair.reshape(-1)], 2 * d)
    h = GroupElement([[1.0], np.concatenate([x0, x0]), diag.reshape(-1)], 2 * d)
    return gdist(g, h)


def good_seq_diag(xn, x, p=None, omega=LINEAR, stride=1, x_norm=None):
    """Diagnostics of the approximant ``xn`` (pwl on a subgrid) against the rough path ``x``.

    With ``stride > 1`` the pair suprema run over every ``stride``-th grid
    point (plus the last); the integrals are still accumulated on the full
    grid.  ``x_norm`` may be passed in when it is already known.
    """
    _need_depth2(x)
    if omega.kind != "linear":
        raise DomainError(f"unsupported control kind {omega.kind!r}")
    if xn.dim != x.dim:
        raise ShapeError(f"dimension mismatch: {xn.dim} vs {x.dim}")
    p = x.p if p is None else float(p)
    xv = x.level1
    nv = _on_grid(xn, x.grid)
    inn = cumulative_cross(nv, nv)
    cr = cumulative_cross(nv, xv)
    crb = cumulative_cross(xv, nv)
    idx = stride_indices(len(x), stride)
    times = x.times[idx]
    uniform, table = _kernels.pair_weights(times, p)
    a1, a2, a3, a4, f2 = _kernels.good_sequence_sups(
        _kernels.soa(xv[idx]),
        _kernels.soa(x.level2[idx]),
        _kernels.soa(nv[idx]),
        _kernels.soa(inn[idx]),
        _kernels.soa(cr[idx]),
        _kernels.soa(crb[idx]),
        times,
        uniform,
        table,
        p,
    )
    if x_norm is None:
        x_norm = modulus_norm(x, p, omega, stride)
    a1 = math.sqrt(a1)
    distance = _start_distance(nv[0], x) + max(a1, math.sqrt(2.0 * math.sqrt(f2)))
    return DiagnosticsReport(
        a1=a1,
        a2=math.sqrt(a2),
        a3=math.sqrt(a3),
        a4=math.sqrt(a4),
        grid_size=int(idx.size),
        p=p,
        mesh=float(np.max(np.diff(xn.times))),
        x_norm=float(x_norm),
        distance=float(distance),
        stride=int(stride),
    )
