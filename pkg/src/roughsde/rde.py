"""Solvers for ``dy = V0(y) dt + V(y) dx`` and rough integrals of one-forms.

Shapes.  A state is ``(..., n)`` with arbitrary leading batch axes.  Vector
fields return ``v(y) -> (..., n, d)`` (column ``i`` is ``V_i``) and
``dv(y) -> (..., n, n, d)`` with ``dv[..., a, b, i] = ∂V_i^a / ∂y^b``; the
drift returns ``(..., n)`` with Jacobian ``(..., n, n)``.

Level-2 step, with ``X2[j, i] = ∫ x^j dx^i`` over the step::

    y_t = y_s + V0 dt + sum_i V_i X1_i + sum_{i,j} DV_i[V_j] X2[j, i]

The drift enters at first order only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DivergenceError, DomainError, RegistryError, ShapeError
from .path_space import PointPath, SampledRoughPath

__all__ = [
    "VectorFieldSet",
    "OneForm",
    "Scenario",
    "rde2_scan",
    "ode_scan",
    "solve_rde2",
    "solve_ode_ref",
    "rough_integral",
    "doubled",
    "linear_fields",
    "circle_fields",
    "substeps",
    "rough_increments",
    "SCENARIOS",
    "build_scenario",
    "build_anticipating_scenario",
]

ODE_TOL = 1e-10


def _fd_error(f, jac, probes, h):
    # max relative mismatch between a Jacobian and central differences; the
    # differentiated argument is the last axis of the probes
    probes = np.asarray(probes, dtype=float)
    J = np.asarray(jac(probes))
    cols = []
    for b in range(probes.shape[-1]):
        e = np.zeros(probes.shape[-1])
        e[b] = h
        cols.append((np.asarray(f(probes + e)) - np.asarray(f(probes - e))) / (2 * h))
    fd = np.stack(cols, axis=-1)  # derivative index last
    return fd, J


@dataclass(frozen=True)
class VectorFieldSet:
    n: int
    d: int
    v: Callable
    dv: Callable
    v0: Optional[Callable] = None
    dv0: Optional[Callable] = None
    gamma: Optional[float] = None
    lip_bound: Optional[float] = None
    name: str = ""

    def drift(self, y):
        if self.v0 is None:
            return np.zeros(np.shape(y))
        return self.v0(y)

    def drift_jacobian(self, y):
        if self.dv0 is None:
            return np.zeros(np.shape(y) + (self.n,))
        return self.dv0(y)

    def jacobian_error(self, probes, h=1e-6):
        """Largest relative gap between declared Jacobians and central differences."""
        fd, J = _fd_error(self.v, self.dv, probes, h)
        # fd[..., a, i, b] vs J[..., a, b, i]
        err = np.max(np.abs(np.swapaxes(fd, -1, -2) - J)) / max(1.0, float(np.max(np.abs(J))))
        if self.v0 is not None:
            fd0, J0 = _fd_error(self.v0, self.drift_jacobian, probes, h)
            err = max(err, np.max(np.abs(fd0 - J0)) / max(1.0, float(np.max(np.abs(J0)))))
        return float(err)


@dataclass(frozen=True)
class OneForm:
    """``theta(x) -> (..., n, d)`` with ``dtheta(x)[..., a, i, j] = ∂theta^a_i / ∂x^j``."""

    n: int
    d: int
    theta: Callable
    dtheta: Callable
    gamma: Optional[float] = None
    lip_bound: Optional[float] = None
    name: str = ""

    def jacobian_error(self, probes, h=1e-6):
        fd, J = _fd_error(self.theta, self.dtheta, probes, h)
        return float(np.max(np.abs(fd - J)) / max(1.0, float(np.max(np.abs(J)))))


@dataclass(frozen=True)
class Scenario:
    name: str
    y0: np.ndarray
    vf: VectorFieldSet
    closed_form: Optional[Callable] = None
    anticipating: bool = False
    notes: str = ""
    params: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# array-level solvers


def _flag_divergence(y, alive, first_bad, step, strict, times):
    ok = np.all(np.isfinite(y), axis=-1)
    newly = alive & ~ok
    if np.any(newly):
        if strict:
            t = times[step] if times is not None else float(step)
            raise DivergenceError(t)
        first_bad[newly] = step
        alive &= ok
        y[~alive] = np.nan


def rde2_scan(vf, dt, dx1, dx2, y0, strict=True, times=None):
    """Run the level-2 scheme over ``S`` steps.

    ``dt`` is ``(S,)``, ``dx1`` is ``(S, ..., d)`` and ``dx2`` is
    ``(S, ..., d, d)``.  Returns ``(S + 1, ..., n)``.  With ``strict=False``
    diverged batch members become NaN from their first non-finite step on.
    """
    dt = np.asarray(dt, dtype=float)
    y = np.array(y0, dtype=float)
    S = dt.shape[0]
    out = np.empty((S + 1,) + y.shape)
    out[0] = y
    alive = np.ones(y.shape[:-1], dtype=bool)
    first_bad = np.full(y.shape[:-1], -1)
    with np.errstate(all="ignore"):
        for k in range(S):
            V = vf.v(y)
            DV = vf.dv(y)
            inc = np.einsum("...ai,...i->...a", V, dx1[k])
            # sum_{i,j} dv[a,b,i] V[b,j] X2[j,i]
            inc += np.einsum("...abi,...bj,...ji->...a", DV, V, dx2[k])
            if vf.v0 is not None:
                inc += vf.v0(y) * dt[k]
            y = y + inc
            _flag_divergence(y, alive, first_bad, k + 1, strict, times)
            out[k + 1] = y
    return out


def substeps(dt, dx, tol=ODE_TOL):
    """Sub-step count per segment so that ``h = |dt| + |dx|`` stays below ``tol**(1/5)``."""
    size = np.abs(dt).reshape((-1,) + (1,) * (dx.ndim - 2)) + np.linalg.norm(dx, axis=-1)
    size = size.reshape(size.shape[0], -1).max(axis=1)
    return np.maximum(1, np.ceil(size / tol**0.2)).astype(int)


def ode_scan(vf, dt, dx, y0, tol=ODE_TOL, strict=True, times=None):
    """Classical RK4 along a driver with constant slope on each segment.

    ``dt`` is ``(S,)`` and ``dx`` is ``(S, ..., d)``; returns ``(S + 1, ..., n)``.
    """
    dt = np.asarray(dt, dtype=float)
    dx = np.asarray(dx, dtype=float)
    y = np.array(y0, dtype=float)
    S = dt.shape[0]
    m = substeps(dt, dx, tol)
    out = np.empty((S + 1,) + y.shape)
    out[0] = y
    alive = np.ones(y.shape[:-1], dtype=bool)
    first_bad = np.full(y.shape[:-1], -1)
    drift = vf.v0 is not None

    def f(z, h, u):
        r = np.einsum("...ai,...i->...a", vf.v(z), u)
        if drift:
            r += vf.v0(z) * h
        return r

    with np.errstate(all="ignore"):
        for k in range(S):
            h = dt[k] / m[k]
            u = dx[k] / m[k]
            for _ in range(m[k]):
                k1 = f(y, h, u)
                k2 = f(y + 0.5 * k1, h, u)
                k3 = f(y + 0.5 * k2, h, u)
                k4 = f(y + k3, h, u)
                y = y + (k1 + 2.0 * (k2 + k3) + k4) / 6.0
            _flag_divergence(y, alive, first_bad, k + 1, strict, times)
            out[k + 1] = y
    return out


def rough_increments(x):
    """``(dt, X1, X2)`` step increments of a depth-2 path; ``X2`` is ``(S, d, d)``."""
    l1 = x.level1
    l2 = x.level2
    dx1 = np.diff(l1, axis=0)
    # level 2 of x_s^{-1} x_t is x2_t - x2_s - x1_s ⊗ (x1_t - x1_s)
    dx2 = np.diff(l2, axis=0) - l1[:-1, :, None] * dx1[:, None, :]
    return np.diff(x.times), dx1, dx2


def _check_vf(vf, y0, d):
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y0.shape[-1] != vf.n:
        raise ShapeError(f"initial state has dimension {y0.shape[-1]}, fields expect {vf.n}")
    if d != vf.d:
        raise ShapeError(f"driver has dimension {d}, fields expect {vf.d}")
    return y0


def solve_rde2(vf, x, y0):
    """Level-2 scheme on the grid of the depth-2 rough path ``x``; returns a PointPath."""
    if x.depth != 2:
        raise DomainError("the level-2 scheme needs a depth-2 rough path")
    y0 = _check_vf(vf, y0, x.dim)
    dt, dx1, dx2 = rough_increments(x)
    ys = rde2_scan(vf, dt, dx1, dx2, y0, strict=True, times=x.times)
    return PointPath(x.times, ys)


def solve_ode_ref(vf, x, y0, tol=ODE_TOL):
    """Classical solution along the piecewise-linear path ``x`` on its own grid."""
    y0 = _check_vf(vf, y0, x.dim)
    ys = ode_scan(vf, np.diff(x.times), np.diff(x.points, axis=0), y0, tol, strict=True, times=x.times)
    return PointPath(x.times, ys)


# ---------------------------------------------------------------------------
# one-form integration


def rough_integral(theta, x, area=True):
    """Compensated Riemann sum of ``∫ theta(x) dx`` along the grid of ``x``.

    Level 1 accumulates ``theta(x_s) X1 + Dtheta(x_s) X2`` per step.  With
    ``area=True`` level 2 accumulates ``z_s ⊗ dz + theta ⊗ theta : X2``;
    otherwise it is the canonical lift of the level-1 path.  The result
    starts at the identity.
    """
    if x.depth != 2:
        raise DomainError("rough integration needs a depth-2 rough path")
    if theta.d != x.dim:
        raise ShapeError(f"one-form expects dimension {theta.d}, path has {x.dim}")
    _, dx1, dx2 = rough_increments(x)
    xs = x.level1[:-1]
    th = np.asarray(theta.theta(xs))
    dth = np.asarray(theta.dtheta(xs))
    # dth[a, i, j] = ∂_j theta_i, which multiplies ∫ dx^j dx^i = X2[j, i]
    z1 = np.einsum("sai,si->sa", th, dx1) + np.einsum("saij,sji->sa", dth, dx2)
    M = len(x)
    n = theta.n
    lvl1 = np.zeros((M, n))
    np.cumsum(z1, axis=0, out=lvl1[1:])
    if area:
        z2 = lvl1[:-1, :, None] * z1[:, None, :] + np.einsum("sai,sbj,sij->sab", th, th, dx2)
        lvl2 = np.zeros((M, n, n))
        np.cumsum(z2, axis=0, out=lvl2[1:])
        return SampledRoughPath(x.grid, [np.ones((M, 1)), lvl1, lvl2.reshape(M, n * n)], x.p)
    from .lift import sig_pwl

    return sig_pwl(PointPath(x.times, lvl1), 2, x.p)


# ---------------------------------------------------------------------------
# field constructions


def linear_fields(mats, drift=None, name="linear"):
    """Fields ``V_i(y) = A_i y`` (and optional drift ``B y``) from constant matrices."""
    mats = np.asarray(mats, dtype=float)  # (d, n, n)
    d, n, _ = mats.shape
    jac = np.transpose(mats, (1, 2, 0)).copy()  # [a, b, i]
    bound = float(max(np.linalg.norm(A, 2) for A in mats))

    def v(y):
        return np.einsum("iab,...b->...ai", mats, y)

    def dv(y):
        return np.broadcast_to(jac, np.shape(y)[:-1] + jac.shape)

    v0 = dv0 = None
    if drift is not None:
        B = np.asarray(drift, dtype=float)

        def v0(y):
            return np.einsum("ab,...b->...a", B, y)

        def dv0(y):
            return np.broadcast_to(B, np.shape(y)[:-1] + B.shape)

    return VectorFieldSet(n, d, v, dv, v0, dv0, gamma=math.inf, lip_bound=bound, name=name)


def doubled(vf):
    """The system on ``R^{2n}`` driven by ``R^{2d}`` running two copies of ``vf`` side by side."""
    n, d = vf.n, vf.d

    def v(y):
        a, b = y[..., :n], y[..., n:]
        out = np.zeros(np.shape(y)[:-1] + (2 * n, 2 * d))
        out[..., :n, :d] = vf.v(a)
        out[..., n:, d:] = vf.v(b)
        return out

    def dv(y):
        a, b = y[..., :n], y[..., n:]
        out = np.zeros(np.shape(y)[:-1] + (2 * n, 2 * n, 2 * d))
        out[..., :n, :n, :d] = vf.dv(a)
        out[..., n:, n:, d:] = vf.dv(b)
        return out

    v0 = dv0 = None
    if vf.v0 is not None:

        def v0(y):
            return np.concatenate([vf.v0(y[..., :n]), vf.v0(y[..., n:])], axis=-1)

        def dv0(y):
            out = np.zeros(np.shape(y)[:-1] + (2 * n, 2 * n))
            out[..., :n, :n] = vf.drift_jacobian(y[..., :n])
            out[..., n:, n:] = vf.drift_jacobian(y[..., n:])
            return out

    return VectorFieldSet(2 * n, 2 * d, v, dv, v0, dv0, vf.gamma, vf.lip_bound, f"doubled({vf.name})")


# ---------------------------------------------------------------------------
# scenarios
#
# A builder takes sample times (M,) and driver values (..., M, d) and returns a
# Scenario whose fields broadcast over the leading batch axes.


def _scaled_identity(c, d, name, gamma=math.inf):
    # V_i(y) = c * y for every driver coordinate, c broadcasting over the batch
    c = np.asarray(c, dtype=float)

    def v(y):
        return (c[..., None] * y)[..., :, None] * np.ones(d)

    def dv(y):
        shape = np.shape(y)[:-1] + (1, 1, d)
        return np.broadcast_to(c[..., None, None, None], shape) * np.ones(shape)

    bound = float(np.max(c)) if c.size else 0.0
    return VectorFieldSet(1, d, v, dv, gamma=gamma, lip_bound=bound, name=name)


def _anticipating_linear(times, values):
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    y0 = values[..., -1, :1].copy()

    def closed(times, drv):
        drv = np.asarray(drv, dtype=float)
        return y0[..., None, :] * np.exp(np.sum(drv - drv[..., :1, :], axis=-1))[..., None]

    vf = _scaled_identity(np.ones(values.shape[:-2]), d, "identity")
    return Scenario("anticipating_linear", y0, vf, closed, True, "y0 = B_1 (first coordinate), V_i(y) = y")


def _random_scale_linear(times, values):
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    c = 1.0 / (1.0 + np.max(np.linalg.norm(values, axis=-1), axis=-1))
    y0 = np.ones(values.shape[:-2] + (1,))

    def closed(times, drv):
        drv = np.asarray(drv, dtype=float)
        return np.exp(c[..., None] * np.sum(drv - drv[..., :1, :], axis=-1))[..., None]

    vf = _scaled_identity(c, d, "random scale")
    return Scenario(
        "random_scale_linear", y0, vf, closed, True, "V_i(y) = y / (1 + max |B|)", {"scale": c}
    )


CIRCLE_J = np.array([[0.0, -1.0], [1.0, 0.0]])
CIRCLE_S = 0.5 * np.array([[1.0, 0.0], [0.0, -1.0]])


def circle_fields():
    return linear_fields([CIRCLE_J, CIRCLE_S], name="circle")


def _classical_circle(times, values):
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != 2:
        raise ShapeError("classical_circle needs a 2-dimensional driver")
    vf = circle_fields()
    y0 = np.broadcast_to(np.array([1.0, 0.0]), values.shape[:-2] + (2,)).copy()

    def closed(times, drv):
        drv = np.moveaxis(np.asarray(drv, dtype=float), -2, 0)
        ys = ode_scan(vf, np.diff(times), np.diff(drv, axis=0), y0, strict=False)
        return np.moveaxis(ys, 0, -2)

    return Scenario("classical_circle", y0, vf, closed, False, "V1 = J y, V2 = S y, y0 = (1, 0)")


def _exponential(times, values):
    values = np.asarray(values, dtype=float)
    d = values.shape[-1]
    y0 = np.ones(values.shape[:-2] + (1,))

    def closed(times, drv):
        drv = np.asarray(drv, dtype=float)
        return np.exp(np.sum(drv - drv[..., :1, :], axis=-1))[..., None]

    vf = _scaled_identity(np.ones(values.shape[:-2]), d, "identity")
    return Scenario("exponential", y0, vf, closed, False, "V_i(y) = y, y0 = 1")


GBM_MU = 0.5
GBM_SIGMA = 1.0


def _geometric_drift(times, values):
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != 1:
        raise ShapeError("geometric_drift needs a 1-dimensional driver")
    vf = linear_fields([[[GBM_SIGMA]]], drift=[[GBM_MU]], name="geometric")
    y0 = np.ones(values.shape[:-2] + (1,))

    def closed(times, drv):
        drv = np.asarray(drv, dtype=float)
        t = np.asarray(times, dtype=float)[:, None]
        return np.exp(GBM_MU * t + GBM_SIGMA * (drv - drv[..., :1, :]))

    return Scenario("geometric_drift", y0, vf, closed, False, "V0(y) = mu y, V(y) = sigma y")


SCENARIOS = {
    "anticipating_linear": _anticipating_linear,
    "random_scale_linear": _random_scale_linear,
    "classical_circle": _classical_circle,
    "exponential": _exponential,
    "geometric_drift": _geometric_drift,
}


def build_scenario(name, times, values):
    """Scenario from driver samples ``values`` of shape ``(..., M, d)``."""
    try:
        builder = SCENARIOS[name]
    except KeyError:
        raise RegistryError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
    return builder(np.asarray(times, dtype=float), values)


def build_anticipating_scenario(name, b):
    """Scenario built from a single BrownianSample."""
    return build_scenario(name, b.times, b.values)
