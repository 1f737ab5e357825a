"""Compiled O(M^2) pair-supremum kernels for depth-2 paths.

Every kernel takes structure-of-arrays inputs (component axes first, time
last) so the innermost loop over the later time index is contiguous.  Pair
weights are ``omega(s, t)^(-2/p)`` with the linear control; on uniform grids
they come from a per-lag table, otherwise they are computed per pair.

Reductions run in a fixed index order, so results do not depend on anything
but the inputs.
"""
import numpy as np
from numba import njit


def pair_weights(times, p):
    """Return ``(uniform, table)``; ``table[lag] = (lag*h)^(-2/p)`` when uniform."""
    times = np.asarray(times, dtype=float)
    steps = np.diff(times)
    if steps.size and np.all(steps == steps[0]):
        lags = np.arange(times.size, dtype=float) * steps[0]
        table = np.zeros(times.size)
        table[1:] = lags[1:] ** (-2.0 / p)
        return True, table
    return False, np.zeros(times.size)


@njit(cache=True)
def _fill_weights(w, times, i, L, uniform, table, expo):
    if uniform:
        for q in range(L):
            w[q] = table[q + 1]
    else:
        ti = times[i]
        for q in range(L):
            w[q] = (times[i + 1 + q] - ti) ** expo


@njit(cache=True)
def modulus_sup_depth2(x1, x2, y1, y2, times, uniform, table, p):
    """Squared sups of the level-1 and level-2 parts of ``x_{s,t}^{-1} ⊗ y_{s,t}``.

    Returns ``(m1, m2)`` with ``m1 = sup |l1|^2 / w`` and
    ``m2 = sup |l2|^2 / w^2`` where ``w = omega^(2/p)``.
    """
    D, M = x1.shape
    expo = -2.0 / p
    s1 = np.empty(M)
    s2 = np.empty(M)
    w = np.empty(M)
    m1 = 0.0
    m2 = 0.0
    for i in range(M - 1):
        L = M - i - 1
        _fill_weights(w, times, i, L, uniform, table, expo)
        s1[:L] = 0.0
        s2[:L] = 0.0
        for k in range(D):
            xik = x1[k, i]
            yik = y1[k, i]
            for q in range(L):
                j = i + 1 + q
                e = (y1[k, j] - yik) - (x1[k, j] - xik)
                s1[q] += e * e
            for l in range(D):
                xil = x1[l, i]
                yil = y1[l, i]
                x2i = x2[k, l, i]
                y2i = y2[k, l, i]
                for q in range(L):
                    j = i + 1 + q
                    ax = x1[k, j] - xik
                    dxl = x1[l, j] - xil
                    dyl = y1[l, j] - yil
                    a2 = x2[k, l, j] - x2i - xik * dxl
                    b2 = y2[k, l, j] - y2i - yik * dyl
                    e = b2 - a2 - ax * (dyl - dxl)
                    s2[q] += e * e
        for q in range(L):
            v = s1[q] * w[q]
            if v > m1:
                m1 = v
            v = s2[q] * w[q] * w[q]
            if v > m2:
                m2 = v
    return m1, m2


@njit(cache=True)
def good_sequence_sups(x, x2, xn, inn, cr, crb, times, uniform, table, p):
    """Pair suprema for the good-sequence diagnostics.

    ``x``/``x2`` are the reference level-1 values and level-2 prefix, ``xn``
    the approximant, ``inn``, ``cr``, ``crb`` the prefixes of
    ``∫xn⊗dxn``, ``∫xn⊗dx`` and ``∫x⊗dxn``.  Returns the squared weighted sups
    ``(A1^2, A2^2, A3^2, A4^2, F2)`` where ``F2`` is the squared weighted sup
    of the level-2 part of the distance between pair and diagonal lifts.
    """
    d, M = x.shape
    expo = -2.0 / p
    s1 = np.empty(M)
    s2 = np.empty(M)
    s3 = np.empty(M)
    s4 = np.empty(M)
    sf = np.empty(M)
    w = np.empty(M)
    a1 = 0.0
    a2 = 0.0
    a3 = 0.0
    a4 = 0.0
    f2 = 0.0
    for i in range(M - 1):
        L = M - i - 1
        _fill_weights(w, times, i, L, uniform, table, expo)
        s1[:L] = 0.0
        s2[:L] = 0.0
        s3[:L] = 0.0
        s4[:L] = 0.0
        sf[:L] = 0.0
        for k in range(d):
            xik = x[k, i]
            xnik = xn[k, i]
            for q in range(L):
                j = i + 1 + q
                e = (xn[k, j] - xnik) - (x[k, j] - xik)
                s1[q] += e * e
            for l in range(d):
                xil = x[l, i]
                xnil = xn[l, i]
                x2i = x2[k, l, i]
                inni = inn[k, l, i]
                cri = cr[k, l, i]
                crbi = crb[k, l, i]
                for q in range(L):
                    j = i + 1 + q
                    dxk = x[k, j] - xik
                    dxnk = xn[k, j] - xnik
                    dxl = x[l, j] - xil
                    dxnl = xn[l, j] - xnil
                    big = x2[k, l, j] - x2i - xik * dxl
                    t2 = inn[k, l, j] - inni - xnik * dxnl - big
                    t3 = cr[k, l, j] - cri - xnik * dxl - big
                    t4 = crb[k, l, j] - crbi - xik * dxnl - big
                    s2[q] += t2 * t2
                    s3[q] += t3 * t3
                    s4[q] += t4 * t4
                    delta = dxl - dxnl
                    g00 = t2 + dxnk * delta
                    g10 = t4 + dxk * delta
                    sf[q] += g00 * g00 + t3 * t3 + g10 * g10
        for q in range(L):
            wq = w[q]
            ww = wq * wq
            v = s1[q] * wq
            if v > a1:
                a1 = v
            v = s2[q] * ww
            if v > a2:
                a2 = v
            v = s3[q] * ww
            if v > a3:
                a3 = v
            v = s4[q] * ww
            if v > a4:
                a4 = v
            v = sf[q] * ww
            if v > f2:
                f2 = v
    return a1, a2, a3, a4, f2


@njit(cache=True)
def holder_sup_level1(y, z, times, uniform, table, p):
    """Squared weighted sup of ``|y_{s,t} - z_{s,t}|^2 / omega^(2/p)``."""
    n, M = y.shape
    expo = -2.0 / p
    s = np.empty(M)
    w = np.empty(M)
    best = 0.0
    for i in range(M - 1):
        L = M - i - 1
        _fill_weights(w, times, i, L, uniform, table, expo)
        s[:L] = 0.0
        for k in range(n):
            yik = y[k, i]
            zik = z[k, i]
            for q in range(L):
                j = i + 1 + q
                e = (y[k, j] - yik) - (z[k, j] - zik)
                s[q] += e * e
        for q in range(L):
            v = s[q] * w[q]
            if v > best:
                best = v
    return best


def soa(values):
    """Move the time axis of a ``(M, ...)`` array last, contiguously."""
    values = np.asarray(values, dtype=float)
    return np.ascontiguousarray(np.moveaxis(values, 0, -1))
