"""Independent reference implementations used only by the tests.

Tensors are dicts mapping words (tuples of letters) to coefficients, so the
product is a plain double loop over words with no block layout involved.
"""
import itertools
import math

import numpy as np


def to_words(t):
    out = {}
    for k, blk in enumerate(t.blocks):
        for flat, c in enumerate(blk):
            word = tuple(int(i) for i in np.unravel_index(flat, (t.dim,) * k)) if k else ()
            if c != 0.0:
                out[word] = out.get(word, 0.0) + float(c)
    return out


def to_blocks(w, dim, depth):
    blocks = [np.zeros(dim**k) for k in range(depth + 1)]
    for word, c in w.items():
        k = len(word)
        flat = int(np.ravel_multi_index(word, (dim,) * k)) if k else 0
        blocks[k][flat] += c
    return blocks


def wmul(a, b, depth):
    out = {}
    for u, cu in a.items():
        for v, cv in b.items():
            if len(u) + len(v) <= depth:
                out[u + v] = out.get(u + v, 0.0) + cu * cv
    return out


def wadd(a, b, s=1.0):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0.0) + s * v
    return out


def wexp(a, depth):
    a = {k: v for k, v in a.items() if k}
    out = {(): 1.0}
    power = {(): 1.0}
    for k in range(1, depth + 1):
        power = wmul(power, a, depth)
        out = wadd(out, power, 1.0 / math.factorial(k))
    return out


def wlog(g, depth):
    u = {k: v for k, v in g.items() if k}
    out = {}
    power = {(): 1.0}
    for k in range(1, depth + 1):
        power = wmul(power, u, depth)
        out = wadd(out, power, (-1.0) ** (k + 1) / k)
    return out


def brute_pvar_sum(table, p_table=True):
    """Max over all subdivisions of a grid of the summed segment table, by enumeration."""
    M = table.shape[0]
    best = -1.0
    for mask in itertools.product([0, 1], repeat=M - 2):
        pts = [0] + [i + 1 for i, m in enumerate(mask) if m] + [M - 1]
        s = 0.0
        for a, b in zip(pts[:-1], pts[1:]):
            s += table[a, b]
        best = max(best, s)
    return best


def riemann_cross(f, g, times, fine=64):
    """Midpoint Riemann–Stieltjes sum of ``∫ f ⊗ dg`` for callables on [t0, t1]."""
    t = np.linspace(times[0], times[-1], (len(times) - 1) * fine + 1)
    mid = 0.5 * (t[1:] + t[:-1])
    return np.einsum("mi,mj->ij", f(mid), np.diff(g(t), axis=0))
