import math

import numpy as np
import pytest

from roughsde.brownian import (
    derive_seed,
    dyadic_refine,
    linear_approx,
    mix64,
    normals,
    reference_lift,
    sample_bm,
    scale_lift,
    uniforms,
)
from roughsde.errors import DomainError, ResourceError
from roughsde.lift import sig_pwl
from roughsde.path_space import PointPath, Subdivision, increment
from roughsde import tensor_algebra as ta


def splitmix_scalar(z):
    # plain-int reference of the finaliser
    mask = 2**64 - 1
    z &= mask
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
    return z ^ (z >> 31)


def test_mix64_matches_integer_reference():
    vals = [0, 1, 2**63, 2**64 - 1, 123456789]
    np.testing.assert_array_equal(mix64(np.array(vals, dtype=np.uint64)), [splitmix_scalar(v) for v in vals])


def test_derive_seed_documented_formula():
    G = 0x9E3779B97F4A7C15
    mask = 2**64 - 1
    seed, rep, level, pos, stream = 42, 3, 7, 11, 1
    h = splitmix_scalar((seed + G) & mask)
    for w in (rep, (stream << 32) | level, pos):
        h = splitmix_scalar(((h ^ w) + G) & mask)
    assert int(derive_seed(seed, rep, level, pos, stream)[0]) == h


def test_derived_seeds_unique():
    s = derive_seed(9, np.arange(100)[:, None, None], np.arange(10)[None, :, None], np.arange(1000))
    assert s.size == 10**6 and np.unique(s).size == 10**6


def test_normals_and_uniforms_moments():
    z = normals(derive_seed(1, 0, 0, np.arange(200000)), 2)
    assert abs(z.mean()) < 0.01 and abs(z.var() - 1.0) < 0.02
    u = uniforms(derive_seed(1, 0, 0, np.arange(100000)), 1)
    assert u.min() >= 0.0 and u.max() < 1.0 and abs(u.mean() - 0.5) < 0.005


def test_sample_basic_and_determinism():
    b = sample_bm(7, 6, 3)
    assert b.values.shape == (65, 3) and np.all(b.values[0] == 0.0)
    assert np.array_equal(b.values, sample_bm(7, 6, 3).values)
    assert not np.array_equal(b.values, sample_bm(8, 6, 3).values)
    assert not np.array_equal(b.values, sample_bm(7, 6, 3, replicate=1).values)
    assert b.mesh == 1 / 64 and b.times[-1] == 1.0
    with pytest.raises(ResourceError):
        sample_bm(0, 25, 1)


def test_terminal_variance():
    # sample variance of 1e4 draws has sd sqrt(2/1e4) ~ 0.014; 3 sd gives [0.94, 1.06]
    end = np.array([sample_bm(11, 8, 2, replicate=r).values[-1] for r in range(10000)])
    var = end.var(axis=0)
    assert np.all((0.94 <= var) & (var <= 1.06))


def test_refine_preserves_and_bridges():
    b = sample_bm(3, 5, 2)
    r = dyadic_refine(b)
    assert r.level == 6
    np.testing.assert_array_equal(r.values[::2], b.values)
    assert np.array_equal(r.values, dyadic_refine(b).values)


def test_refine_midpoint_variance():
    K = 3
    disp = []
    for rep in range(1250):
        b = sample_bm(5, K, 1, replicate=rep)
        r = dyadic_refine(b)
        disp.append(r.values[1::2, 0] - 0.5 * (b.values[:-1, 0] + b.values[1:, 0]))
    disp = np.concatenate(disp)  # 10^4 displacements
    target = 2.0**-K / 4
    assert abs(disp.mean()) < 3 * math.sqrt(target / disp.size)
    assert abs(disp.var() / target - 1.0) < 3 * math.sqrt(2.0 / disp.size)


def test_linear_approx():
    b = sample_bm(1, 6, 2)
    full = linear_approx(b, Subdivision.dyadic(6))
    np.testing.assert_array_equal(full.points, b.values)
    D = Subdivision.dyadic(3)
    xn = linear_approx(b, D)
    np.testing.assert_array_equal(xn(D.times), b.values[::8])
    np.testing.assert_allclose(xn(1 / 16), 0.5 * (b.values[0] + b.values[8]))
    # snapping off-grid times to the nearest sample
    snapped = linear_approx(b, [0.0, 0.5 + 1e-4, 1.0])
    np.testing.assert_array_equal(snapped.times, [0.0, 0.5, 1.0])
    with pytest.raises(DomainError):
        linear_approx(b, [])


def test_coupling_across_levels():
    b = sample_bm(2, 8, 2)
    coarse = linear_approx(b, Subdivision.dyadic(3))
    fine = linear_approx(b, Subdivision.dyadic(5))
    np.testing.assert_array_equal(fine(coarse.times), coarse.points)


def test_reference_lift_properties():
    b = sample_bm(4, 7, 2)
    x = reference_lift(b)
    np.testing.assert_array_equal(x.level1, b.values)
    # independent Lévy area accumulation: ½ Σ (x_m ∧ dx_m) with left endpoints
    inc = np.diff(b.values, axis=0)
    left = b.values[:-1]
    area = 0.5 * np.sum(left[:, 0] * inc[:, 1] - left[:, 1] * inc[:, 0])
    l2 = x.level2[-1]
    assert 0.5 * (l2[0, 1] - l2[1, 0]) == pytest.approx(area, abs=1e-12)
    for m in (5, 60, 128):
        g = increment(x, 0, m)
        np.testing.assert_allclose(0.5 * (g[2] + g[2].T), 0.5 * np.outer(g[1], g[1]), atol=1e-12)
        assert (increment(x, 0, 40) @ increment(x, 40, m if m > 40 else 128)).max_abs_diff(
            increment(x, 0, m if m > 40 else 128)
        ) < 1e-10


def test_scale_lift():
    b = sample_bm(6, 6, 2)
    x = reference_lift(b)
    assert all(np.array_equal(a, c) for a, c in zip(scale_lift(1.0, x).levels, x.levels))
    alpha = 0.37
    s = scale_lift(alpha, x)
    np.testing.assert_array_equal(s.levels[2], alpha * x.levels[2])
    direct = sig_pwl(PointPath(b.times, math.sqrt(alpha) * b.values))
    for k in range(3):
        np.testing.assert_allclose(s.levels[k], direct.levels[k], atol=1e-12)
    with pytest.raises(DomainError):
        scale_lift(0.0, x)
    g = x.value(40)
    assert s.value(40).allclose(ta.dilate(math.sqrt(alpha), g), 1e-14)
