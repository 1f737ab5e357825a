import math

import numpy as np
import pytest

from oracles import riemann_cross, to_blocks, wexp, wmul
from roughsde import tensor_algebra as ta
from roughsde.brownian import linear_approx, reference_lift, sample_bm
from roughsde.errors import DomainError, ShapeError
from roughsde.lift import diag_lift, good_seq_diag, pair_lift, sig_pwl, young_cross
from roughsde.path_space import PointPath, SampledRoughPath, Subdivision, dist_modulus, increment


def random_path(rng, n=20, d=2, times=None):
    t = np.linspace(0, 1, n + 1) if times is None else times
    return PointPath(t, np.cumsum(rng.normal(size=(len(t), d)), axis=0))


def pure_area(M):
    t = np.linspace(0, 1, M)
    A = np.array([[0.0, 1.0], [-1.0, 0.0]])
    return SampledRoughPath(t, [np.ones((M, 1)), np.zeros((M, 2)), (t[:, None, None] * A).reshape(M, 4)])


def test_single_segment():
    a, b = np.array([1.0, -2.0]), np.array([0.5, 3.0])
    s = sig_pwl(PointPath([0.0, 1.0], [a, b]), 3)
    assert s.value(0).allclose(ta.exp(ta.from_vector(a, 3)), 1e-14)
    assert increment(s, 0, 1).allclose(ta.exp(ta.from_vector(b - a, 3)), 1e-12)


def test_two_unit_segments_log():
    x = PointPath([0.0, 0.5, 1.0], [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])
    lg = ta.log(sig_pwl(x).value(2))
    e1, e2 = ta.basis(0, 2), ta.basis(1, 2)
    expected = e1 + e2 + 0.5 * ta.lie_bracket(e1, e2)
    assert lg.allclose(expected, 1e-14)


def test_sig_matches_word_oracle():
    rng = np.random.default_rng(0)
    x = random_path(rng, 6, 3)
    depth = 3
    w = wexp({(i,): c for i, c in enumerate(x.points[0])}, depth)
    s = sig_pwl(x, depth)
    for m in range(1, 7):
        step = {(i,): c for i, c in enumerate(x.points[m] - x.points[m - 1])}
        w = wmul(w, wexp(step, depth), depth)
        ref = to_blocks(w, 3, depth)
        assert max(np.max(np.abs(a - b)) for a, b in zip(s.value(m).blocks, ref)) < 1e-11


def test_depth2_fast_path_matches_general():
    rng = np.random.default_rng(1)
    x = random_path(rng, 30, 3)
    s2, s3 = sig_pwl(x, 2), sig_pwl(x, 3)
    for k in range(3):
        np.testing.assert_allclose(s2.levels[k], s3.levels[k], atol=1e-12)


def test_chen_and_shuffle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        d, depth = rng.integers(1, 4), rng.integers(2, 4)
        s = sig_pwl(random_path(rng, 20, d), depth)
        total = increment(s, 0, 20)
        for m in (3, 11, 17):
            assert (increment(s, 0, m) @ increment(s, m, 20)).max_abs_diff(total) <= 1e-10
        g = s.value(20)
        assert ta.is_geometric(g, 1e-12)


def test_young_cross_linear():
    t = np.linspace(0, 1, 5)
    x = PointPath(t, np.outer(t, [1.0, 0.0]))
    y = PointPath(t, np.outer(t, [0.0, 1.0]))
    _, val = young_cross(x, y)
    np.testing.assert_allclose(val[-1], [[0.0, 0.5], [0.0, 0.0]], atol=1e-15)
    _, val = young_cross(x, PointPath(t, np.ones((5, 2))))
    assert np.all(val == 0.0)


def test_young_cross_merges_grids_and_matches_riemann():
    rng = np.random.default_rng(3)
    y = random_path(rng, 7, 2, np.sort(np.r_[0.0, rng.uniform(0, 1, 6), 1.0]))
    x = random_path(rng, 5, 3, np.sort(np.r_[0.0, rng.uniform(0, 1, 4), 1.0]))
    times, val = young_cross(y, x)
    assert np.all(np.isin(y.times, times)) and np.all(np.isin(x.times, times))
    assert val.shape == (times.size, 2, 3)
    ref = riemann_cross(y, x, [0.0, 1.0], fine=20000)
    np.testing.assert_allclose(val[-1], ref, atol=1e-6)


def test_integration_by_parts():
    rng = np.random.default_rng(4)
    t = np.linspace(0, 1, 15)
    x = PointPath(t, np.cumsum(np.r_[np.zeros((1, 2)), rng.normal(size=(14, 2))], axis=0))
    y = PointPath(t, np.cumsum(np.r_[np.zeros((1, 2)), rng.normal(size=(14, 2))], axis=0))
    _, xy = young_cross(x, y)
    _, yx = young_cross(y, x)
    np.testing.assert_allclose(xy[-1] + yx[-1].T, np.outer(x.points[-1], y.points[-1]), atol=1e-12)


def test_pair_lift_of_own_lift_is_doubled_signature():
    rng = np.random.default_rng(5)
    x = random_path(rng, 12, 2)
    z = pair_lift(x, sig_pwl(x))
    doubled = sig_pwl(PointPath(x.times, np.hstack([x.points, x.points])))
    for k in range(3):
        np.testing.assert_allclose(z.levels[k], doubled.levels[k], atol=1e-12)
    np.testing.assert_allclose(diag_lift(sig_pwl(x)).levels[2], doubled.levels[2], atol=1e-12)


def test_pair_lift_cross_block():
    t = np.linspace(0, 1, 9)
    x = PointPath(t, np.outer(t, [1.0, 0.0]))
    y = sig_pwl(PointPath(t, np.outer(t, [0.0, 1.0])))
    z = pair_lift(x, y).level2[-1]
    np.testing.assert_allclose(z[:2, 2:], [[0.0, 0.5], [0.0, 0.0]], atol=1e-15)


def test_pair_lift_blocks_and_zero_path():
    rng = np.random.default_rng(6)
    t = np.linspace(0, 1, 17)
    xn = random_path(rng, 4, 2)
    y = reference_lift(sample_bm(1, 4, 2))
    z = pair_lift(xn, y)
    np.testing.assert_array_equal(z.level1[:, 2:], y.level1)
    np.testing.assert_array_equal(z.level2[:, 2:, 2:], y.level2)
    sx = sig_pwl(xn.resample(t))
    np.testing.assert_allclose(z.level2[:, :2, :2], sx.level2, atol=1e-12)
    zero = pair_lift(PointPath([0.0, 1.0], np.zeros((2, 2))), y)
    assert np.all(zero.level2[:, :2, 2:] == 0.0) and np.all(zero.level2[:, 2:, :2] == 0.0)
    np.testing.assert_array_equal(zero.level2[:, 2:, 2:], y.level2)


def test_pair_lift_errors():
    y = reference_lift(sample_bm(1, 3, 2))
    with pytest.raises(ShapeError):
        pair_lift(PointPath([0.0, 0.3, 1.0], np.zeros((3, 2))), y)
    with pytest.raises(ShapeError):
        pair_lift(PointPath([0.0, 1.0], np.zeros((2, 3))), y)
    with pytest.raises(DomainError):
        diag_lift(sig_pwl(PointPath([0.0, 1.0], np.zeros((2, 2))), 3))


def test_diag_lift_blocks():
    y = reference_lift(sample_bm(2, 5, 2))
    z = diag_lift(y)
    np.testing.assert_array_equal(z.level1, np.hstack([y.level1, y.level1]))
    for a in (slice(0, 2), slice(2, 4)):
        for b in (slice(0, 2), slice(2, 4)):
            np.testing.assert_array_equal(z.level2[:, a, b], y.level2)


def test_diag_equals_pair_on_pwl_lift():
    rng = np.random.default_rng(7)
    x = random_path(rng, 16, 3)
    y = sig_pwl(x)
    for k in range(3):
        np.testing.assert_allclose(diag_lift(y).levels[k], pair_lift(x, y).levels[k], atol=1e-10)


def test_self_lift_diagnostics_vanish():
    rng = np.random.default_rng(8)
    x = random_path(rng, 32, 2)
    rep = good_seq_diag(x, sig_pwl(x), 2.5)
    for a in (rep.a1, rep.a2, rep.a3, rep.a4):
        assert a <= 1e-12


def test_pure_area_negative_control():
    x = pure_area(33)
    for n in (4, 8, 32):
        xn = PointPath(np.linspace(0, 1, n + 1), np.zeros((n + 1, 2)))
        rep = good_seq_diag(xn, x, 2.5)
        assert rep.a1 == 0.0
        for a in (rep.a2, rep.a3, rep.a4):
            assert a == pytest.approx(math.sqrt(2.0), abs=1e-9)
        assert rep.a3 <= rep.a3_bound + 1e-9
        assert rep.combined == pytest.approx(2.0**0.25, abs=1e-9)


def brute_diagnostics(xn, x, p):
    # pairwise evaluation straight from the pair lift blocks
    z = pair_lift(xn, x)
    d = x.dim
    t = x.times
    out = np.zeros(4)
    for i in range(len(x)):
        for j in range(i + 1, len(x)):
            g = increment(z, i, j)
            w = (t[j] - t[i]) ** (1 / p)
            l1, l2 = g[1], g[2]
            ref = l2[d:, d:]
            out[0] = max(out[0], np.linalg.norm(l1[:d] - l1[d:]) / w)
            out[1] = max(out[1], np.linalg.norm(l2[:d, :d] - ref) / w**2)
            out[2] = max(out[2], np.linalg.norm(l2[:d, d:] - ref) / w**2)
            out[3] = max(out[3], np.linalg.norm(l2[d:, :d] - ref) / w**2)
    return out


def test_diagnostics_match_pairwise_oracle():
    b = sample_bm(3, 6, 2)
    x = reference_lift(b)
    xn = linear_approx(b, Subdivision.dyadic(3))
    rep = good_seq_diag(xn, x, 2.5)
    np.testing.assert_allclose([rep.a1, rep.a2, rep.a3, rep.a4], brute_diagnostics(xn, x, 2.5), rtol=1e-10)


def test_full_distance_matches_modulus_of_lifts():
    b = sample_bm(4, 7, 2)
    x = reference_lift(b)
    for n in (2, 4):
        xn = linear_approx(b, Subdivision.dyadic(n))
        rep = good_seq_diag(xn, x, 2.5)
        direct = dist_modulus(pair_lift(xn, x), diag_lift(x), 2.5)
        assert rep.distance == pytest.approx(direct, rel=1e-9)


def test_a3_bound_on_brownian_reports():
    for seed in range(5):
        b = sample_bm(seed, 8, 2)
        x = reference_lift(b)
        for n in (2, 4, 6):
            rep = good_seq_diag(linear_approx(b, Subdivision.dyadic(n)), x, 2.5)
            assert rep.a3 <= rep.a3_sharp_bound + 1e-9
            assert rep.a3 <= rep.a3_bound + 1e-9


def test_diagnostics_stride_and_mesh():
    b = sample_bm(5, 8, 2)
    x = reference_lift(b)
    xn = linear_approx(b, Subdivision.dyadic(3))
    rep = good_seq_diag(xn, x, 2.5, stride=4)
    assert rep.grid_size == 65 and rep.stride == 4 and rep.mesh == 0.125
    full = good_seq_diag(xn, x, 2.5)
    assert rep.a1 <= full.a1 + 1e-15
