import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from lorentz_tori import DomainError, FourierMode, TorusModel
from lorentz_tori.separation import (AlmostMaximalSpec, CausalPath, broken_path_maximize,
                                     burago_split, is_F_almost_maximal, is_G_eps_timelike,
                                     segment_lengths, separable_oracle_1p1, solver_tolerance, time_separation)

SQRT3 = math.sqrt(3.0)


@pytest.mark.parametrize("N", [1, 4, 9])
def test_flat_broken_path_is_straight(flat2, N):
    y = np.array([5.0, 2.0])
    path = broken_path_maximize(flat2, [0, 0], y, N)
    assert path.length == pytest.approx(math.sqrt(21), rel=1e-12)
    assert np.allclose(path.nodes, np.linspace(0, 1, N + 1)[:, None] * y, atol=1e-9)


def test_single_segment_is_chord_quadrature(single_mode):
    y = np.array([0.3, 0.1])
    path = broken_path_maximize(single_mode, [0, 0], y, 1)
    assert len(path.nodes) == 2
    assert path.length == segment_lengths(single_mode, np.array([[0.0, 0.0], y]))[0]
    f = lambda s: float(single_mode.f(s * y))  # noqa: E731
    exact = quad(f, 0, 1, epsabs=1e-14)[0] * float(single_mode.space.magnitude(y))
    assert path.length == pytest.approx(exact, rel=1e-4)


def test_single_mode_sandwich_example(single_mode):
    path = broken_path_maximize(single_mode, [0, 0], [3.0, 1.0], 16)
    lo, hi = 0.7 * math.sqrt(8), 1.3 * math.sqrt(8)
    assert lo <= path.length <= hi


def test_broken_path_rejects_acausal(single_mode):
    with pytest.raises(DomainError):
        broken_path_maximize(single_mode, [0, 0], [1.0, 3.0], 8)


def test_time_separation_examples(flat2, single_mode):
    est = time_separation(flat2, [0, 0], [2, 1])
    assert est.lower == pytest.approx(SQRT3, rel=1e-14) and est.upper == pytest.approx(SQRT3)
    est = time_separation(single_mode, [0, 0], [1, 2])
    assert (est.lower, est.upper, est.tag) == (0.0, 0.0, "acausal")
    est = time_separation(single_mode, [0, 0], [1, 1])
    assert est.lower == 0.0 and est.tag == "lightlike"
    est = time_separation(single_mode, [0.2, 0.1], [4.2, 1.6])
    assert 0 <= est.lower <= est.upper
    assert est.upper == pytest.approx(1.3 * math.sqrt(16 - 2.25))


def test_reverse_triangle_on_maximizer(single_mode):
    x, z = np.zeros(2), np.array([6.0, 2.0])
    xz = time_separation(single_mode, x, z)
    y = xz.path.nodes[len(xz.path.nodes) // 3]
    tol = solver_tolerance(single_mode, z - x)
    xy = time_separation(single_mode, x, y)
    yz = time_separation(single_mode, y, z)
    assert xz.lower >= xy.lower + yz.lower - 2 * tol


def test_oracle_examples(flat2, single_mode):
    assert separable_oracle_1p1(flat2.factor, [0, 0], [2, 1]) == pytest.approx(SQRT3, rel=1e-12)
    expected = 2.5 + 0.3 / (2 * math.pi) * math.sin(2 * math.pi * 2.5)
    assert separable_oracle_1p1(single_mode.factor, [0, 0], [2.5, 0]) == pytest.approx(
        expected, rel=1e-12)
    with pytest.raises(DomainError):
        separable_oracle_1p1(single_mode.factor, [0, 0], [1, 1])
    with pytest.raises(ValueError):
        bumpy = TorusModel.build(2, 1.0, [FourierMode((1, 1), 0.2)])
        separable_oracle_1p1(bumpy.factor, [0, 0], [2, 1])


def test_oracle_agrees_with_variational_solver(single_mode):
    exact = separable_oracle_1p1(single_mode.factor, [0, 0], [4, 1])
    path = broken_path_maximize(single_mode, [0, 0], [4, 1], 32)
    assert path.length == pytest.approx(exact, rel=1e-3)
    assert time_separation(single_mode, [0, 0], [4, 1]).lower == pytest.approx(exact, rel=1e-6)


def test_path_csv(single_mode):
    path = broken_path_maximize(single_mode, [0, 0], [3.0, 1.0], 8)
    buf = io.StringIO()
    path.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "node,x_1,x_2,segment_margin,cum_length"
    assert len(lines) == 10  # header plus N + 1 nodes
    assert np.all(path.margins > 0)
    with pytest.raises(DomainError):
        CausalPath.from_nodes(single_mode, [[0, 0], [1, 2]])


def test_G_eps_timelike():
    space = TorusModel.flat(2).space
    line = np.linspace(0, 2, 21)[:, None] * np.array([1.0, 0.0])
    assert is_G_eps_timelike(line, space, 1.0, 0.5)
    assert is_G_eps_timelike(line, space, 0.0, 0.5)
    assert not is_G_eps_timelike(line, space, 3.0, 0.5)
    null = np.linspace(0, 2, 21)[:, None] * np.array([1.0, 1.0])
    assert not is_G_eps_timelike(null, space, 0.0, 0.1)


def test_F_almost_maximal(flat2, single_mode):
    line = np.linspace(0, 1, 11)[:, None] * np.array([3.0, 1.0])
    ok, deficit = is_F_almost_maximal(line, flat2, 0.0, probes=6)
    assert ok and abs(deficit) < 1e-12
    zig = np.array([[0.0, 0.0], [1.5, 1.2], [3.0, 0.0]])
    ok, deficit = is_F_almost_maximal(zig, flat2, 0.0, probes=20)
    legs = 2 * math.sqrt(1.5 ** 2 - 1.2 ** 2)
    assert not ok and deficit == pytest.approx(3.0 - legs)
    path = time_separation(single_mode, [0, 0], [5.0, 1.0]).path
    ok, deficit = is_F_almost_maximal(path, single_mode, 1.0, probes=4, seed=3)
    assert deficit >= -2 * solver_tolerance(single_mode, np.array([5.0, 1.0]))


def test_almost_maximal_parameters():
    AlmostMaximalSpec(0.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        AlmostMaximalSpec(0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        AlmostMaximalSpec(math.inf, 1.0, 0.1)


def test_burago_straight_segment():
    P = np.array([[0.0, 0.0], [2.0, 1.0]])
    res = burago_split(P)
    assert res.success and res.k == 1
    (s, t), = res.intervals
    assert res.residual < 1e-12
    assert t - s == pytest.approx(0.5)


def test_burago_circle_arc():
    th = np.linspace(0, math.pi, 400)
    P = np.stack([np.cos(th), np.sin(th)], axis=1)
    res = burago_split(P, tol=1e-6)
    assert res.success
    # independent oracle: dense 2-parameter scan over chord endpoints
    (s, t), = res.intervals
    a, b = s * math.pi, t * math.pi
    chord = np.array([math.cos(b) - math.cos(a), math.sin(b) - math.sin(a)])
    assert np.linalg.norm(chord - 0.5 * (P[-1] - P[0])) < 1e-3
    g = np.linspace(0, math.pi, 1001)
    A, B = np.meshgrid(g, g, indexing="ij")
    r = np.hypot(np.cos(B) - np.cos(A) + 1.0, np.sin(B) - np.sin(A))
    assert r.min() < 1e-2


def test_burago_reports_failure():
    P = np.random.default_rng(0).normal(size=(30, 3))
    res = burago_split(P, k=1, tol=1e-12)
    assert res.residual > 1e-12 or res.success
    if not res.success:
        assert res.notes


@settings(max_examples=15, deadline=None)
@given(st.floats(1.0, 10.0), st.floats(-0.6, 0.6), st.floats(0, 1), st.floats(0, 1))
def test_sandwich_property(T, slope, x0, x1):
    model = TorusModel.build(2, 1.0, [FourierMode((1, 0), 0.2, 0.0), FourierMode((0, 1), 0.1, 0.05)])
    v = np.array([T, slope * T])
    x = np.array([x0, x1])
    est = time_separation(model, x, x + v)
    mag = float(model.space.magnitude(v))
    assert model.factor.inf_bound * mag - est.solver_tol <= est.lower
    assert est.lower <= model.factor.sup_bound * mag + 1e-12
