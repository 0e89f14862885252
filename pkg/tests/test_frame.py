from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from longdisp.certified import CReal
from longdisp.config import engine_fit
from longdisp.frame import (INSIDE, OUTSIDE, FrameError, b2_contains, b2_contains_eta, boundary_diagnostic,
                            boundary_point, build_frame, cylinder_equal_check, f2_inverse, f2_map,
                            frame_identities, image_geometry, isometry_defect, quad_coefficients,
                            quad_value, rect_k, rect_valid)
from longdisp.lattice import lower_rational
from longdisp.norms import NormSpec, normalize_a1

FIT1 = normalize_a1(engine_fit(NormSpec.euclidean()))[1]


@pytest.fixture(scope="module")
def unit_frame():
    """q = 1, L = 1, H = 1 and c = 1."""
    return build_frame((1, 0, 0), (0, 1, 0), (0, 0, 1), 1, FIT1)


def close(x: CReal, y, tol=1e-30) -> bool:
    return abs(float((x - y).approx(200))) < tol


def test_unit_frame_quantities(unit_frame):
    f = unit_frame
    assert (f.q, f.L2, f.c) == (1, 1, 1)
    assert close(f.H, 1)


def test_build_frame_example():
    f = build_frame((1, 0, 0), (0, 5, 1), (0, 4, 1), 1, FIT1)
    assert f.L2 == 26 and f.q == 1
    assert all(r == 0 for r in frame_identities(f).values())


def test_build_frame_rejects_bad_input():
    with pytest.raises(FrameError):
        build_frame((1, 0, 0), (0, 1, 0), (0, 2, 0), 1, FIT1)
    with pytest.raises(FrameError):
        build_frame((1, 0, 0), (0, 1, 0), (0, 0, 1), 0, FIT1)
    with pytest.raises(FrameError):
        build_frame((1, 0, 0), (2, 1, 0), (0, 0, 1), 1, FIT1)


def test_fixture_frames_are_consistent(frames):
    assert len(frames) >= 20
    for _, _, f in frames:
        assert all(r == 0 for r in frame_identities(f).values())
        qLH = f.q * f.L * f.H
        assert float(abs(qLH - 1).upper(128)) < 1e-20


def test_frames_are_isometries(frames):
    rng = np.random.default_rng(9)
    for _, _, f in frames:
        for _ in range(100 // 4):
            s = [Fraction(int(x), 97) for x in rng.integers(-500, 500, 2)]
            t = [Fraction(int(x), 89) for x in rng.integers(-500, 500, 2)]
            assert isometry_defect(f, s, t) == 0


def test_f2_examples(unit_frame):
    x, y, h = f2_map(1, 1, unit_frame)
    assert close(x, 2) and close(y, 1) and close(h, 1)
    x, y, _ = f2_map(0, 1, unit_frame)
    assert close(x, 1) and close(y, 0)
    a, b = f2_inverse(2, 1, unit_frame)
    assert close(a, 1) and close(b, 1)
    a, b = f2_inverse(1, 0, unit_frame)
    assert close(a, 0) and close(b, 1)


@settings(max_examples=60, deadline=None)
@given(st.fractions(-20, 20, max_denominator=1000), st.fractions(Fraction(1, 100), 20, max_denominator=1000),
       st.integers(0, 19))
def test_f2_round_trip(frames, x, y, idx):
    # hypothesis and the session fixture: the fixture is read only
    f = frames[idx][2]
    xs = x * f.q
    xp, yp, _ = f2_map(xs, y, f)
    a, b = f2_inverse(xp, yp, f)
    assert close(a - xs, 0, 1e-25 * max(1, abs(float(xs)))) and close(b - y, 0, 1e-25 * float(y))


def test_quad_coefficients_match_definition(frames):
    rng = np.random.default_rng(12)
    for _, _, f in frames[:6]:
        x, y = Fraction(int(rng.integers(1, 100)), 7), Fraction(int(rng.integers(1, 100)), 11)
        ass, asi, aii, k = quad_coefficients(f, x, y)
        for s, i in ((0, 1), (1, 1), (-2, 3), (5, -1)):
            lhs = ass * s * s + 2 * asi * s * i + aii * i * i + k
            rhs = quad_value(f, x, y, s, i)
            assert float(abs(lhs - rhs).upper(200)) <= 1e-30 * max(1.0, float(abs(rhs).upper(64)))


def test_b2_along_the_boundary_ray(frames):
    for _, _, f in frames:
        bx, by = boundary_point(f)
        for t in (Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)):
            assert b2_contains(t * bx, t * by, f) == INSIDE
        assert b2_contains(bx, by, f) != INSIDE
        for t in (Fraction(101, 100), Fraction(11, 10)):
            assert b2_contains(t * bx, t * by, f) == OUTSIDE


def test_b2_shear_invariance(frames):
    rng = np.random.default_rng(21)
    for _, _, f in frames[:8]:
        bx, by = boundary_point(f)
        eta0 = lower_rational(by / f.L)
        x0 = lower_rational(bx)
        for _ in range(15):
            eta = eta0 * Fraction(int(rng.integers(50, 150)), 100)
            x = x0 * Fraction(int(rng.integers(0, 300)), 100)
            base = b2_contains_eta(f, x, eta)
            for k in range(-2, 3):
                assert b2_contains_eta(f, x + k * f.q * eta, eta) == base


def test_boundary_diagnostic_examples():
    assert boundary_diagnostic(Fraction(4, 3), 1, 1).exact == 0
    assert boundary_diagnostic(Fraction(4, 3), 2, 1).exact == 2
    assert boundary_diagnostic(2, 1, 1).exact == 0
    # non-negative on the rows i >= 1 that bound B2
    for s in range(-3, 4):
        for i in range(1, 4):
            assert boundary_diagnostic(Fraction(4, 3), s, i).exact >= 0


def _tau(f, t0):
    kappa = (4 * f.c / (4 * f.D2 - 1)).sqrt()
    return lower_rational(t0 * kappa, 64)


def test_rect_validity_and_shrinking_heights(frames):
    for engine, _, f in frames[:6]:
        tau = _tau(f, Fraction(1, 2))
        eps = engine.find_eps(f, tau)
        assert eps is not None
        rects = [rect_k(f, tau, eps, k) for k in range(4)]
        assert rect_valid(f, rects[0])
        deltas = [float(r.delta(f)) for r in rects]
        assert all(a > b for a, b in zip(deltas, deltas[1:]))
        for r in rects:
            assert r.eta_low < r.tau


def test_wide_rect_near_the_boundary_is_invalid(frames):
    # below height sqrt(c)/D no row constrains B2, so test just under the tip
    for engine, _, f in frames[:6]:
        tau = _tau(f, Fraction(99, 100))
        eps = engine.find_eps(f, tau)
        X0 = rect_k(f, tau, eps, 0).X
        assert eps is not None and eps < X0
        assert not rect_valid(f, rect_k(f, tau, X0, 0))


def test_image_geometry_matches_f2(frames):
    for engine, _, f in frames[:6]:
        tau = _tau(f, Fraction(1, 2))
        eps = engine.find_eps(f, tau)
        r0, r1 = rect_k(f, tau, eps, 0), rect_k(f, tau, eps, 1)
        geom = image_geometry(f, r0)
        c = r0.corners(f)
        top = f2_map(c[0][0], c[0][1], f)[1]
        left = f2_map(c[2][0], c[2][1], f)[1]
        assert close((top - left) - geom["height"], 0, 1e-25 * float(geom["height"]))
        nxt = f2_map(r1.corners(f)[0][0], r1.corners(f)[0][1], f)[1]
        assert close((nxt - top) - geom["step"], 0, 1e-25 * float(geom["step"]))
        # the width falls briefly at small k, then grows without bound
        widths = []
        for k in (2, 5, 10, 20, 40):
            xs = [float(f2_map(a, b, f)[0]) for a, b in rect_k(f, tau, eps, k).corners(f)]
            widths.append(max(xs) - min(xs))
        assert all(a < b for a, b in zip(widths, widths[1:]))
        assert widths[-1] > 10 * widths[0]


def test_equal_cylinders(frames):
    for _, _, f in frames[::4]:
        bx, by = boundary_point(f)
        rep = cylinder_equal_check(f, float(bx) / 2, float(by) / 2, probes=1000)
        assert rep["disagreements"] == 0
        assert rep["volume_rel_error"] <= 0.05
        assert rep["axis_gap"] < 1e-9 and rep["length_gap"] < 1e-9 and rep["radius_gap"] < 1e-9
