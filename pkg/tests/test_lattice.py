from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from longdisp.lattice import cylinder_points_enum, det3, egcd, ellipsoid_points, lll_gram
from longdisp.norms import NormSpec, preset_fit
from longdisp.oracle import cylinder_points_scan, random_rationals


@given(st.integers(-10 ** 9, 10 ** 9), st.integers(-10 ** 9, 10 ** 9))
def test_egcd_bezout(a, b):
    g, x, y = egcd(a, b)
    assert g == math.gcd(a, b)
    assert a * x + b * y == g


def test_det3_examples():
    assert det3([(1, 0, 0), (0, 1, 0), (0, 0, 1)]) == 1
    assert det3([(1, 0, 0), (0, 5, 1), (0, 4, 1)]) == 1
    assert det3([(1, 2, 3), (2, 4, 6), (0, 0, 1)]) == 0


def _form(basis, G):
    return [[sum(basis[i][k] * G[k][l] * basis[j][l] for k in range(3) for l in range(3))
             for j in range(3)] for i in range(3)]


def test_lll_is_unimodular_and_shortens():
    G = [[Fraction(1), Fraction(1000), Fraction(0)],
         [Fraction(1000), Fraction(1000001), Fraction(0)],
         [Fraction(0), Fraction(0), Fraction(1)]]
    B = lll_gram(G)
    assert abs(det3(B)) == 1
    R = _form(B, G)
    assert max(R[i][i] for i in range(3)) <= 2


def brute_ellipsoid(G, center, bound, box):
    out = []
    for x in itertools.product(range(-box, box + 1), repeat=3):
        d = [Fraction(x[i]) - center[i] for i in range(3)]
        if sum(d[i] * G[i][j] * d[j] for i in range(3) for j in range(3)) <= bound:
            out.append(x)
    return sorted(out)


entries = st.fractions(-3, 3, max_denominator=7)


@settings(max_examples=40, deadline=None)
@given(st.lists(entries, min_size=9, max_size=9), st.lists(entries, min_size=3, max_size=3),
       st.fractions(1, 6, max_denominator=5))
def test_ellipsoid_points_match_brute_force(m, center, bound):
    A = [m[0:3], m[3:6], m[6:9]]
    # G = A^T A + I is positive definite with smallest eigenvalue >= 1
    G = [[sum(A[k][i] * A[k][j] for k in range(3)) + (i == j) for j in range(3)] for i in range(3)]
    assert ellipsoid_points(G, center, bound) == brute_ellipsoid(G, center, bound, 6)


def test_enumeration_matches_scan_on_random_cylinders():
    rng = np.random.default_rng(4)
    for norm in (NormSpec.euclidean(), NormSpec.maximum(), NormSpec.p_norm(3)):
        fit = preset_fit(norm)
        for v in random_rationals(rng, 8, 16):
            length = int(rng.integers(50, 400))
            ref = (Fraction(int(rng.integers(1, 30)), 100), Fraction(int(rng.integers(1, 30)), 100))
            scan = cylinder_points_scan(norm, v, length, ref)
            enum = cylinder_points_enum(norm, fit, v, length, ref)
            assert scan == enum
