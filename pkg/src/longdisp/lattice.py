"""Small exact lattice algorithms in three dimensions.

LLL reduction of a rational Gram matrix and Fincke-Pohst enumeration of
integer points in an ellipsoid.  Used to list the integer points of thin
cylinders whose length is far too large to scan.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

from .certified import CReal
from .norms import EllipseFit, NormSpec
from .oracle import CylinderPoint

Matrix = list[list[Fraction]]


def egcd(a: int, b: int) -> tuple[int, int, int]:
    """``(g, x, y)`` with ``a x + b y = g = gcd(a, b)``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        k, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def det3(rows: Sequence[Sequence[int]]) -> int:
    (a, b, c), (d, e, f), (g, h, i) = rows
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def _gram_of(basis: list[list[int]], G: Matrix) -> Matrix:
    n = len(basis)
    out = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        gi = [sum(G[r][s] * basis[i][s] for s in range(n)) for r in range(n)]
        for j in range(i, n):
            out[i][j] = out[j][i] = sum(basis[j][r] * gi[r] for r in range(n))
    return out


def _gso(gram: Matrix) -> tuple[Matrix, list[Fraction]]:
    n = len(gram)
    mu = [[Fraction(0)] * n for _ in range(n)]
    bstar = [Fraction(0)] * n
    for i in range(n):
        for j in range(i):
            s = gram[i][j] - sum(mu[j][k] * mu[i][k] * bstar[k] for k in range(j))
            mu[i][j] = s / bstar[j]
        bstar[i] = gram[i][i] - sum(mu[i][k] ** 2 * bstar[k] for k in range(i))
        if bstar[i] <= 0:
            raise ValueError("Gram matrix is not positive definite")
    return mu, bstar


def lll_gram(G: Matrix, delta: Fraction = Fraction(3, 4)) -> list[list[int]]:
    """LLL-reduce the standard basis with respect to the form ``G``.

    Returns the reduced basis as integer row vectors.
    """
    n = len(G)
    basis = [[int(i == j) for j in range(n)] for i in range(n)]
    k = 1
    while k < n:
        gram = _gram_of(basis, G)
        mu, bstar = _gso(gram)
        for j in range(k - 1, -1, -1):
            r = round(mu[k][j])
            if r:
                basis[k] = [basis[k][t] - r * basis[j][t] for t in range(n)]
                gram = _gram_of(basis, G)
                mu, bstar = _gso(gram)
        if bstar[k] >= (delta - mu[k][k - 1] ** 2) * bstar[k - 1]:
            k += 1
        else:
            basis[k], basis[k - 1] = basis[k - 1], basis[k]
            k = max(k - 1, 1)
    return basis


def _isqrt_up(x: Fraction, bits: int = 64) -> Fraction:
    """A rational upper bound for ``sqrt(x)``."""
    if x <= 0:
        return Fraction(0)
    scaled = x * (1 << (2 * bits))
    top = -((-scaled.numerator) // scaled.denominator)
    return Fraction(math.isqrt(top) + 1, 1 << bits)


def ellipsoid_points(G: Matrix, center: Sequence[Fraction], bound: Fraction) -> list[tuple[int, ...]]:
    """All integer ``x`` with ``(x - c)^T G (x - c) <= bound``."""
    n = len(G)
    basis = lll_gram(G)
    gram = _gram_of(basis, G)
    mu, bstar = _gso(gram)
    # express the centre in the reduced basis: solve B^T y = c
    B = [[Fraction(basis[i][j]) for j in range(n)] for i in range(n)]
    c = _solve_transpose(B, [Fraction(x) for x in center])
    found: list[tuple[int, ...]] = []
    y = [0] * n

    def rec(level: int, remaining: Fraction) -> None:
        # centre of coordinate `level` given the deeper ones
        ctr = c[level] - sum(mu[j][level] * (y[j] - c[j]) for j in range(level + 1, n))
        rad = _isqrt_up(remaining / bstar[level])
        lo = math.ceil(ctr - rad)
        hi = math.floor(ctr + rad)
        for t in range(lo, hi + 1):
            rest = remaining - bstar[level] * (t - ctr) ** 2
            if rest < 0:
                continue
            y[level] = t
            if level == 0:
                x = tuple(sum(y[i] * basis[i][j] for i in range(n)) for j in range(n))
                found.append(x)
            else:
                rec(level - 1, rest)
        y[level] = 0

    rec(n - 1, Fraction(bound))
    return sorted(set(found))


def _solve_transpose(B: Matrix, c: list[Fraction]) -> list[Fraction]:
    """Solve ``sum_i y_i B[i] = c`` by Gaussian elimination."""
    n = len(B)
    A = [[B[i][j] for i in range(n)] + [c[j]] for j in range(n)]
    for col in range(n):
        piv = next(r for r in range(col, n) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col] / A[col][col]
                A[r] = [A[r][t] - f * A[col][t] for t in range(n + 1)]
    return [A[i][n] / A[i][i] for i in range(n)]


def cylinder_points_enum(norm: NormSpec, fit: EllipseFit, v: Sequence, length: int,
                         ref: Sequence) -> list[CylinderPoint]:
    """Integer points of ``{0 <= a <= length, ||a v - y|| <= ||ref||}``.

    The cylinder sits inside the ellipsoid
    ``(2a/length - 1)^2 + E(a v - y)^2 / R^2 <= 2`` where ``E`` is the lower
    ellipse of ``fit`` and ``R`` bounds ``||ref||``; the ellipsoid points are
    enumerated and then filtered with the exact norm.
    """
    vx, vy = Fraction(v[0]), Fraction(v[1])
    ref = (Fraction(ref[0]), Fraction(ref[1]))
    a = fit.a.lower(96) if not fit.a.is_exact else fit.a.exact
    c = fit.c.lower(96) if not fit.c.is_exact else fit.c.exact
    r2 = norm.square(ref)
    R2 = r2.exact if r2.is_exact else r2.upper(96)
    if R2 == 0:
        raise ValueError("degenerate cylinder radius")
    E = Fraction(length)
    # rows of the linear map whose squared length is the form
    rows = [
        [2 / E, Fraction(0), Fraction(0)],
        [vx, Fraction(-1), Fraction(0)],
        [vy, Fraction(0), Fraction(-1)],
    ]
    w = [Fraction(1), a / R2, c / R2]
    G = [[sum(w[k] * rows[k][i] * rows[k][j] for k in range(3)) for j in range(3)]
         for i in range(3)]
    center = [E / 2, E * vx / 2, E * vy / 2]
    out = []
    for al, y1, y2 in ellipsoid_points(G, center, Fraction(2)):
        if not 0 <= al <= length:
            continue
        off = (al * vx - y1, al * vy - y2)
        s = norm.compare(off, ref)
        if s <= 0:
            out.append(CylinderPoint(al, (y1, y2), s < 0 and 0 < al < length))
    out.sort(key=lambda pt: (pt.alpha, pt.y))
    return out


def lower_rational(x: CReal, bits: int = 96) -> Fraction:
    return x.exact if x.is_exact else x.lower(bits)
