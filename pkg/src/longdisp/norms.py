"""Planar norms and their diagonal ellipse sandwiches.

A fit ``(a, c, D)`` means ``E(u) <= ||u|| <= D * E(u)`` for all ``u``,
where ``E(u) = sqrt(a u1^2 + c u2^2)``.  The figure of merit of a fit is
``M = (4ac / (4D^2 - 1)) ** (1/4)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .certified import CReal, PrecisionError, parse_rational, rational_str

Vec = tuple[Fraction, Fraction]

KINDS = ("euclidean", "maximum", "p_norm", "ellipse", "polygon")


class UnsupportedNormError(ValueError):
    """Raised when an operation has no closed form for the given norm."""


def _frac_vec(u: Sequence[Any]) -> Vec:
    return (Fraction(u[0]), Fraction(u[1]))


def two_power(r: Fraction) -> CReal:
    """``2 ** r`` for rational ``r``."""
    r = Fraction(r)
    if r >= 0:
        return CReal.of(2 ** r.numerator).root(r.denominator)
    return 1 / CReal.of(2 ** (-r.numerator)).root(r.denominator)


@dataclass(frozen=True)
class NormSpec:
    """A norm on the plane with exact evaluation on rational vectors."""

    kind: str
    p: Fraction | None = None
    a: Fraction | None = None
    c: Fraction | None = None
    vertices: tuple[Vec, ...] = ()
    _facets: tuple[Vec, ...] = field(default=(), compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "p_norm":
            if self.p is None or self.p < 1:
                raise ValueError("p_norm needs a rational p >= 1")
        if self.kind == "ellipse":
            if self.a is None or self.c is None or self.a <= 0 or self.c <= 0:
                raise ValueError("ellipse needs positive rational a and c")
        if self.kind == "polygon":
            object.__setattr__(self, "_facets", _polygon_facets(self.vertices))

    # construction -------------------------------------------------------
    @staticmethod
    def euclidean() -> "NormSpec":
        return NormSpec("euclidean")

    @staticmethod
    def maximum() -> "NormSpec":
        return NormSpec("maximum")

    @staticmethod
    def p_norm(p: Any) -> "NormSpec":
        return NormSpec("p_norm", p=parse_rational(p))

    @staticmethod
    def ellipse(a: Any, c: Any) -> "NormSpec":
        return NormSpec("ellipse", a=parse_rational(a), c=parse_rational(c))

    @staticmethod
    def polygon(vertices: Sequence[Sequence[Any]]) -> "NormSpec":
        vs = tuple((parse_rational(x), parse_rational(y)) for x, y in vertices)
        return NormSpec("polygon", vertices=vs)

    @staticmethod
    def from_json(obj: dict[str, Any]) -> "NormSpec":
        kind = obj.get("kind")
        if kind == "euclidean":
            return NormSpec.euclidean()
        if kind == "maximum":
            return NormSpec.maximum()
        if kind == "p_norm":
            return NormSpec.p_norm(obj["p"])
        if kind == "ellipse":
            return NormSpec.ellipse(obj["a"], obj["c"])
        if kind == "polygon":
            return NormSpec.polygon(obj["vertices"])
        raise ValueError(f"unknown norm kind {kind!r}")

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "p_norm":
            out["p"] = rational_str(self.p)
        elif self.kind == "ellipse":
            out["a"], out["c"] = rational_str(self.a), rational_str(self.c)
        elif self.kind == "polygon":
            out["vertices"] = [[rational_str(x), rational_str(y)] for x, y in self.vertices]
        return out

    @property
    def name(self) -> str:
        if self.kind == "p_norm":
            return f"p_norm(p={rational_str(self.p)})"
        if self.kind == "ellipse":
            return f"ellipse(a={rational_str(self.a)}, c={rational_str(self.c)})"
        return self.kind

    # evaluation ---------------------------------------------------------
    def key(self, u: Sequence[Any]) -> Fraction | None:
        """An exact value that is a strictly increasing function of the norm.

        Returns ``None`` when no such rational key exists (fractional p).
        """
        x, y = _frac_vec(u)
        k = self.kind
        if k == "euclidean":
            return x * x + y * y
        if k == "ellipse":
            return self.a * x * x + self.c * y * y
        if k == "maximum":
            return max(abs(x), abs(y))
        if k == "polygon":
            return max(h[0] * x + h[1] * y for h in self._facets)
        p = self.p
        if p.denominator == 1:
            e = p.numerator
            return abs(x) ** e + abs(y) ** e
        return None

    def value(self, u: Sequence[Any]) -> CReal:
        x, y = _frac_vec(u)
        k = self.kind
        if k in ("maximum", "polygon"):
            return CReal.of(self.key((x, y)))
        if k in ("euclidean", "ellipse"):
            return CReal.of(self.key((x, y))).sqrt()
        p = self.p
        if p == 1:
            return CReal.of(abs(x) + abs(y))
        if p.denominator == 1:
            return CReal.of(self.key((x, y))).root(p.numerator)
        s = CReal.of(abs(x)).rpow(p) + CReal.of(abs(y)).rpow(p)
        return s.root(p.numerator).__pow__(p.denominator)

    def square(self, u: Sequence[Any]) -> CReal:
        """``||u||^2``, exact whenever possible."""
        k = self.kind
        if k in ("euclidean", "ellipse"):
            return CReal.of(self.key(u))
        if k in ("maximum", "polygon"):
            return CReal.of(self.key(u) ** 2)
        return self.value(u) ** 2

    def compare(self, u: Sequence[Any], w: Sequence[Any]) -> int:
        """Sign of ``||u|| - ||w||``, certified."""
        ku, kw = self.key(u), self.key(w)
        if ku is not None:
            return (ku > kw) - (ku < kw)
        au = sorted((abs(Fraction(u[0])), abs(Fraction(u[1]))))
        aw = sorted((abs(Fraction(w[0])), abs(Fraction(w[1]))))
        if au == aw:
            return 0
        s = (self.value(u) - self.value(w)).sign()
        if s is None:
            raise PrecisionError("norm comparison undecided at the precision cap")
        return s

    def eval_float(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorised floating point evaluation (not certified)."""
        k = self.kind
        if k == "euclidean":
            return np.hypot(x, y)
        if k == "ellipse":
            return np.sqrt(float(self.a) * x * x + float(self.c) * y * y)
        if k == "maximum":
            return np.maximum(np.abs(x), np.abs(y))
        if k == "polygon":
            out = None
            for h in self._facets:
                val = float(h[0]) * x + float(h[1]) * y
                out = val if out is None else np.maximum(out, val)
            return out
        p = float(self.p)
        ax, ay = np.abs(x), np.abs(y)
        m = np.maximum(ax, ay)
        safe = np.where(m > 0, m, 1.0)
        return np.where(m > 0, m * ((ax / safe) ** p + (ay / safe) ** p) ** (1.0 / p), 0.0)

    def coord_bound(self) -> tuple[float, float]:
        """Upper bounds for ``|u_i|`` over the unit ball."""
        k = self.kind
        if k == "ellipse":
            return (1.0 / math.sqrt(float(self.a)) * (1 + 1e-12),
                    1.0 / math.sqrt(float(self.c)) * (1 + 1e-12))
        if k == "polygon":
            bx = max(abs(float(v[0])) for v in self.vertices)
            by = max(abs(float(v[1])) for v in self.vertices)
            return (bx * (1 + 1e-12), by * (1 + 1e-12))
        return (1.0, 1.0)


def _polygon_facets(vertices: Sequence[Vec]) -> tuple[Vec, ...]:
    """Facet functionals ``h`` with ``h . V = 1`` on each edge.

    The vertex list must describe a convex polygon that is symmetric about
    the origin; order does not matter.
    """
    vs = [(Fraction(x), Fraction(y)) for x, y in vertices]
    if len(vs) < 4 or len(set(vs)) != len(vs):
        raise ValueError("polygon needs at least four distinct vertices")
    if set(vs) != {(-x, -y) for x, y in vs}:
        raise ValueError("polygon must be symmetric about the origin")
    vs.sort(key=lambda v: math.atan2(float(v[1]), float(v[0])))
    facets = []
    n = len(vs)
    for i in range(n):
        (x0, y0), (x1, y1) = vs[i], vs[(i + 1) % n]
        cross = x0 * y1 - x1 * y0
        if cross <= 0:
            raise ValueError("polygon vertices are not in strictly convex position")
        facets.append(((y1 - y0) / cross, (x0 - x1) / cross))
    for i in range(n):
        (px, py), (cx, cy), (nx, ny) = vs[i - 1], vs[i], vs[(i + 1) % n]
        if (cx - px) * (ny - cy) - (cy - py) * (nx - cx) <= 0:
            raise ValueError("polygon vertices are not in strictly convex position")
    return tuple(facets)


# ---------------------------------------------------------------------------
# ellipse fits


def ellipse_eval(a: Any, c: Any, u: Sequence[Any]) -> CReal:
    """``sqrt(a u1^2 + c u2^2)``."""
    x, y = _frac_vec(u)
    return (CReal.of(a) * (x * x) + CReal.of(c) * (y * y)).sqrt()


def m_value(a: Any, c: Any, D: Any) -> CReal:
    a, c, D = CReal.of(a), CReal.of(c), CReal.of(D)
    return (4 * a * c / (4 * D * D - 1)).root(4)


def gamma_ellipse(a: Any, c: Any) -> CReal:
    """Best constant for the ellipse norm with parameters ``(a, c)``."""
    return (4 * CReal.of(a) * CReal.of(c) / 3).root(4)


@dataclass(frozen=True)
class EllipseFit:
    a: CReal
    c: CReal
    D: CReal
    certified: bool = True

    @property
    def D2(self) -> CReal:
        return self.D * self.D

    @property
    def M(self) -> CReal:
        return m_value(self.a, self.c, self.D)

    @property
    def kappa(self) -> CReal:
        """``M^2 = sqrt(4ac / (4D^2 - 1))``."""
        return (4 * self.a * self.c / (4 * self.D2 - 1)).sqrt()

    @property
    def unit_area(self) -> CReal:
        """Area of ``{a u1^2 + c u2^2 <= 1}`` divided by pi."""
        return 1 / (self.a * self.c).sqrt()

    def floats(self) -> tuple[float, float, float]:
        return float(self.a), float(self.c), float(self.D)


def preset_fit(norm: NormSpec) -> EllipseFit:
    """Closed-form ellipse fits for the standard norms."""
    k = norm.kind
    one = CReal.of(1)
    if k == "euclidean":
        return EllipseFit(one, one, one)
    if k == "ellipse":
        return EllipseFit(CReal.of(norm.a), CReal.of(norm.c), one)
    if k == "maximum":
        half = CReal.of(Fraction(1, 2))
        return EllipseFit(half, half, CReal.of(2).sqrt())
    if k == "p_norm":
        p = norm.p
        if p == 2:
            return EllipseFit(one, one, one)
        if p > 2:
            a = two_power(2 / p - 1)
            return EllipseFit(a, a, two_power(Fraction(1, 2) - 1 / p))
        return EllipseFit(one, one, two_power(1 / p - Fraction(1, 2)))
    raise UnsupportedNormError(f"no closed-form fit for {norm.name}")


def normalize_a1(fit: EllipseFit) -> tuple[CReal, EllipseFit]:
    """Rescale the norm by ``lam = 1/sqrt(a)`` so the fit has ``a = 1``."""
    lam = 1 / fit.a.sqrt()
    c = CReal.of(1) if fit.c is fit.a else fit.c / fit.a
    return lam, EllipseFit(CReal.of(1), c, fit.D, fit.certified)


def _ratio_extremes(norm: NormSpec, la: float, lc: float, thetas: np.ndarray):
    a, c = math.exp(la), math.exp(lc)
    ux = np.cos(thetas) / math.sqrt(a)
    uy = np.sin(thetas) / math.sqrt(c)
    rho = norm.eval_float(ux, uy)
    return a, c, float(rho.min()), float(rho.max())


def _fit_objective(norm: NormSpec, la: float, lc: float, thetas: np.ndarray) -> float:
    a, c, lo, hi = _ratio_extremes(norm, la, lc, thetas)
    D = hi / lo
    return (4 * a * c * lo ** 4 / (4 * D * D - 1)) ** 0.25


def fit_best_ellipse(norm: NormSpec, samples: int = 4096) -> EllipseFit:
    """Numerical search for the diagonal ellipse with the largest ``M``.

    Coordinate descent on ``(log a, log c)``; ``D`` is the largest ratio
    seen on a boundary sample, inflated by 0.1%.  For ellipse and polygon
    norms the result is then made exact: ``a, c`` are rational and shrunk
    until the lower bound holds, ``D^2`` is rational and raised until the
    upper bound holds.
    """
    thetas = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    x = [0.0, 0.0]
    best = _fit_objective(norm, x[0], x[1], thetas)
    step = 1.0
    while step > 1e-7:
        moved = False
        for i in range(2):
            for sgn in (1.0, -1.0):
                y = list(x)
                y[i] += sgn * step
                val = _fit_objective(norm, y[0], y[1], thetas)
                if val > best * (1 + 1e-15):
                    x, best, moved = y, val, True
        if not moved:
            step /= 2
    a, c, lo, hi = _ratio_extremes(norm, x[0], x[1], thetas)
    a, c = a * lo * lo, c * lo * lo
    D = 1.001 * hi / lo
    if norm.kind not in ("polygon", "ellipse", "euclidean", "maximum"):
        return EllipseFit(CReal.of(Fraction(a)), CReal.of(Fraction(c)),
                          CReal.of(Fraction(D)), certified=False)
    ar = Fraction(a).limit_denominator(10 ** 9)
    cr = Fraction(c).limit_denominator(10 ** 9)
    d2 = Fraction(D * D).limit_denominator(10 ** 9)
    ar, cr, d2 = certify_fit_exact(norm, ar, cr, d2)
    return EllipseFit(CReal.of(ar), CReal.of(cr), CReal.of(d2).sqrt(), certified=True)


def _extreme_points(norm: NormSpec) -> tuple[list[Vec], list[Vec]]:
    """Unit-ball vertices and facet normals for the piecewise linear norms."""
    if norm.kind == "polygon":
        return list(norm.vertices), list(norm._facets)
    if norm.kind == "maximum":
        sq = [(Fraction(sx), Fraction(sy)) for sx in (1, -1) for sy in (1, -1)]
        fac = [(Fraction(1), Fraction(0)), (Fraction(-1), Fraction(0)),
               (Fraction(0), Fraction(1)), (Fraction(0), Fraction(-1))]
        return sq, fac
    raise UnsupportedNormError(norm.name)


def certify_fit_exact(norm: NormSpec, a: Fraction, c: Fraction,
                      d2: Fraction) -> tuple[Fraction, Fraction, Fraction]:
    """Adjust a rational fit until the sandwich provably holds.

    Returns ``(a, c, D^2)`` with ``a, c`` possibly decreased and ``D^2``
    possibly increased.
    """
    k = norm.kind
    if k in ("polygon", "maximum"):
        verts, facets = _extreme_points(norm)
        # lower bound <=> every vertex of the unit ball lies in the ellipse
        s = max(a * x * x + c * y * y for x, y in verts)
        if s > 1:
            a, c = a / s, c / s
        # upper bound <=> the ellipse scaled by 1/D lies in every facet slab
        need = max(h1 * h1 / a + h2 * h2 / c for h1, h2 in facets)
        return a, c, max(d2, need)
    if k in ("euclidean", "ellipse"):
        a0, c0 = (Fraction(1), Fraction(1)) if k == "euclidean" else (norm.a, norm.c)
        # sqrt(a x^2 + c y^2) <= sqrt(a0 x^2 + c0 y^2) <= D sqrt(a x^2 + c y^2)
        s = max(a / a0, c / c0)
        if s > 1:
            a, c = a / s, c / s
        need = max(a0 / a, c0 / c)
        return a, c, max(d2, need)
    raise UnsupportedNormError(f"exact certification not available for {norm.name}")


def sandwich_ratios(norm: NormSpec, fit: EllipseFit, samples: int = 4096) -> tuple[float, float]:
    """Min and max of ``||u|| / E(u)`` on a boundary sample (diagnostic)."""
    a, c, _ = fit.floats()
    th = np.linspace(0.0, 2 * math.pi, samples, endpoint=False)
    ux, uy = np.cos(th) / math.sqrt(a), np.sin(th) / math.sqrt(c)
    r = norm.eval_float(ux, uy)
    return float(r.min()), float(r.max())
