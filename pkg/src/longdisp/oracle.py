"""Brute-force best approximations and direct checks.

Everything here is deliberately independent of the construction engine:
records come from scanning denominators one by one.  Floating point is
only used as a filter; every decision that could be affected by rounding
is redone in exact arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath
import numpy as np

from .certified import CReal
from .norms import NormSpec, Vec

IntVec = tuple[int, int]


@dataclass(frozen=True)
class Approx:
    """One best approximation: denominator ``q`` and numerator ``p``."""

    q: int
    p: IntVec


def _as_vec(v: Sequence) -> Vec:
    return (Fraction(v[0]), Fraction(v[1]))


def offset(v: Vec, q: int, p: Sequence[int]) -> Vec:
    """The displacement ``q v - p``."""
    return (q * v[0] - p[0], q * v[1] - p[1])


def _box_radius(norm: NormSpec, r_upper: float, i: int) -> Fraction:
    kb = norm.coord_bound()[i]
    return Fraction(kb * r_upper * (1 + 1e-9) + 1e-12)


def lattice_min(v: Sequence, q: int, norm: NormSpec) -> tuple[CReal, IntVec]:
    """Distance from ``q v`` to the integer lattice and the nearest point.

    Among equally near points the lexicographically smallest is returned.
    """
    v = _as_vec(v)
    cx, cy = q * v[0], q * v[1]
    p0 = (round(cx), round(cy))
    r0 = float(norm.value((cx - p0[0], cy - p0[1])).upper(64))
    bx, by = _box_radius(norm, r0, 0), _box_radius(norm, r0, 1)
    best: IntVec | None = None
    best_off: Vec | None = None
    for x in range(math.floor(cx - bx), math.ceil(cx + bx) + 1):
        for y in range(math.floor(cy - by), math.ceil(cy + by) + 1):
            off = (cx - x, cy - y)
            if best_off is None:
                best, best_off = (x, y), off
                continue
            s = norm.compare(off, best_off)
            if s < 0 or (s == 0 and (x, y) < best):
                best, best_off = (x, y), off
    assert best is not None and best_off is not None
    return norm.value(best_off), best


def _float_distances(norm: NormSpec, v: Vec, qs: np.ndarray, reach: float):
    """Approximate ``<q v>`` for an array of denominators.

    Returns the distances and an absolute error bound per entry.
    """
    fx = float(v[0] - math.floor(v[0]))
    fy = float(v[1] - math.floor(v[1]))
    cx, cy = qs * fx, qs * fy
    kx, ky = norm.coord_bound()
    wx, wy = int(math.ceil(kx * reach)) + 1, int(math.ceil(ky * reach)) + 1
    bx, by = np.floor(cx), np.floor(cy)
    best = np.full(qs.shape, np.inf)
    for dx in range(-wx, wx + 2):
        ux = cx - (bx + dx)
        for dy in range(-wy, wy + 2):
            d = norm.eval_float(ux, cy - (by + dy))
            np.minimum(best, d, out=best)
    # error of q*float(v) plus evaluation error, with a wide safety factor
    err = (qs * 4.0 + 4.0) * 2.0 ** -52 * (kx + ky + 2) * 4 + best * 1e-12
    return best, err


def best_sequence(v: Sequence, norm: NormSpec, q_max: int, guard: bool = False,
                  chunk: int = 1 << 20) -> list[Approx]:
    """All best approximations of ``v`` with denominator at most ``q_max``.

    ``q_0 = 1`` and each later ``q_n`` is the least denominator strictly
    improving on the previous distance.  With ``guard=True`` the call is
    refused when ``q_max`` exceeds the square root of the common denominator
    of ``v``, the range in which a rational input can stand in for the
    irrational vector it approximates.
    """
    v = _as_vec(v)
    if q_max < 1:
        return []
    if guard:
        den = math.lcm(v[0].denominator, v[1].denominator)
        if q_max > math.isqrt(den):
            raise ValueError(f"q_max={q_max} exceeds the guard bound {math.isqrt(den)}")
    r1, p1 = lattice_min(v, 1, norm)
    seq = [Approx(1, p1)]
    best_off = offset(v, 1, p1)
    if best_off == (0, 0):
        return seq
    reach = float(r1.upper(64))
    running = float(r1.upper(64))
    start = 2
    while start <= q_max:
        stop = min(q_max, start + chunk - 1)
        qs = np.arange(start, stop + 1, dtype=np.float64)
        d, err = _float_distances(norm, v, qs, reach)
        # a record needs d[q] below every earlier value; compare against the
        # running minimum of the float values, widened by the error bounds
        prev = np.minimum.accumulate(np.concatenate(([running], d[:-1])))
        flagged = np.nonzero(d - err <= prev * (1 + 1e-11) + err)[0]
        for idx in flagged:
            q = int(start + idx)
            _, p = lattice_min(v, q, norm)
            off = offset(v, q, p)
            if norm.compare(off, best_off) < 0:
                seq.append(Approx(q, p))
                best_off = off
                if off == (0, 0):
                    return seq
        running = min(running, float(d.min()))
        start = stop + 1
    return seq


def displacement(v: Sequence, seq: Sequence[Approx], n: int, kind: str = "long"):
    """Scaled displacement vector and its norm-free components.

    ``kind="short"`` scales ``q_n v - p_n`` by ``sqrt(q_n)``, ``kind="long"``
    by ``sqrt(q_{n+1})``.  Returns ``(scale, raw)`` where ``raw`` is the
    exact rational displacement and ``scale`` the square-root factor.
    """
    v = _as_vec(v)
    raw = offset(v, seq[n].q, seq[n].p)
    if kind == "short":
        q = seq[n].q
    elif kind == "long":
        if n + 1 >= len(seq):
            raise IndexError("the long displacement needs the next denominator")
        q = seq[n + 1].q
    else:
        raise ValueError(f"unknown displacement kind {kind!r}")
    return CReal.of(q).sqrt(), raw


def displacement_norm(norm: NormSpec, v: Sequence, seq: Sequence[Approx], n: int,
                      kind: str = "long") -> CReal:
    scale, raw = displacement(v, seq, n, kind)
    return scale * norm.value(raw)


# ---------------------------------------------------------------------------
# directions


@dataclass(frozen=True)
class Sector:
    """The double cone of directions within ``delta`` of the angle ``theta``.

    Membership is decided exactly against two rational rays placed a
    hundredth of ``delta`` inside the boundary.
    """

    theta: float
    delta: float
    margin: float = 0.01

    def rays(self, extra: float = 0.0) -> tuple[Vec, Vec] | None:
        half = self.delta * (1 - self.margin - extra)
        if half >= math.pi / 2:
            return None
        with mpmath.workdps(40):
            lo = _rational_direction(self.theta - half)
            hi = _rational_direction(self.theta + half)
        return lo, hi

    def contains(self, u: Sequence, extra: float = 0.0) -> bool:
        u = _as_vec(u)
        if u == (0, 0):
            return False
        rays = self.rays(extra)
        if rays is None:
            return True
        lo, hi = rays
        for s in (1, -1):
            x, y = s * u[0], s * u[1]
            if lo[0] * y - lo[1] * x > 0 and x * hi[1] - y * hi[0] > 0:
                return True
        return False


def _rational_direction(angle: float) -> Vec:
    c, s = mpmath.cos(angle), mpmath.sin(angle)
    return (Fraction(str(c)).limit_denominator(10 ** 15),
            Fraction(str(s)).limit_denominator(10 ** 15))


def _signs(u: Sequence) -> tuple[int, int]:
    return ((u[0] > 0) - (u[0] < 0), (u[1] > 0) - (u[1] < 0))


def opposite_quadrants(u: Sequence, w: Sequence) -> bool:
    """Both vectors strictly inside quadrants, and those quadrants opposite."""
    su, sw = _signs(u), _signs(w)
    return 0 not in su and su[0] == -sw[0] and su[1] == -sw[1]


def same_quadrant(u: Sequence, w: Sequence) -> bool:
    su, sw = _signs(u), _signs(w)
    return 0 not in su and su == sw


@dataclass(frozen=True)
class DirectionReport:
    in_sector: tuple[bool, ...]
    opposite: tuple[bool, ...]

    @property
    def ok(self) -> bool:
        return all(self.in_sector) and all(self.opposite)


def direction_check(vectors: Sequence[Sequence], sector: Sector) -> DirectionReport:
    """Sector membership of each vector and quadrant flips between neighbours."""
    vs = [_as_vec(u) for u in vectors]
    inside = tuple(sector.contains(u) for u in vs)
    opp = tuple(opposite_quadrants(vs[i], vs[i + 1]) for i in range(len(vs) - 1))
    return DirectionReport(inside, opp)


# ---------------------------------------------------------------------------
# cylinders


@dataclass(frozen=True)
class CylinderPoint:
    alpha: int
    y: IntVec
    interior: bool


def cylinder_points_scan(norm: NormSpec, v: Sequence, length: int,
                         ref: Sequence) -> list[CylinderPoint]:
    """Integer points of ``{0 <= a <= length, ||a v - y|| <= ||ref||}``.

    Every ``a`` is visited.  A point is *interior* when ``0 < a < length``
    and the inequality is strict.
    """
    v = _as_vec(v)
    ref = _as_vec(ref)
    fl = (math.floor(v[0]), math.floor(v[1]))
    frac = (v[0] - fl[0], v[1] - fl[1])
    radius = float(norm.value(ref).upper(64))
    out: list[CylinderPoint] = []
    chunk = 1 << 20
    kx, ky = norm.coord_bound()
    wx, wy = int(math.ceil(kx * radius)) + 1, int(math.ceil(ky * radius)) + 1
    fx, fy = float(frac[0]), float(frac[1])
    for start in range(0, length + 1, chunk):
        stop = min(length, start + chunk - 1)
        al = np.arange(start, stop + 1, dtype=np.float64)
        cx, cy = al * fx, al * fy
        bx, by = np.floor(cx), np.floor(cy)
        err = (al * 4.0 + 4.0) * 2.0 ** -52 * (kx + ky + 2) * 4 + radius * 1e-12
        for dx in range(-wx, wx + 2):
            ux = cx - (bx + dx)
            for dy in range(-wy, wy + 2):
                d = norm.eval_float(ux, cy - (by + dy))
                hits = np.nonzero(d - err <= radius * (1 + 1e-12))[0]
                for idx in hits:
                    a = int(start + idx)
                    yx = int(bx[idx]) + dx
                    yy = int(by[idx]) + dy
                    off = (a * frac[0] - yx, a * frac[1] - yy)
                    s = norm.compare(off, ref)
                    if s <= 0:
                        y = (yx + a * fl[0], yy + a * fl[1])
                        out.append(CylinderPoint(a, y, s < 0 and 0 < a < length))
    out.sort(key=lambda pt: (pt.alpha, pt.y))
    return out


@dataclass(frozen=True)
class Prop4Result:
    holds: bool
    matches_brute_force: bool
    checked: int
    reason: str = ""


def prop4_verify(v: Sequence, candidate: Sequence[Approx], norm: NormSpec,
                 budget: int) -> Prop4Result:
    """Empty-cylinder criterion for a candidate best-approximation sequence.

    For each ``n >= 1`` with ``q_n <= budget`` the cylinder of length ``q_n``
    whose radius is the previous distance must have no integer point in
    its interior, denominators must increase and distances must decrease.
    The verdict is compared with a direct scan of all denominators.
    """
    v = _as_vec(v)
    cand = [c for c in candidate if c.q <= budget]
    reason = ""
    holds = bool(cand) and cand[0].q == 1
    if not holds:
        reason = "sequence must start at q = 1"
    checked = 0
    for n in range(1, len(cand)):
        if not holds:
            break
        prev, cur = cand[n - 1], cand[n]
        if cur.q <= prev.q:
            holds, reason = False, f"denominators not increasing at n={n}"
            break
        ref = offset(v, prev.q, prev.p)
        if norm.compare(offset(v, cur.q, cur.p), ref) >= 0:
            holds, reason = False, f"distances not decreasing at n={n}"
            break
        pts = cylinder_points_scan(norm, v, cur.q, ref)
        bad = [pt for pt in pts if pt.interior]
        if bad:
            holds, reason = False, f"interior point {bad[0]} at n={n}"
            break
        checked = n
    if holds and cand:
        # the last member must itself be a nearest point at its denominator
        last = cand[-1]
        r, p = lattice_min(v, last.q, norm)
        if norm.compare(offset(v, last.q, last.p), offset(v, last.q, p)) > 0:
            holds, reason = False, "last numerator is not a nearest point"
        # w_0 must be nearest too
        _, p0 = lattice_min(v, 1, norm)
        if norm.compare(offset(v, 1, cand[0].p), offset(v, 1, p0)) > 0:
            holds, reason = False, "first numerator is not a nearest point"
    brute = best_sequence(v, norm, budget)
    matches = [(c.q, c.p) for c in cand] == [(b.q, b.p) for b in brute]
    return Prop4Result(holds, matches, checked, reason)


def dirichlet_ratios(v: Sequence, seq: Sequence[Approx], norm: NormSpec) -> list[CReal]:
    """``sqrt(q_{n+1}) * ||q_n v - p_n||`` along a sequence."""
    return [displacement_norm(norm, v, seq, n) for n in range(len(seq) - 1)]


def random_rationals(rng: np.random.Generator, count: int, den_bits: int = 30) -> list[Vec]:
    """Pseudo-random rational points of the unit square with a shared denominator."""
    out = []
    for _ in range(count):
        den = int(rng.integers(1 << (den_bits - 1), 1 << den_bits))
        out.append((Fraction(int(rng.integers(1, den)), den),
                    Fraction(int(rng.integers(1, den)), den)))
    return out


def iter_q(seq: Iterable[Approx]) -> list[int]:
    return [a.q for a in seq]
