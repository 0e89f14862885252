"""Adapted coordinates for one construction step.

Given three consecutive vectors ``w_{n-1}, w_{n-2}, w_{n-3}`` of an integer
basis, the frame map ``G`` (a shear, an ellipse-orthogonal rotation and an
optional reflection) sends

    w_{n-1}          -> (q, 0, 0)
    w_{n-2}          -> (q_{n-2}, L, 0)
    sign * w_{n-3}   -> (sign * q_{n-3}, u, H)

with ``q L H = 1``.  The ellipse is ``E(u) = sqrt(u1^2 + c u2^2)``, the
lower half of a sandwich with ``a = 1``.

All lattice images are of the form ``(alpha, A/L, B/L)`` with rational
``A, B``, so they are stored exactly in that scaled form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .certified import CReal, Number, PrecisionError, floor_of
from .lattice import det3
from .norms import EllipseFit

IntTriple = tuple[int, int, int]


@dataclass(frozen=True)
class Frame:
    c: Fraction
    D2: CReal
    w1: IntTriple
    w2: IntTriple
    w3: IntTriple
    sign: int
    v: tuple[Fraction, Fraction]
    d: tuple[Fraction, Fraction]
    L2: Fraction
    U: Fraction
    reflect: int

    @property
    def q(self) -> int:
        return self.w1[0]

    @property
    def q2(self) -> int:
        return self.w2[0]

    @property
    def q3(self) -> int:
        return self.w3[0]

    @property
    def L(self) -> CReal:
        return CReal.of(self.L2).sqrt()

    @property
    def H(self) -> CReal:
        return 1 / (self.q * self.L)

    @property
    def u(self) -> CReal:
        return self.U / self.L

    @property
    def D(self) -> CReal:
        return self.D2.sqrt()

    def ellipse2(self, t: Sequence[Fraction]) -> Fraction:
        return t[0] * t[0] + self.c * t[1] * t[1]

    def scaled_image(self, w: Sequence[int]) -> tuple[int, Fraction, Fraction]:
        """``G(w) = (alpha, A/L, B/L)`` returned as ``(alpha, A, B)``."""
        al = w[0]
        f1, f2 = w[1] - al * self.v[0], w[2] - al * self.v[1]
        d1, d2 = self.d
        return al, d1 * f1 + self.c * d2 * f2, self.reflect * (d1 * f2 - d2 * f1)

    def image(self, w: Sequence[int]) -> tuple[CReal, CReal, CReal]:
        al, A, B = self.scaled_image(w)
        L = self.L
        return CReal.of(al), A / L, B / L

    def matrix_float(self) -> np.ndarray:
        """Floating point matrix of ``G`` (diagnostics and plots)."""
        L = float(self.L)
        d1, d2 = float(self.d[0]), float(self.d[1])
        c = float(self.c)
        vx, vy = float(self.v[0]), float(self.v[1])
        rot = np.array([[d1, c * d2], [-d2 * self.reflect, d1 * self.reflect]]) / L
        shear = np.array([[1.0, 0, 0], [-vx, 1, 0], [-vy, 0, 1]])
        block = np.eye(3)
        block[1:, 1:] = rot
        return block @ shear


class FrameError(ValueError):
    pass


def build_frame(w1: Sequence[int], w2: Sequence[int], w3: Sequence[int], sign: int,
                fit: EllipseFit) -> Frame:
    """Frame for the step after ``w1 = w_{n-1}`` (``w2``, ``w3`` earlier).

    ``fit`` must be normalised to ``a = 1`` with a rational ``c``.
    """
    if sign not in (1, -1):
        raise FrameError("sign must be +1 or -1")
    if not (fit.a.is_exact and fit.a.exact == 1 and fit.c.is_exact):
        raise FrameError("the frame needs a fit with a = 1 and rational c")
    w1, w2, w3 = tuple(map(int, w1)), tuple(map(int, w2)), tuple(map(int, w3))
    if abs(det3([w1, w2, w3])) != 1:
        raise FrameError("the three vectors are not a basis of Z^3")
    if not (0 <= w3[0] <= w2[0] < w1[0]):
        raise FrameError("denominators must be non-negative and increasing")
    c = fit.c.exact
    q = w1[0]
    v = (Fraction(w1[1], q), Fraction(w1[2], q))
    d = (w2[1] - w2[0] * v[0], w2[2] - w2[0] * v[1])
    L2 = d[0] * d[0] + c * d[1] * d[1]
    e = (sign * (w3[1] - w3[0] * v[0]), sign * (w3[2] - w3[0] * v[1]))
    U = d[0] * e[0] + c * d[1] * e[1]
    B = d[0] * e[1] - d[1] * e[0]
    reflect = 1 if B > 0 else -1
    frame = Frame(c, fit.D2, w1, w2, w3, sign, v, d, L2, U, reflect)
    # q L H = 1 in scaled form: H = reflect*B/L, so q * reflect * B must be 1
    if q * reflect * B != 1:
        raise FrameError("frame height does not satisfy q L H = 1")
    return frame


def frame_identities(frame: Frame) -> dict[str, Fraction]:
    """Exact residuals of the defining identities (all should be zero)."""
    a1, A1, B1 = frame.scaled_image(frame.w1)
    a2, A2, B2 = frame.scaled_image(frame.w2)
    w3s = tuple(frame.sign * x for x in frame.w3)
    a3, A3, B3 = frame.scaled_image(w3s)
    return {
        "w1_image": abs(A1) + abs(B1) + abs(a1 - frame.q),
        "w2_image": abs(A2 - frame.L2) + abs(B2) + abs(a2 - frame.q2),
        "w3_height": frame.q * B3 - 1,
        "w3_u": A3 - frame.U,
    }


def isometry_defect(frame: Frame, s: Sequence[Fraction], t: Sequence[Fraction]) -> Fraction:
    """``E(G(0, s-t))^2 - E(s-t)^2``, exactly."""
    diff = (Fraction(s[0]) - Fraction(t[0]), Fraction(s[1]) - Fraction(t[1]))
    d1, d2 = frame.d
    A = d1 * diff[0] + frame.c * d2 * diff[1]
    B = d1 * diff[1] - d2 * diff[0]
    return (A * A + frame.c * B * B) / frame.L2 - frame.ellipse2(diff)


# ---------------------------------------------------------------------------
# the map f2 and the region B2


def f2_map(x: Number, y: Number, frame: Frame) -> tuple[CReal, CReal, CReal]:
    """``(x, y) -> (H Theta^2 / (q y), H x / q, H)`` with ``Theta^2 = x^2 + c q^2``."""
    x, y = CReal.of(x), CReal.of(y)
    q, H = frame.q, frame.H
    theta2 = x * x + frame.c * q * q
    return H * theta2 / (q * y), H * x / q, H


def f2_inverse(xp: Number, yp: Number, frame: Frame) -> tuple[CReal, CReal]:
    xp, yp = CReal.of(xp), CReal.of(yp)
    q, H = frame.q, frame.H
    x = q * yp / H
    y = H * (x * x + frame.c * q * q) / (q * xp)
    return x, y


def preimage_scaled(frame: Frame, w: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Exact ``(x, eta)`` with ``(x, eta L) = f2^{-1}(G(w))`` for a plane-H point.

    ``x = q^2 A`` and ``eta = (x^2 + c q^2) / (q^2 L^2 q_w)``, both rational.
    """
    al, A, B = frame.scaled_image(w)
    if frame.q * B != 1:
        raise FrameError("point does not lie on the first plane above the base")
    q = frame.q
    x = q * q * A
    eta = (x * x + frame.c * q * q) / (q * q * frame.L2 * al)
    return x, eta


def quad_coefficients(frame: Frame, x: Number, y: Number):
    """Coefficients of ``F_{x,y}(s, i) = A_ss s^2 + 2 A_si s i + A_ii i^2 + K``."""
    x, y = CReal.of(x), CReal.of(y)
    q, q2, L = frame.q, frame.q2, frame.L
    ass = (q * y) ** 2
    aii = frame.c * (L * q) ** 2 + (L * x) ** 2 - 2 * L * q2 * x * y + (q2 * y) ** 2
    asi = q * q2 * y * y - L * q * x * y
    k = -frame.D2 * (q * y) ** 2
    return ass, asi, aii, k


def quad_value(frame: Frame, x: Number, y: Number, s: int, i: int) -> CReal:
    """``F_{x,y}(s, i)`` evaluated from its definition."""
    x, y = CReal.of(x), CReal.of(y)
    q, L = frame.q, frame.L
    beta = s * q + i * frame.q2
    zeta = i * L
    return (beta * beta - frame.D2 * q * q) * y * y + zeta * zeta * x * x \
        - 2 * zeta * beta * x * y + frame.c * (zeta * q) ** 2


INSIDE, OUTSIDE, UNDECIDED = "inside", "outside", "undecided"


def _integer_in(lo: CReal, hi: CReal) -> str:
    """Is there an integer in ``[lo, hi]``?  ``"yes"``, ``"no"`` or ``"?"``."""
    try:
        n = floor_of(hi)
    except PrecisionError:
        return "?"
    s = (lo - n).sign()
    if s is None:
        return "?"
    return "yes" if s <= 0 else "no"


def b2_contains_eta(frame: Frame, x: Number, eta: Number) -> str:
    """Membership of ``(x, eta L)`` in the region B2.

    ``F_{s,i} = L^2 (i x - beta eta)^2 - q^2 L^2 (D^2 eta^2 - c i^2)``, so a
    point is outside exactly when for some ``i >= 1`` with ``c i^2 <= D^2
    eta^2`` an integer ``s`` satisfies ``|i x - (s q + i q2) eta| <= q rho_i``
    with ``rho_i = sqrt(D^2 eta^2 - c i^2)``.  This set is finite.
    """
    x, eta = CReal.of(x), CReal.of(eta)
    sg = eta.sign()
    if sg is None:
        return UNDECIDED
    if sg == 0:
        return INSIDE
    if sg < 0:
        x, eta = -x, -eta
    q, q2, c = frame.q, frame.q2, frame.c
    de2 = frame.D2 * eta * eta
    undecided = False
    i = 1
    while True:
        room = de2 - c * i * i
        s = room.sign()
        if s is None:
            undecided = True
        elif s < 0:
            break
        rho = room.sqrt() if s > 0 else CReal.of(0)
        centre = (i * x - i * q2 * eta) / (q * eta)
        half = rho / eta
        verdict = _integer_in(centre - half, centre + half)
        if verdict == "yes":
            return OUTSIDE
        if verdict == "?":
            undecided = True
        i += 1
    return UNDECIDED if undecided else INSIDE


def b2_contains(x: Number, y: Number, frame: Frame) -> str:
    return b2_contains_eta(frame, x, CReal.of(y) / frame.L)


def boundary_point(frame: Frame) -> tuple[CReal, CReal]:
    """``kappa (q2 + q/2, L)`` with ``kappa = sqrt(4c / (4D^2 - 1))``."""
    kappa = (4 * frame.c / (4 * frame.D2 - 1)).sqrt()
    return kappa * (frame.q2 + Fraction(frame.q, 2)), kappa * frame.L


def boundary_diagnostic(D2: Number, s: int, i: int) -> CReal:
    """``s^2 + i^2 D^2 - s i - D^2``; non-negative, zero at ``(1, 1)``."""
    D2 = CReal.of(D2)
    return s * s + i * i * D2 - s * i - D2


# ---------------------------------------------------------------------------
# rectangles


@dataclass(frozen=True)
class Rect:
    """Rectangle ``[X - eps, X] x [Y2 - Delta, Y2]`` with ``Y2 = tau L``."""

    k: int
    X: Fraction
    eps: Fraction
    tau: Fraction

    @property
    def eta_low(self) -> Fraction:
        """``(Y2 - Delta_k) / L``."""
        return self.tau * self.X / (self.X + self.eps)

    def Y2(self, frame: Frame) -> CReal:
        return self.tau * frame.L

    def delta(self, frame: Frame) -> CReal:
        return self.Y2(frame) * self.eps / (self.X + self.eps)

    def corners(self, frame: Frame) -> list[tuple[CReal, CReal]]:
        Y2, dl = self.Y2(frame), self.delta(frame)
        X, e = CReal.of(self.X), self.eps
        return [(X, Y2), (X, Y2 - dl), (X - e, Y2 - dl), (X - e, Y2)]


def rect_k(frame: Frame, tau: Fraction, eps: Fraction, k: int) -> Rect:
    """The k-th rectangle, centred on the gap midpoint ``tau (q2 + q(k + 1/2))``."""
    X = Fraction(tau) * (frame.q2 + frame.q * (Fraction(k) + Fraction(1, 2)))
    return Rect(k, X, Fraction(eps), Fraction(tau))


def segment_in_b2(frame: Frame, eta: Fraction, x_lo: Fraction, x_hi: Fraction) -> bool:
    """Certify that the horizontal segment ``[x_lo, x_hi] x {eta L}`` lies in B2."""
    q, q2, c = frame.q, frame.q2, frame.c
    eta = Fraction(eta)
    if eta <= 0:
        return eta == 0
    de2 = frame.D2 * eta * eta
    i = 1
    while True:
        room = de2 - c * i * i
        s = room.sign()
        if s is None:
            return False
        if s < 0:
            return True
        rho = room.sqrt() if s > 0 else CReal.of(0)
        # bad s: |i x - (s q + i q2) eta| <= q rho for some x in the segment
        lo_s = math.floor((i * x_lo - i * q2 * eta) / (q * eta)) - 2
        hi_s = math.ceil((i * x_hi - i * q2 * eta) / (q * eta)) + 2
        for sv in range(lo_s, hi_s + 1):
            centre = (sv * q + i * q2) * eta
            # distance from the interval [i x_lo, i x_hi] to the centre
            if i * x_lo <= centre <= i * x_hi:
                return False
            gap = min(abs(i * x_lo - centre), abs(i * x_hi - centre))
            sg = (q * rho - gap).sign()
            if sg is None or sg >= 0:
                return False
        i += 1


def rect_valid(frame: Frame, rect: Rect) -> bool:
    """Certify ``rect`` inside B2.

    The rectangle lies in the union of the segments ``t * S`` for
    ``t in (0, 1]`` where ``S = [X - eps, X + eps] x {Y2}``; B2 is star
    shaped, so it is enough that ``S`` lies in B2.  The four corners are
    also checked individually.
    """
    if not segment_in_b2(frame, rect.tau, rect.X - rect.eps, rect.X + rect.eps):
        return False
    for cx, cy in rect.corners(frame):
        if b2_contains(cx, cy, frame) != INSIDE:
            return False
    return True


def image_geometry(frame: Frame, rect: Rect) -> dict[str, CReal]:
    """Height of ``f2(rect)`` in the second coordinate and the step to ``k+1``."""
    H, q = frame.H, frame.q
    return {
        "height": rect.eps * H / q,
        "step": q * H * H * rect.Y2(frame),
    }


# ---------------------------------------------------------------------------
# equal cylinders


@dataclass(frozen=True)
class Cylinder:
    axis: tuple[float, float]
    length: float
    radius: float

    def contains(self, pts: np.ndarray, c: float) -> tuple[np.ndarray, np.ndarray]:
        """Membership and a signed slack (negative = inside) for points ``(a, t1, t2)``."""
        a = pts[:, 0]
        r1 = a * self.axis[0] - pts[:, 1]
        r2 = a * self.axis[1] - pts[:, 2]
        e = np.sqrt(r1 * r1 + c * r2 * r2)
        slack = np.maximum.reduce([e - self.radius, -a, a - self.length])
        return slack <= 0, slack


def cylinder_first(frame: Frame, xp: float, yp: float) -> Cylinder:
    q, H, D, c = frame.q, float(frame.H), float(frame.D), float(frame.c)
    return Cylinder((yp / xp, H / xp), abs(xp), D * q * math.sqrt(yp * yp + c * H * H) / abs(xp))


def cylinder_second(frame: Frame, x: float, y: float) -> Cylinder:
    q, H, D, c = frame.q, float(frame.H), float(frame.D), float(frame.c)
    th2 = x * x + c * q * q
    return Cylinder((x * y / th2, q * y / th2), H * th2 / (q * abs(y)), D * q * abs(y) / math.sqrt(th2))


def cylinder_equal_check(frame: Frame, x: float, y: float, probes: int = 1000,
                         volume_samples: int = 200_000, seed: int = 0) -> dict[str, float]:
    """Compare the two parametrisations of the same cylinder.

    Probe points are drawn around the cylinder; a disagreement is counted
    only when both slacks are clear of zero by a relative tolerance.  The
    Monte Carlo volume is compared with ``D^2 * pi/sqrt(c) * |y| / L``.
    """
    rng = np.random.default_rng(seed)
    xp, yp, _ = (float(t) for t in f2_map(x, y, frame))
    one, two = cylinder_first(frame, xp, yp), cylinder_second(frame, x, y)
    c = float(frame.c)
    scale = max(one.radius, 1e-300)
    box_lo = np.array([-0.1 * one.length, -2 * scale, -2 * scale])
    box_hi = np.array([1.1 * one.length, 2 * scale, 2 * scale])

    def sample(n: int) -> np.ndarray:
        pts = rng.uniform(0, 1, size=(n, 3))
        a = box_lo[0] + pts[:, 0] * (box_hi[0] - box_lo[0])
        # sample transverse offsets around the axis so the box hugs the cylinder
        t1 = a * one.axis[0] + box_lo[1] + pts[:, 1] * (box_hi[1] - box_lo[1])
        t2 = a * one.axis[1] + (box_lo[2] + pts[:, 2] * (box_hi[2] - box_lo[2])) / math.sqrt(c)
        return np.column_stack([a, t1, t2])

    pts = sample(probes)
    in1, s1 = one.contains(pts, c)
    in2, s2 = two.contains(pts, c)
    tol = 1e-9 * max(one.length, one.radius, 1.0)
    clear = (np.abs(s1) > tol) & (np.abs(s2) > tol)
    disagreements = int(np.sum((in1 != in2) & clear))
    vol_pts = sample(volume_samples)
    inside, _ = two.contains(vol_pts, c)
    box_vol = (box_hi[0] - box_lo[0]) * (box_hi[1] - box_lo[1]) * (box_hi[2] - box_lo[2]) / math.sqrt(c)
    mc = float(inside.mean()) * box_vol
    formula = float(frame.D2) * math.pi / math.sqrt(c) * abs(y) / float(frame.L)
    return {
        "disagreements": disagreements,
        "inside_fraction": float(in1.mean()),
        "volume_mc": mc,
        "volume_formula": formula,
        "volume_rel_error": abs(mc - formula) / formula,
        "axis_gap": max(abs(one.axis[0] - two.axis[0]), abs(one.axis[1] - two.axis[1])),
        "length_gap": abs(one.length - two.length) / one.length,
        "radius_gap": abs(one.radius - two.radius) / one.radius,
    }
