"""The diagonal flow picture of best approximations.

A vector ``v`` gives the unimodular lattice ``L_v = l_v Z^3`` with
``l_v (p, q) = (p - q v, q)``.  Along ``g_t = diag(e^t, e^t, e^{-2t})`` the
first minimum for the norm ``||(x, z)||* = max(||x||, |z|)`` has its local
maxima where the vector of one best approximation takes over from the
next, at ``e^{3t} = q_{n+1} / r_n``, with value ``(q_{n+1} r_n^2)^{1/3}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import mpmath

from .certified import CReal
from .norms import NormSpec
from .oracle import Approx, lattice_min, offset

DPS = 50
SMALL_Q = 64


def flow_basis(v: Sequence[Fraction]) -> list[list[Fraction]]:
    """The matrix ``l_v``; its determinant is 1."""
    v1, v2 = Fraction(v[0]), Fraction(v[1])
    return [[Fraction(1), Fraction(0), -v1], [Fraction(0), Fraction(1), -v2],
            [Fraction(0), Fraction(0), Fraction(1)]]


def flow_det(v: Sequence[Fraction]) -> Fraction:
    (a, b, c), (d, e, f), (g, h, i) = flow_basis(v)
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def star_norm(norm: NormSpec, x: Sequence, z) -> CReal:
    """``max(||x||, |z|)``."""
    a = norm.value(x)
    b = abs(CReal.of(z) if not isinstance(z, CReal) else z)
    s = (a - b).sign()
    if s is None:
        return a
    return a if s >= 0 else b


def _mpf(x: CReal) -> mpmath.mpf:
    lo = x.lower(4 * DPS)
    with mpmath.workdps(DPS):
        return mpmath.mpf(lo.numerator) / lo.denominator


@dataclass(frozen=True)
class Lambda1:
    t: mpmath.mpf
    value: mpmath.mpf
    witness: Approx

    @property
    def bounds(self) -> tuple[mpmath.mpf, mpmath.mpf]:
        # every ingredient is accurate to far more than this relative slack
        with mpmath.workdps(DPS):
            rel = mpmath.mpf(10) ** (-(DPS - 10))
            return self.value * (1 - rel), self.value * (1 + rel)


def candidate_set(v: Sequence, norm: NormSpec, hints: Iterable[Approx],
                  small_q: int = SMALL_Q) -> list[tuple[Approx, mpmath.mpf]]:
    """Hint vectors and the nearest points for every ``q <= small_q``, with their distances."""
    seen: dict[tuple[int, tuple[int, int]], mpmath.mpf] = {}
    pts = list(hints)
    for q in range(1, small_q + 1):
        _, p = lattice_min(v, q, norm)
        pts.append(Approx(q, p))
    for a in pts:
        key = (a.q, tuple(a.p))
        if key not in seen:
            seen[key] = _mpf(norm.value(offset(v, a.q, a.p)))
    out = [(Approx(q, p), r) for (q, p), r in seen.items()]
    # q = 0: the shortest non-zero integer vectors
    unit = min((_mpf(norm.value(u)), u) for u in ((1, 0), (0, 1), (1, 1), (1, -1)))
    out.append((Approx(0, unit[1]), unit[0]))
    return out


def lambda1_at(v: Sequence, t, norm: NormSpec, hints: Sequence[Approx],
               cands: list | None = None) -> Lambda1:
    """First minimum of ``g_t L_v`` over the hint set plus small denominators."""
    with mpmath.workdps(DPS):
        t = mpmath.mpf(t)
        et, e2t = mpmath.exp(t), mpmath.exp(-2 * t)
        cands = cands if cands is not None else candidate_set(v, norm, hints)
        best = None
        for a, r in cands:
            val = max(et * r, e2t * a.q)
            if best is None or val < best[0] or (val == best[0] and a.q < best[1].q):
                best = (val, a)
        return Lambda1(t, best[0], best[1])


@dataclass(frozen=True)
class MinimaRecord:
    n: int
    t: mpmath.mpf
    lambda1: mpmath.mpf
    q_next: int
    r2: CReal
    witness: Approx
    initial: bool = False

    @property
    def identity_error(self) -> float:
        """Relative error of ``lambda1^3 = q_{n+1} r_n^2`` (NaN for the initial record)."""
        if self.initial:
            return float("nan")
        with mpmath.workdps(DPS):
            rhs = self.q_next * _mpf(self.r2)
            return float(abs(self.lambda1 ** 3 - rhs) / rhs)


def flow_maxima(v: Sequence, seq: Sequence[Approx], norm: NormSpec) -> list[MinimaRecord]:
    """The local maxima ``t_{n+1} = (1/3) ln(q_{n+1} / r_n)`` with ``lambda1`` there.

    ``lambda1`` is evaluated by minimising over the candidate set, not from
    the closed form, so the identity is a genuine check.  A maximum at
    ``t = 0`` is emitted as a flagged record when the curve starts by
    decreasing.
    """
    cands = candidate_set(v, norm, seq)
    out: list[MinimaRecord] = []
    with mpmath.workdps(DPS):
        l0 = lambda1_at(v, 0, norm, seq, cands)
        l1 = lambda1_at(v, mpmath.mpf(10) ** -6, norm, seq, cands)
        if l1.value < l0.value:
            out.append(MinimaRecord(-1, l0.t, l0.value, seq[0].q, CReal.of(0), l0.witness, True))
        for n in range(len(seq) - 1):
            cur, nxt = seq[n], seq[n + 1]
            r = norm.value(offset(v, cur.q, cur.p))
            rf = _mpf(r)
            if rf == 0:
                break
            t = mpmath.log(nxt.q / rf) / 3
            lam = lambda1_at(v, t, norm, seq, cands)
            out.append(MinimaRecord(n, t, lam.value, nxt.q, norm.square(offset(v, cur.q, cur.p)),
                                    lam.witness))
    return out


def flow_curve(v: Sequence, seq: Sequence[Approx], norm: NormSpec, t_max,
               points: int = 400) -> list[Lambda1]:
    """``lambda1(g_t L_v)`` on an even grid of ``[0, t_max]``."""
    cands = candidate_set(v, norm, seq)
    with mpmath.workdps(DPS):
        t_max = mpmath.mpf(t_max)
        return [lambda1_at(v, t_max * k / (points - 1), norm, seq, cands) for k in range(points)]


def between_maxima(v: Sequence, seq: Sequence[Approx], norm: NormSpec,
                   maxima: Sequence[MinimaRecord], points: int = 100) -> list[tuple[int, float]]:
    """Largest excess of ``lambda1`` over the neighbouring maxima on each gap.

    Returns ``(n, excess)`` pairs; a unimodal curve gives non-positive excess.
    """
    cands = candidate_set(v, norm, seq)
    regular = [m for m in maxima if not m.initial]
    out = []
    with mpmath.workdps(DPS):
        for a, b in zip(regular, regular[1:]):
            cap = max(a.lambda1, b.lambda1)
            worst = mpmath.mpf("-inf")
            for k in range(points):
                t = a.t + (b.t - a.t) * k / (points - 1)
                worst = max(worst, lambda1_at(v, t, norm, seq, cands).value - cap)
            out.append((a.n, float(worst)))
    return out


def coverage_ok(seq: Sequence[Approx], t) -> bool:
    """Is the hint sequence long enough for times up to ``t``?

    The sequence must reach denominators of order ``e^{3t}``.
    """
    with mpmath.workdps(DPS):
        return seq[-1].q >= mpmath.exp(3 * mpmath.mpf(t))
