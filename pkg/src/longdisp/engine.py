"""The inductive construction of vectors with prescribed displacement data.

Each step picks ``w_n = s w_{n-1} + i w_{n-2} + sign w_{n-3}`` so that the
point ``G(w_n)`` lands in ``f2`` of a rectangle inside B2, then checks the
step properties exactly, in this order:

    residue     ``q_n = z_n mod m``
    growth      ``n q_{n-1} < q_n``
    basis       ``det(w_{n-2}, w_{n-1}, w_n) = +-1``
    step        ``||v_n - v_{n-1}|| < 2^-n``
    ratios      ``2 R_{n,j} < R_{n,j-1}``
    lengths     ``sqrt(q_j) ||psi_{n,j}|| in int I_{j-1}``
    directions  ``psi_{n,j}`` in the open sector, neighbours in opposite quadrants
    cylinders   the cylinders of the new convergent contain no integer points
                besides the expected ones

where ``psi_{n,j} = q_{j-1} v_n - p_{j-1}`` and ``R_{n,j} = ||psi_{n,j}||``.
"""

from __future__ import annotations

import json
import logging
import math
import os
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Iterator, Sequence

from . import __version__
from .certified import CReal, PrecisionError, precision, rational_str, to_decimal
from .config import ConfigError, ConstructionConfig
from .frame import (INSIDE, Frame, b2_contains_eta, build_frame, frame_identities,
                    isometry_defect, preimage_scaled, rect_k, rect_valid)
from .lattice import cylinder_points_enum, det3, egcd
from .norms import EllipseFit, NormSpec, normalize_a1
from .oracle import Sector, cylinder_points_scan, opposite_quadrants

log = logging.getLogger(__name__)

IntTriple = tuple[int, int, int]

VERIFIED, GEOMETRIC, SKIPPED, FAILED = ("verified-exact", "certified-geometric",
                                        "skipped-budget", "failed")
PROPERTIES = ("residue", "growth", "basis", "step", "ratios", "lengths", "directions", "cylinders")

# candidates are only proposed when the newest length sits this far inside
# I_{n-1}, leaving room for later steps to move it
FRESH_INTERVAL_SHRINK = Fraction(1, 100)


class BudgetExhausted(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# base vectors and residues


def init_base(sector: Sector) -> tuple[IntTriple, IntTriple, IntTriple]:
    """``(w_0, w_{-1}, w_{-2})`` for the sector.

    ``p_{-1}`` is the shortest primitive vector with both coordinates
    non-zero strictly inside the sector's inner rays; ties go to the one
    nearest the axis.
    """
    best = None
    radius = 1
    while best is None:
        for x in range(-radius, radius + 1):
            for y in range(1, radius + 1):
                if x == 0 or math.gcd(x, y) != 1:
                    continue
                if not sector.contains((x, y)):
                    continue
                ang = abs(_line_angle(math.atan2(y, x) - sector.theta))
                key = (x * x + y * y, ang, -x, -y)
                if best is None or key < best[0]:
                    best = (key, (x, y))
        radius *= 2
    x, y = best[1]
    # keep the representative pointing along the sector axis
    if math.cos(math.atan2(y, x) - sector.theta) < 0:
        x, y = -x, -y
    g, a, b = egcd(x, y)
    assert g == 1
    w0, w1, w2 = (1, 0, 0), (0, x, y), (0, b, -a)
    assert abs(det3([w0, w1, w2])) == 1
    return w0, w1, w2


def _line_angle(a: float) -> float:
    """Angle difference between lines, in ``(-pi/2, pi/2]``."""
    a = math.fmod(a, math.pi)
    if a > math.pi / 2:
        a -= math.pi
    if a <= -math.pi / 2:
        a += math.pi
    return a


def residue_plan(zn: int, z1: int, z2: int, z3: int, m: int) -> tuple[int, int, int] | None:
    """Smallest ``(sign, s0, i0)`` with ``zn = s0 z1 + i0 z2 + sign z3 (mod m)``.

    ``+`` is tried before ``-``; ``None`` when no choice works.
    """
    for sign in (1, -1):
        for s0 in range(m):
            for i0 in range(m):
                if (s0 * z1 + i0 * z2 + sign * z3 - zn) % m == 0:
                    return sign, s0, i0
    return None


# ---------------------------------------------------------------------------
# state


@dataclass
class StepRecord:
    n: int
    w: IntTriple
    sign: int
    s0: int
    i0: int
    t0: Fraction
    tau: Fraction
    eps: Fraction
    k: int
    s: int
    i: int
    r: int
    status: dict[str, str]
    attempts: int = 1
    frame_checks: dict[str, Any] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def accepted(self) -> bool:
        return all(v in (VERIFIED, GEOMETRIC) for v in self.status.values())


@dataclass
class State:
    ws: list[IntTriple]
    records: list[StepRecord] = field(default_factory=list)

    @property
    def n(self) -> int:
        """Index of the newest vector."""
        return len(self.ws) - 3

    def w(self, j: int) -> IntTriple:
        return self.ws[j + 2]

    def q(self, j: int) -> int:
        return self.ws[j + 2][0]

    def p(self, j: int) -> tuple[int, int]:
        return self.ws[j + 2][1:]

    def v(self, j: int) -> tuple[Fraction, Fraction]:
        q, a, b = self.w(j)
        return Fraction(a, q), Fraction(b, q)

    def psi(self, n: int, j: int) -> tuple[Fraction, Fraction]:
        """``q_{j-1} v_n - p_{j-1}``."""
        vn = self.v(n)
        q, (a, b) = self.q(j - 1), self.p(j - 1)
        return q * vn[0] - a, q * vn[1] - b

    def extended(self, w: IntTriple) -> "State":
        return State(self.ws + [w], self.records)


def new_state(sector: Sector) -> State:
    w0, w1, w2 = init_base(sector)
    return State([w2, w1, w0])


# ---------------------------------------------------------------------------
# verification


@dataclass
class Engine:
    """Exact machinery shared by all steps of one construction."""

    norm: NormSpec
    fit: EllipseFit          # fit of the original norm
    fit1: EllipseFit         # the same fit rescaled to a = 1
    lam2: CReal              # square of the rescaling factor (= 1/a)
    sector: Sector
    config: ConstructionConfig

    @staticmethod
    def from_config(cfg: ConstructionConfig) -> "Engine":
        lam, fit1 = normalize_a1(cfg.fit)
        lam2 = 1 / cfg.fit.a
        if not fit1.c.is_exact:
            raise ConfigError("the normalised fit must have a rational second weight")
        return Engine(cfg.norm, cfg.fit, fit1, lam2, Sector(cfg.theta, cfg.delta), cfg)

    # intervals ------------------------------------------------------------
    def interval(self, j: int, fresh: bool = False) -> tuple[Fraction, Fraction]:
        lo, hi = self.config.intervals.interval(j)
        if fresh:
            w = (hi - lo) * FRESH_INTERVAL_SHRINK
            lo, hi = lo + w, hi - w
        return lo, hi

    def in_interval_sq(self, value: CReal, j: int, fresh: bool = False) -> bool | None:
        """Is ``value`` in the open interval ``I_j^2``?  ``None`` if undecided."""
        lo, hi = self.interval(j, fresh)
        a, b = (value - lo * lo).sign(), (value - hi * hi).sign()
        if a is None or b is None:
            return None
        return a > 0 and b < 0

    # the individual properties -------------------------------------------
    def verify(self, state: State, w: IntTriple, frame: Frame | None = None) -> dict[str, str]:
        """Statuses of all step properties for ``w`` as ``w_n``; stops at the first failure."""
        n = state.n + 1
        st = state.extended(w)
        status = {key: SKIPPED for key in PROPERTIES}
        checks = [
            ("residue", lambda: self._residue_ok(n, w)),
            ("growth", lambda: n * state.q(n - 1) < w[0]),
            ("basis", lambda: abs(det3([st.w(n - 2), st.w(n - 1), st.w(n)])) == 1),
            ("step", lambda: self._step_small(st, n)),
            ("ratios", lambda: self._ratios_ok(st, n)),
            ("lengths", lambda: self._lengths_ok(st, n)),
            ("directions", lambda: self._directions_ok(st, n)),
        ]
        for key, fn in checks:
            try:
                ok = fn()
            except PrecisionError:
                ok = False
            status[key] = VERIFIED if ok else FAILED
            if not ok:
                return status
        try:
            status["cylinders"] = self._cylinders(st, n, frame)
        except PrecisionError:
            status["cylinders"] = FAILED
        return status

    def _residue_ok(self, n: int, w: IntTriple) -> bool:
        if self.config.residues is None:
            return True
        return w[0] % self.config.m == self.config.z(n)

    def _step_small(self, st: State, n: int) -> bool:
        a, b = st.v(n), st.v(n - 1)
        diff = (a[0] - b[0], a[1] - b[1])
        s = (self.norm.value(diff) - Fraction(1, 2 ** n)).sign()
        if s is None:
            raise PrecisionError("step length undecided")
        return s < 0

    def _ratios_ok(self, st: State, n: int) -> bool:
        for j in range(1, n + 1):
            u = st.psi(n, j)
            w = st.psi(n, j - 1) if j > 1 else tuple(-x for x in st.p(-1))
            if self.norm.compare((2 * u[0], 2 * u[1]), w) >= 0:
                return False
        return True

    def _lengths_ok(self, st: State, n: int) -> bool:
        for j in range(1, n + 1):
            val = st.q(j) * self.norm.square(st.psi(n, j))
            ok = self.in_interval_sq(val, j - 1)
            if not ok:
                return False
        return True

    def _directions_ok(self, st: State, n: int) -> bool:
        psis = [st.psi(n, j) for j in range(1, n + 1)]
        if not all(self.sector.contains(u) for u in psis):
            return False
        return all(opposite_quadrants(psis[t], psis[t + 1]) for t in range(len(psis) - 1))

    # cylinders -------------------------------------------------------------
    def _cylinders(self, st: State, n: int, frame: Frame | None = None) -> str:
        worst = VERIFIED
        for j in range(n, 0, -1):
            res = self.cylinder_status(st, n, j, frame if j == n else None)
            if res == FAILED:
                return FAILED
            if res == GEOMETRIC:
                worst = GEOMETRIC
            elif res == SKIPPED and worst != GEOMETRIC:
                worst = SKIPPED
        return worst

    def cylinder_status(self, st: State, n: int, j: int, frame: Frame | None = None,
                        route: str = "auto") -> str:
        """Closed cylinder ``Pi_{n,j}`` holds only ``{0, w_{j-1}, w_j - w_{j-1}, w_j}``,
        all of them on the boundary, and for ``j = n`` it holds all four.

        ``route`` is ``auto``, ``scan``, ``enum`` or ``geometric``.
        """
        qj = st.q(j)
        vn = st.v(n)
        ref = st.psi(n, j)
        big = qj > self.config.budgets.enum
        if route == "geometric" or (route == "auto" and big and j == n and frame is not None):
            if self.geometric_cylinder(st, n, frame):
                return GEOMETRIC
            if route == "geometric":
                return FAILED
        if route == "scan" or (route == "auto" and not big):
            pts = cylinder_points_scan(self.norm, vn, qj, ref)
        else:
            pts = cylinder_points_enum(self.norm, self.fit, vn, qj, ref)
        wj, wk = st.w(j), st.w(j - 1)
        allowed = {(0, (0, 0)), (wk[0], wk[1:]), (wj[0], wj[1:]),
                   (wj[0] - wk[0], (wj[1] - wk[1], wj[2] - wk[2]))}
        found = {(pt.alpha, pt.y) for pt in pts}
        if any(pt.interior for pt in pts) or not found <= allowed:
            return FAILED
        if j == n and found != allowed:
            return FAILED
        return VERIFIED

    def geometric_cylinder(self, st: State, n: int, frame: Frame) -> bool:
        """The newest cylinder through the frame.

        * slab: the cylinder's height above the base plane is below ``H``,
          so its interior meets only the planes at heights ``0`` and ``H``;
        * the point of B2 behind ``G(w_n)`` is inside B2, so the base plane
          meets the infinite ellipse cylinder only on the axis;
        * ``w -> w_n - w`` swaps the two planes and preserves the cylinder.
        """
        wn = st.w(n)
        R2 = self.norm.square(st.psi(n, n))
        # lam^2 R^2 < c H^2 with H^2 = 1/(q^2 L^2)
        slab = (self.lam2 * R2 * frame.q ** 2 * frame.L2 - frame.c).sign()
        if slab is None or slab >= 0:
            return False
        x, eta = preimage_scaled(frame, wn)
        if b2_contains_eta(frame, x, eta) != INSIDE:
            return False
        # the only axis points in the closed cylinder are 0 and w_{n-1}; the
        # mirror images are w_n and w_n - w_{n-1}, all exactly on the boundary
        q1 = st.q(n - 1)
        return 0 < q1 < wn[0]

    # ---------------------------------------------------------------------
    # one step

    def frame_for(self, state: State, sign: int) -> Frame:
        n = state.n + 1
        return build_frame(state.w(n - 1), state.w(n - 2), state.w(n - 3), sign, self.fit1)

    def tau_for(self, state: State, frame: Frame, j: int, nudge: Fraction) -> Fraction:
        """Height ``Y2/L`` aiming ``q_n ||psi_{n,n}||^2`` at a point of ``I_j^2``."""
        lo, hi = self.interval(j)
        mid = (lo * lo + hi * hi) / 2
        rad = (hi * hi - lo * lo) / 2
        n = state.n + 1
        d = frame.d
        nd2 = self.norm.square(d)
        nd2 = nd2.exact if nd2.is_exact else nd2.approx(96)
        return (mid + nudge * rad) * frame.L2 / nd2

    def find_eps(self, frame: Frame, tau: Fraction, steps: int = 60) -> Fraction | None:
        X0 = tau * (frame.q2 + Fraction(frame.q, 2))
        eps = X0 / 2
        for _ in range(steps):
            if rect_valid(frame, rect_k(frame, tau, eps, 0)):
                return eps
            eps /= 2
        return None

    def fresh_half_width(self, state: State, n: int) -> float:
        """Angular half-width allowed for ``psi_{n,n}`` when selecting candidates.

        It grows from the base vector's own offset ``a_0`` towards the inner
        sector width ``a_max`` as ``a_0 + (a_max - a_0)(1 - 2^-n)``.  Each new
        displacement converges to the previous one as ``i`` grows, and the
        previous one sits strictly inside the next allowance, so every step
        admits a tail of ``i`` values while the drift stays bounded.
        """
        sec = self.sector
        a_max = sec.delta * (1 - sec.margin)
        px, py = state.p(-1)
        a0 = abs(_line_angle(math.atan2(py, px) - sec.theta))
        return a0 + (a_max - a0) * (1 - 2.0 ** -n)

    def direction_start(self, state: State, sign: int, i0: int, m: int) -> int:
        """Least ``i = i0 mod m`` from which the newest displacement stays in its allowance.

        ``psi_{n,n}`` is parallel to ``i A + sign B``.  Once this vector is
        within a right angle of ``A`` its direction turns monotonically
        towards ``A`` as ``i`` grows, so "inside the allowance and on the
        side of ``A``" holds on a tail of ``i`` values, found by doubling
        and bisection.
        """
        n = state.n + 1
        A = _cross_vec(state, n - 1, n - 2)
        B = _cross_vec(state, n - 1, n - 3)
        extra = 1 - self.sector.margin - self.fresh_half_width(state, n) / self.sector.delta

        def ok(i: int) -> bool:
            u = (i * A[0] + sign * B[0], i * A[1] + sign * B[1])
            if u[0] * A[0] + u[1] * A[1] <= 0:
                return False
            return self.sector.contains(u, extra)

        def lift(i: int) -> int:
            # smallest value >= i in the residue class
            return i + ((i0 - i) % m)

        lo = lift(1)
        if ok(lo):
            return lo
        hi = lift(2)
        while not ok(hi):
            lo = hi
            hi = lift(2 * hi)
            if hi > 1 << 128:
                raise BudgetExhausted("the newest displacement never enters the sector")
        # invariant: not ok(lo), ok(hi)
        while hi - lo > m:
            mid = lift((lo + hi) // 2)
            if mid >= hi:
                break
            if ok(mid):
                hi = mid
            else:
                lo = mid
        return hi

    def candidates(self, state: State, frame: Frame, tau: Fraction, eps: Fraction,
                   s0: int, i0: int, m: int, stats: dict[str, int]) -> Iterator[tuple]:
        """Admitted ``(k, s, i, r, w)`` points of the rectangles, by increasing ``k``.

        For fixed ``i`` the point ``f2^{-1}(G(w))`` has first coordinate
        ``x = q^2 (i L^2 + U)``, so the rectangle index ``k`` and the
        allowed range of ``s`` follow by exact arithmetic.  The range of
        ``s`` is also cut to where the newest length lands in the shrunk
        interval, a condition that is re-checked during verification.
        """
        n = state.n + 1
        q, q2, q3, c, L2 = frame.q, frame.q2, frame.q3, frame.c, frame.L2
        sign = frame.sign
        w1, w2, w3 = state.w(n - 1), state.w(n - 2), state.w(n - 3)
        A = _cross_vec(state, n - 1, n - 2)
        B = _cross_vec(state, n - 1, n - 3)
        lo_I, hi_I = self.interval(n - 1, fresh=True)
        budgets = self.config.budgets
        i = self.direction_start(state, sign, i0, m)
        stats["i_start"] = i
        last_hit_k = None
        valid_k: set[int] = set()
        while True:
            x = q * q * (i * L2 + frame.U)
            # k with X2[k] = tau (q2 + q (k + 1/2)) in [x, x + eps]
            kf = (x / tau - q2) / q - Fraction(1, 2)
            k = math.ceil(kf)
            if last_hit_k is None:
                last_hit_k = max(k, 0)
            if k > budgets.k_max:
                raise BudgetExhausted(f"k exceeded the cap {budgets.k_max}")
            if k - last_hit_k > budgets.k_window:
                stats["stalled"] = stats.get("stalled", 0) + 1
                return
            if k < 0:
                i += m
                continue
            X = tau * (q2 + q * (k + Fraction(1, 2)))
            if X > x + eps:
                i += m
                continue
            if k not in valid_k:
                if not rect_valid(frame, rect_k(frame, tau, eps, k)):
                    stats["invalid_rect"] = stats.get("invalid_rect", 0) + 1
                    i += m
                    continue
                valid_k.add(k)
            theta2 = x * x + c * q * q
            qn_lo = theta2 / (q * q * L2 * tau)
            qn_hi = qn_lo * (X + eps) / X
            qn_lo = max(qn_lo, Fraction(n * q + 1))
            # newest length: q_n ||psi_{n,n}||^2 = ||i A + sign B||^2 / q_n
            num = (i * A[0] + sign * B[0], i * A[1] + sign * B[1])
            nsq = self.norm.square(num)
            scale = nsq.exact if nsq.is_exact else nsq.approx(96)
            qn_lo = max(qn_lo, scale / (hi_I * hi_I))
            if lo_I > 0:
                qn_hi = min(qn_hi, scale / (lo_I * lo_I))
            base = i * q2 + sign * q3
            s_lo = math.ceil((qn_lo - base) / q)
            s_hi = math.floor((qn_hi - base) / q)
            s_first = s_lo + ((s0 - s_lo) % m)
            for s in range(s_first, s_hi + 1, m):
                qn = s * q + base
                if not qn_lo <= qn <= qn_hi:
                    continue
                w = tuple(s * w1[t] + i * w2[t] + sign * w3[t] for t in range(3))
                last_hit_k = k
                stats["admitted"] = stats.get("admitted", 0) + 1
                yield k, s, i, s - s_lo, w
            i += m

    def step(self, state: State) -> StepRecord:
        cfg = self.config
        n = state.n + 1
        t_start = time.perf_counter()
        if cfg.residues is None:
            sign, s0, i0, m = 1, 0, 0, 1
        else:
            m = cfg.m
            plan = residue_plan(cfg.z(n), cfg.z(n - 1), cfg.z(n - 2), cfg.z(n - 3), m)
            if plan is None:
                raise ConfigError(f"residue chain is infeasible at index {n}")
            sign, s0, i0 = plan
        frame = self.frame_for(state, sign)
        kappa = self.fit1.kappa
        skip = cfg.skip(n)
        attempts = 0
        for t in range(cfg.budgets.tau_retries + 1):
            nudge = Fraction((t + 1) // 2 * (1 if t % 2 else -1), 16)
            tau = self.tau_for(state, frame, n - 1, nudge)
            t0 = CReal.of(tau) / kappa
            if not (0 < tau and (t0 - 1).sign() == -1):
                continue
            eps = self.find_eps(frame, tau)
            if eps is None:
                continue
            stats: dict[str, int] = {}
            passed = 0
            for k, s, i, r, w in self.candidates(state, frame, tau, eps, s0, i0, m, stats):
                attempts += 1
                status = self.verify(state, w, frame)
                if not all(v in (VERIFIED, GEOMETRIC) for v in status.values()):
                    log.debug("step %d: candidate k=%d i=%d s=%d rejected %s", n, k, i, s, status)
                    continue
                if passed < skip:
                    passed += 1
                    continue
                if w[0].bit_length() > cfg.budgets.q_bits:
                    raise BudgetExhausted(f"q_{n} exceeds {cfg.budgets.q_bits} bits")
                rec = StepRecord(n, w, sign, s0, i0, t0.approx(96), tau, eps, k, s, i, r,
                                 status, attempts, self.frame_report(frame),
                                 time.perf_counter() - t_start)
                return rec
            log.info("step %d: tau retry %d after %s", n, t + 1, stats)
        raise BudgetExhausted(f"no verified candidate at step {n}")

    def frame_report(self, frame: Frame) -> dict[str, Any]:
        ident = frame_identities(frame)
        qLH = CReal.of(frame.q) * frame.L * frame.H
        iso = max(abs(isometry_defect(frame, (Fraction(a), Fraction(b)), (Fraction(b), Fraction(-a))))
                  for a, b in ((1, 2), (3, -5), (7, 11)))
        return {
            "q": str(frame.q),
            "L2": rational_str(frame.L2),
            "qLH_error": float(abs(qLH - 1).upper(128)),
            "isometry_defect": float(iso),
            "identities_exact": all(val == 0 for val in ident.values()),
            "reflect": frame.reflect == -1,
        }

    def run(self, out_dir: str | None = None, on_step=None) -> "RunResult":
        cfg = self.config
        state = new_state(self.sector)
        error: str | None = None
        code = 0
        t0 = time.perf_counter()
        with precision(cfg.budgets.precision_bits):
            for _ in range(cfg.steps):
                try:
                    rec = self.step(state)
                except BudgetExhausted as exc:
                    error, code = str(exc), 3
                    break
                except PrecisionError as exc:
                    error, code = str(exc), 4
                    break
                state = State(state.ws + [rec.w], state.records + [rec])
                log.info("step %d accepted: q has %d digits", rec.n, len(str(rec.w[0])))
                if on_step is not None:
                    on_step(state, rec)
        result = RunResult(cfg, state, code, error, time.perf_counter() - t0)
        if out_dir is not None:
            write_run(self, result, out_dir)
        return result


def _cross_vec(state: State, a: int, b: int) -> tuple[int, int]:
    """``q_a p_b - q_b p_a`` (an integer vector)."""
    qa, pa = state.q(a), state.p(a)
    qb, pb = state.q(b), state.p(b)
    return qa * pb[0] - qb * pa[0], qa * pb[1] - qb * pa[1]


# ---------------------------------------------------------------------------
# results


@dataclass
class RunResult:
    config: ConstructionConfig
    state: State
    code: int
    error: str | None
    seconds: float

    @property
    def steps(self) -> int:
        return len(self.state.records)


def _interval_str(x: CReal, bits: int = 128) -> list[str]:
    if x.is_exact:
        s = to_decimal(x.exact, 30)
        return [s, s]
    return [to_decimal(x.lower(bits), 30), to_decimal(x.upper(bits), 30)]


def record_json(engine: Engine, state: State, rec: StepRecord) -> dict[str, Any]:
    n = rec.n
    st = State(state.ws[: n + 3])
    r2 = engine.norm.square(st.psi(n, n))
    return {
        "n": n,
        "q": str(rec.w[0]),
        "p": [str(rec.w[1]), str(rec.w[2])],
        "r2": rational_str(r2.exact) if r2.is_exact else _interval_str(r2),
        "sign": rec.sign, "s0": rec.s0, "i0": rec.i0,
        "t0": to_decimal(rec.t0, 20), "tau": rational_str(rec.tau),
        "eps": rational_str(rec.eps), "k": rec.k,
        "s": str(rec.s), "i": str(rec.i), "r": str(rec.r),
        "status": rec.status,
        "candidates_tried": rec.attempts,
        "frame": rec.frame_checks,
        "seconds": round(rec.seconds, 4),
    }


def beta_lengths(norm: NormSpec, state: State) -> list[CReal]:
    """``||beta_j(v_N)|| = sqrt(q_{j+1}) ||q_j v_N - p_j||`` for ``j < N``."""
    N = state.n
    out = []
    for j in range(N):
        out.append((state.q(j + 1) * norm.square(state.psi(N, j + 1))).sqrt())
    return out


def summary_json(engine: Engine, result: RunResult) -> dict[str, Any]:
    st = result.state
    N = st.n
    betas = beta_lengths(engine.norm, st) if N >= 1 else []
    v = st.v(N)
    return {
        "steps": result.steps,
        "exit_code": result.code,
        "error": result.error,
        "q": [str(st.q(j)) for j in range(N + 1)],
        "p": [[str(x) for x in st.p(j)] for j in range(N + 1)],
        "base": [list(map(str, st.w(-1))), list(map(str, st.w(-2)))],
        "v": [rational_str(v[0]), rational_str(v[1])],
        "beta_lengths": [_interval_str(b) for b in betas],
        "norm": engine.norm.to_json(),
        "seconds": round(result.seconds, 3),
    }


def write_run(engine: Engine, result: RunResult, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    st = result.state
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(result.config.to_json(), fh, indent=2)
    with open(os.path.join(out_dir, "steps.jsonl"), "w") as fh:
        for rec in st.records:
            fh.write(json.dumps(record_json(engine, st, rec)) + "\n")
    summary = summary_json(engine, result)
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2)
    betas = beta_lengths(engine.norm, st) if st.n >= 1 else []
    manifest = {
        "config_digest": result.config.digest(),
        "tool_version": __version__,
        "python": platform.python_version(),
        "files": ["config.json", "steps.jsonl", "summary.json"],
        "steps": result.steps,
        "beta_min": float(min(betas, key=float)) if betas else None,
        "beta_max": float(max(betas, key=float)) if betas else None,
        "q_bits": [st.q(j).bit_length() for j in range(st.n + 1)],
        "step_seconds": [round(r.seconds, 4) for r in st.records],
        "wall_seconds": round(result.seconds, 3),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2)


def run_config(cfg: ConstructionConfig, out_dir: str | None = None) -> RunResult:
    cfg.validate()
    return Engine.from_config(cfg).run(out_dir)
